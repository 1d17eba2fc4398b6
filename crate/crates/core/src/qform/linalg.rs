//! Dense symmetric matrices: cyclic Jacobi eigensolver, symmetric square
//! root, Cholesky factorization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major symmetric matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

/// Soft limit for the O(n³)-per-sweep eigensolver.
pub const MAX_DIM: usize = 512;

impl SymMatrix {
    /// Builds a symmetric matrix from row-major entries. Entries that differ
    /// from their transpose by more than 1e-12 (relative to the largest
    /// entry) are rejected; smaller asymmetries are averaged away.
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParams(
                "matrix dimension must be positive".into(),
            ));
        }
        if dim > MAX_DIM {
            return Err(Error::InvalidParams(format!(
                "matrix dimension {dim} exceeds {MAX_DIM}"
            )));
        }
        if data.len() != dim * dim {
            return Err(Error::InvalidParams(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "matrix entry {bad} is not finite"
            )));
        }
        let scale = data.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        for i in 0..dim {
            for j in 0..i {
                let (a, b) = (data[i * dim + j], data[j * dim + i]);
                if (a - b).abs() > 1e-12 * scale {
                    return Err(Error::InvalidParams(format!(
                        "matrix is not symmetric: entry ({i},{j}) = {a} but ({j},{i}) = {b}"
                    )));
                }
            }
        }
        Ok(Self::symmetrized(dim, data))
    }

    pub(crate) fn symmetrized(dim: usize, mut data: Vec<f64>) -> Self {
        for i in 0..dim {
            for j in 0..i {
                let avg = 0.5 * (data[i * dim + j] + data[j * dim + i]);
                data[i * dim + j] = avg;
                data[j * dim + i] = avg;
            }
        }
        Self { dim, data }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidParams(
                "matrix rows must form a square array".into(),
            ));
        }
        Self::new(dim, rows.into_iter().flatten().collect())
    }

    pub fn identity(dim: usize) -> Self {
        Self::diag(&vec![1.0; dim])
    }

    pub fn diag(values: &[f64]) -> Self {
        let dim = values.len();
        let mut data = vec![0.0; dim * dim];
        for (i, v) in values.iter().enumerate() {
            data[i * dim + i] = *v;
        }
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Conjugation T A Tᵀ by a square (not necessarily symmetric) matrix.
    pub fn congruence(&self, t: &[f64]) -> Self {
        let n = self.dim;
        assert_eq!(t.len(), n * n);
        let ta = matmul(t, &self.data, n);
        let tt = transpose(t, n);
        Self::symmetrized(n, matmul(&ta, &tt, n))
    }

    /// Lower-triangular L with L Lᵀ = A, row-major.
    pub fn cholesky(&self) -> Result<Vec<f64>> {
        let n = self.dim;
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if !(s > 0.0) {
                        return Err(Error::NotPositiveDefinite(format!(
                            "Cholesky pivot {i} is {s}"
                        )));
                    }
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        Ok(l)
    }

    /// ln det A via Cholesky.
    pub fn log_det(&self) -> Result<f64> {
        let l = self.cholesky()?;
        Ok((0..self.dim).map(|i| 2.0 * l[i * self.dim + i].ln()).sum())
    }
}

impl TryFrom<Vec<Vec<f64>>> for SymMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(rows)
    }
}

impl From<SymMatrix> for Vec<Vec<f64>> {
    fn from(m: SymMatrix) -> Self {
        m.rows()
    }
}

pub(crate) fn matmul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    out
}

pub(crate) fn transpose(a: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[j * n + i] = a[i * n + j];
        }
    }
    out
}

/// Eigenvalues in ascending order with orthonormal eigenvectors stored as
/// the columns of a row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomp {
    pub values: Vec<f64>,
    pub vectors: Vec<f64>,
}

impl EigenDecomp {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// V diag(f(w)) Vᵀ.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let n = self.dim();
        let fw: Vec<f64> = self.values.iter().map(|&w| f(w)).collect();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let s: f64 = (0..n)
                    .map(|k| self.vectors[i * n + k] * fw[k] * self.vectors[j * n + k])
                    .sum();
                data[i * n + j] = s;
                data[j * n + i] = s;
            }
        }
        SymMatrix { dim: n, data }
    }
}

const MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi eigensolver. Sweeps until the off-diagonal Frobenius mass
/// drops below 1e-14 ‖A‖_F.
pub fn jacobi_eigen(a: &SymMatrix) -> Result<EigenDecomp> {
    let n = a.dim;
    let mut m = a.data.clone();
    let mut v = SymMatrix::identity(n).data;
    let norm = a.frobenius_norm();
    let target = 1e-14 * norm;

    let off = |m: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[i * n + j] * m[i * n + j];
                }
            }
        }
        s.sqrt()
    };

    let mut converged = norm == 0.0;
    for sweep in 0..MAX_SWEEPS {
        if converged || off(&m) <= target {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                // negligible against both diagonal entries: drop it
                if sweep > 3
                    && (100.0 * apq).abs() <= f64::EPSILON * app.abs()
                    && (100.0 * apq).abs() <= f64::EPSILON * aqq.abs()
                {
                    m[p * n + q] = 0.0;
                    m[q * n + p] = 0.0;
                    continue;
                }
                let theta = 0.5 * (aqq - app) / apq;
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged && off(&m) > target {
        return Err(Error::non_convergence(format!(
            "Jacobi eigensolver after {MAX_SWEEPS} sweeps"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].total_cmp(&m[j * n + j]));
    let values = order.iter().map(|&i| m[i * n + i]).collect();
    let mut vectors = vec![0.0; n * n];
    for (col, &src) in order.iter().enumerate() {
        for row in 0..n {
            vectors[row * n + col] = v[row * n + src];
        }
    }
    Ok(EigenDecomp { values, vectors })
}

/// Eigendecomposition with every eigenvalue checked against
/// dim · 1e-14 · λ_max.
pub fn posdef_eigen(a: &SymMatrix) -> Result<EigenDecomp> {
    let eig = jacobi_eigen(a)?;
    let lmax = eig.values.last().copied().unwrap_or(0.0);
    let threshold = a.dim as f64 * 1e-14 * lmax;
    match eig.values.first() {
        Some(&lmin) if lmax > 0.0 && lmin > threshold => Ok(eig),
        Some(&lmin) => Err(Error::NotPositiveDefinite(format!(
            "smallest eigenvalue {lmin:e} (largest {lmax:e})"
        ))),
        None => Err(Error::InvalidParams("empty matrix".into())),
    }
}

/// Symmetric positive-definite square root V diag(√w) Vᵀ.
pub fn sym_sqrt(a: &SymMatrix) -> Result<SymMatrix> {
    Ok(posdef_eigen(a)?.reconstruct_with(f64::sqrt))
}
