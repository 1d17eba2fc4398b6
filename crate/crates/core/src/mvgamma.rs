//! CDF of the p-variate gamma distribution with Laplace transform
//! |I_p + ΣT|^{−α}, T = diag(t_1, …, t_p), for small p.
//!
//! With v = ½(1/λ_max + 1/λ_min) over the eigenvalues of Σ and
//! C = I − (vΣ)^{−1},
//!
//! F(x) = v^{−αp} |Σ|^{−α} (2π)^{−p} ∫_{(−π,π)^p} |I − C Y^{−1}|^{−α} ∏_k G_α(v x_k, y_k) dφ,
//!
//! y_k = r e^{iφ_k}, ‖C‖ < r < 1. The (2π)^{−p} factor is what extracting the
//! joint power-series coefficient over p circles requires; it is checked once
//! per process against the independent case Σ = I.
//!
//! The power |·|^{−α} needs a continuous logarithm of the determinant. At
//! φ = 0 the matrix I − C/r is positive definite, so its log-determinant is
//! real; every grid node is reached from there by sweeping one axis at a time
//! and the principal logarithm is shifted by 2πk to stay next to its
//! predecessor. Steps whose phase moves by more than a quarter turn are
//! bisected.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::cdf::{compensated_sum, CdfEstimate, QuadratureConfig};
use crate::error::{Error, Result};
use crate::gfun::{g_eval, GCoefficients};
use crate::qform::{jacobi_eigen, SymMatrix};
use crate::special::lower_gamma_p;

pub const DEFAULT_MAX_DIM: usize = 3;
pub const HARD_MAX_DIM: usize = 4;
/// Largest number of midpoint nodes per axis.
pub const MAX_NODES_PER_AXIS: usize = 512;

const MAX_BISECTIONS: u32 = 24;

#[derive(Debug, Clone, PartialEq)]
pub struct MvGammaParams {
    alpha: f64,
    sigma: SymMatrix,
}

impl MvGammaParams {
    pub fn new(alpha: f64, sigma: SymMatrix) -> Result<Self> {
        Self::with_max_dim(alpha, sigma, DEFAULT_MAX_DIM)
    }

    /// As [`MvGammaParams::new`] with a dimension limit up to [`HARD_MAX_DIM`].
    pub fn with_max_dim(alpha: f64, sigma: SymMatrix, max_dim: usize) -> Result<Self> {
        if max_dim > HARD_MAX_DIM {
            return Err(Error::Config(format!(
                "dimension limit {max_dim} exceeds the hard cap {HARD_MAX_DIM}"
            )));
        }
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidParams(format!(
                "α must be positive and finite, got {alpha}"
            )));
        }
        let p = sigma.dim();
        if p == 0 || p > max_dim {
            return Err(Error::InvalidParams(format!(
                "dimension {p} outside 1..={max_dim}"
            )));
        }
        sigma.cholesky()?;
        Ok(Self { alpha, sigma })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn sigma(&self) -> &SymMatrix {
        &self.sigma
    }

    pub fn dim(&self) -> usize {
        self.sigma.dim()
    }

    /// Set when α is outside the range where the distribution is known to exist.
    pub fn existence_warning(&self) -> Option<String> {
        let two_alpha = 2.0 * self.alpha;
        let bound = ((self.dim() - 1) / 2) as f64;
        if two_alpha.fract() != 0.0 && two_alpha <= bound {
            Some(format!(
                "α = {} may not define a {}-variate gamma distribution (needs 2α ∈ ℕ or 2α > {bound})",
                self.alpha,
                self.dim()
            ))
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MvDerived {
    pub v: f64,
    pub c_matrix: SymMatrix,
    pub spectral_norm_c: f64,
    pub log_prefactor: f64,
    pub alpha: f64,
}

pub fn mv_derive(p: &MvGammaParams) -> Result<MvDerived> {
    let eig = jacobi_eigen(p.sigma())?;
    let lmin = eig.values[0];
    let lmax = *eig.values.last().unwrap();
    if !(lmin > 0.0) {
        return Err(Error::NotPositiveDefinite(format!(
            "Σ has eigenvalue {lmin:e}"
        )));
    }
    let v = 0.5 * (1.0 / lmax + 1.0 / lmin);
    let c_matrix = if lmin == lmax {
        SymMatrix::diag(&vec![0.0; p.dim()])
    } else {
        eig.reconstruct_with(|l| 1.0 - 1.0 / (v * l))
    };
    let log_det: f64 = eig.values.iter().map(|l| l.ln()).sum();
    let dim = p.dim() as f64;
    Ok(MvDerived {
        v,
        c_matrix,
        spectral_norm_c: (lmax - lmin) / (lmax + lmin),
        log_prefactor: -p.alpha() * (dim * v.ln() + log_det),
        alpha: p.alpha(),
    })
}

/// A logarithm of det(I − C diag(y)^{−1}) on an arbitrary branch, by LU
/// with partial pivoting.
fn log_det_any_branch(c: &SymMatrix, phis: &[f64], r: f64) -> Result<Complex64> {
    let n = c.dim();
    let yinv: Vec<Complex64> = phis
        .iter()
        .map(|&p| Complex64::from_polar(1.0 / r, -p))
        .collect();
    let mut m = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            let delta = if i == j { 1.0 } else { 0.0 };
            m[i * n + j] = Complex64::new(delta, 0.0) - c.get(i, j) * yinv[j];
        }
    }
    let mut log = Complex64::new(0.0, 0.0);
    for k in 0..n {
        let piv = (k..n)
            .max_by(|&a, &b| m[a * n + k].norm().total_cmp(&m[b * n + k].norm()))
            .unwrap();
        if m[piv * n + k].norm() == 0.0 {
            return Err(Error::BranchTracking(format!(
                "I − C·Y⁻¹ is singular at φ = {phis:?}"
            )));
        }
        if piv != k {
            for j in 0..n {
                m.swap(k * n + j, piv * n + j);
            }
            log += Complex64::new(0.0, PI);
        }
        let pivot = m[k * n + k];
        log += pivot.ln();
        for i in k + 1..n {
            let f = m[i * n + k] / pivot;
            for j in k + 1..n {
                let t = m[k * n + j];
                m[i * n + j] -= f * t;
            }
        }
    }
    Ok(log)
}

/// Continuous log-determinant along the straight path from `from` to `to`.
struct LogDetTracker<'a> {
    c: &'a SymMatrix,
    r: f64,
}

impl LogDetTracker<'_> {
    fn origin(&self) -> Result<Complex64> {
        let zeros = vec![0.0; self.c.dim()];
        let l = log_det_any_branch(self.c, &zeros, self.r)?;
        Ok(Complex64::new(l.re, 0.0))
    }

    fn step(&self, from: &[f64], from_log: Complex64, to: &[f64], depth: u32) -> Result<Complex64> {
        let raw = log_det_any_branch(self.c, to, self.r)?;
        let k = ((from_log.im - raw.im) / (2.0 * PI)).round();
        let candidate = raw + Complex64::new(0.0, 2.0 * PI * k);
        if (candidate.im - from_log.im).abs() <= 0.5 * PI {
            return Ok(candidate);
        }
        if depth >= MAX_BISECTIONS {
            return Err(Error::BranchTracking(format!(
                "log-determinant phase jumps by {:.3} between φ = {from:?} and φ = {to:?}",
                candidate.im - from_log.im
            )));
        }
        let mid: Vec<f64> = from.iter().zip(to).map(|(a, b)| 0.5 * (a + b)).collect();
        let mid_log = self.step(from, from_log, &mid, depth + 1)?;
        self.step(&mid, mid_log, to, depth + 1)
    }

    /// Log-determinants at `base` with axis `axis` replaced by each of `nodes`
    /// (ascending, symmetric about 0); `base[axis]` must be 0.
    fn sweep(
        &self,
        base: &[f64],
        base_log: Complex64,
        axis: usize,
        nodes: &[f64],
    ) -> Result<Vec<Complex64>> {
        let n = nodes.len();
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        let split = nodes.partition_point(|&p| p < 0.0);
        let mut point = base.to_vec();
        let mut prev_point = base.to_vec();
        let mut prev_log = base_log;
        for m in split..n {
            point[axis] = nodes[m];
            prev_log = self.step(&prev_point, prev_log, &point, 0)?;
            out[m] = prev_log;
            prev_point[axis] = nodes[m];
        }
        prev_point[axis] = 0.0;
        prev_log = base_log;
        for m in (0..split).rev() {
            point[axis] = nodes[m];
            prev_log = self.step(&prev_point, prev_log, &point, 0)?;
            out[m] = prev_log;
            prev_point[axis] = nodes[m];
        }
        Ok(out)
    }
}

fn check_radius(d: &MvDerived, r: f64) -> Result<()> {
    if r > d.spectral_norm_c && r < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "r = {r} outside the admissible interval ({}, 1)",
            d.spectral_norm_c
        )))
    }
}

fn check_thresholds(xs: &[f64], p: usize) -> Result<()> {
    if xs.len() != p {
        return Err(Error::InvalidParams(format!(
            "expected {p} thresholds, got {}",
            xs.len()
        )));
    }
    if let Some(x) = xs.iter().find(|x| !x.is_finite()) {
        return Err(Error::Domain(format!("thresholds must be finite, got {x}")));
    }
    Ok(())
}

/// det(I − C Y^{−1})^{−α} ∏_k G_α(v x_k, y_k), without the prefactor, with
/// the log-determinant continued from φ = 0 along a straight path.
pub fn mv_integrand(
    phis: &[f64],
    xs: &[f64],
    d: &MvDerived,
    r: f64,
    tol: f64,
) -> Result<Complex64> {
    let p = d.c_matrix.dim();
    check_thresholds(xs, p)?;
    check_radius(d, r)?;
    if phis.len() != p {
        return Err(Error::InvalidParams(format!(
            "expected {p} angles, got {}",
            phis.len()
        )));
    }
    if let Some(x) = xs.iter().find(|&&x| x < 0.0) {
        return Err(Error::Domain(format!(
            "thresholds must be non-negative, got {x}"
        )));
    }
    if let Some(phi) = phis.iter().find(|p| !(p.abs() < PI)) {
        return Err(Error::Domain(format!(
            "angles must lie in (−π, π), got {phi}"
        )));
    }
    let tracker = LogDetTracker { c: &d.c_matrix, r };
    let steps = 256;
    let mut prev = vec![0.0; p];
    let mut log = tracker.origin()?;
    for s in 1..=steps {
        let t = s as f64 / steps as f64;
        let point: Vec<f64> = phis.iter().map(|&ph| t * ph).collect();
        log = tracker.step(&prev, log, &point, 0)?;
        prev = point;
    }
    let mut value = (-d.alpha * log).exp();
    for (&phi, &x) in phis.iter().zip(xs) {
        value *= g_eval(
            d.alpha,
            d.v * x,
            Complex64::from_polar(r, phi),
            tol.max(1e-15),
        )?;
    }
    Ok(value)
}

/// Tensor midpoint rule on a grid of `n` nodes per axis.
struct Grid<'a> {
    d: &'a MvDerived,
    tracker: LogDetTracker<'a>,
    nodes: Vec<f64>,
    /// g[k][m] = G_α(v x_k, r e^{iφ_m})
    g: Vec<Vec<Complex64>>,
}

impl<'a> Grid<'a> {
    fn new(d: &'a MvDerived, tables: &[GCoefficients], r: f64, n: usize) -> Self {
        let h = 2.0 * PI / n as f64;
        let nodes: Vec<f64> = (0..n).map(|m| -PI + (m as f64 + 0.5) * h).collect();
        let g = tables
            .iter()
            .map(|t| {
                nodes
                    .iter()
                    .map(|&phi| t.eval(Complex64::from_polar(r, phi)))
                    .collect()
            })
            .collect();
        Self {
            d,
            tracker: LogDetTracker { c: &d.c_matrix, r },
            nodes,
            g,
        }
    }

    /// Appends Re of the integrand over all nodes with axes < `axis` fixed.
    fn collect(
        &self,
        point: &mut Vec<f64>,
        base_log: Complex64,
        axis: usize,
        g_partial: Complex64,
        out: &mut Vec<f64>,
    ) -> Result<()> {
        let logs = self.tracker.sweep(point, base_log, axis, &self.nodes)?;
        let last = axis + 1 == self.nodes_dim();
        for (m, log) in logs.into_iter().enumerate() {
            let g = g_partial * self.g[axis][m];
            if last {
                out.push(((-self.d.alpha * log).exp() * g).re);
            } else {
                point[axis] = self.nodes[m];
                self.collect(point, log, axis + 1, g, out)?;
                point[axis] = 0.0;
            }
        }
        Ok(())
    }

    fn nodes_dim(&self) -> usize {
        self.g.len()
    }

    /// (1/n^p) Σ Re(integrand), prefactor excluded.
    fn mean(&self) -> Result<f64> {
        let p = self.nodes_dim();
        let n = self.nodes.len();
        let origin = vec![0.0; p];
        let origin_log = self.tracker.origin()?;
        let axis0 = self.tracker.sweep(&origin, origin_log, 0, &self.nodes)?;
        let slices: Vec<f64> = axis0
            .par_iter()
            .enumerate()
            .map(|(m, &log)| -> Result<f64> {
                let g = self.g[0][m];
                if p == 1 {
                    return Ok(((-self.d.alpha * log).exp() * g).re);
                }
                let mut point = origin.clone();
                point[0] = self.nodes[m];
                let mut out = Vec::with_capacity(n.pow(p as u32 - 1));
                self.collect(&mut point, log, 1, g, &mut out)?;
                Ok(compensated_sum(&out))
            })
            .collect::<Result<_>>()?;
        Ok(compensated_sum(&slices) / (n as f64).powi(p as i32))
    }
}

fn g_tolerance(d: &MvDerived, r: f64, tol: f64) -> f64 {
    let p = d.c_matrix.dim() as f64;
    let log_bound = d.log_prefactor
        - d.alpha * p * (1.0 - d.spectral_norm_c / r).ln()
        - (p - 1.0) * (1.0 - r).ln()
        + p.ln();
    (0.1 * tol / log_bound.exp().max(1.0)).max(1e-18)
}

fn mv_cdf_unchecked(p: &MvGammaParams, xs: &[f64], cfg: &QuadratureConfig) -> Result<CdfEstimate> {
    cfg.validate()?;
    let dim = p.dim();
    check_thresholds(xs, dim)?;
    if xs.iter().any(|&x| x <= 0.0) {
        return Ok(CdfEstimate::exact(0.0));
    }
    let d = mv_derive(p)?;
    let r = match cfg.r {
        Some(r) => {
            check_radius(&d, r)?;
            r
        }
        None => 0.5 * (1.0 + d.spectral_norm_c),
    };
    let g_tol = g_tolerance(&d, r, cfg.tol);
    let tables: Vec<GCoefficients> = xs
        .iter()
        .map(|&x| GCoefficients::with_cap(p.alpha(), d.v * x, r, g_tol, 200_000))
        .collect::<Result<_>>()?;
    let prefactor = d.log_prefactor.exp();
    let n_cap = cfg.n_max.min(MAX_NODES_PER_AXIS);

    let level = |n: usize| -> Result<f64> { Ok(prefactor * Grid::new(&d, &tables, r, n).mean()?) };
    let mut n = cfg.n_start.min(n_cap).max(2);
    let mut previous = level(n)?;
    loop {
        let n2 = 2 * n;
        let current = level(n2)?;
        let diff = (current - previous).abs();
        log::debug!("mv_cdf p={dim} r={r} n={n2} estimate={current:e} diff={diff:e}");
        let mut estimate = CdfEstimate {
            value: current.clamp(0.0, 1.0),
            raw_value: current,
            err_estimate: diff,
            nodes_used: n2.pow(dim as u32),
            r_used: Some(r),
            warnings: p.existence_warning().into_iter().collect(),
        };
        if current < -10.0 * cfg.tol || current > 1.0 + 10.0 * cfg.tol {
            estimate.warnings.push(format!(
                "raw quadrature value {current:e} lies outside [0, 1] by more than 10·tol"
            ));
        }
        if diff < cfg.tol {
            return Ok(estimate);
        }
        if n2 >= n_cap {
            return Err(Error::NonConvergence {
                context: format!("{dim}-variate midpoint grid after {n2} nodes per axis"),
                estimate: Some(Box::new(estimate)),
            });
        }
        n = n2;
        previous = current;
    }
}

/// Checks the normalization on Σ = I₂, where the CDF factorizes.
fn normalization_self_test() -> Result<()> {
    static RESULT: OnceLock<std::result::Result<(), String>> = OnceLock::new();
    RESULT
        .get_or_init(|| {
            let p = MvGammaParams::new(1.5, SymMatrix::identity(2)).map_err(|e| e.to_string())?;
            let got = mv_cdf_unchecked(&p, &[1.0, 2.0], &QuadratureConfig::default())
                .map_err(|e| e.to_string())?
                .raw_value;
            let want = lower_gamma_p(1.5, 1.0) * lower_gamma_p(1.5, 2.0);
            if (got - want).abs() > 1e-9 {
                Err(format!("independent case gives {got}, expected {want}"))
            } else {
                Ok(())
            }
        })
        .clone()
        .map_err(Error::Normalization)
}

/// P{X_1 ≤ x_1, …, X_p ≤ x_p} for the p-variate gamma distribution.
pub fn mv_cdf(p: &MvGammaParams, xs: &[f64], cfg: &QuadratureConfig) -> Result<CdfEstimate> {
    normalization_self_test()?;
    mv_cdf_unchecked(p, xs, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cdf::{cdf, GammaSumParams};

    fn m(rows: &[&[f64]]) -> SymMatrix {
        SymMatrix::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn derive_scaled_identity() {
        let d = mv_derive(&MvGammaParams::new(2.0, SymMatrix::identity(3).scaled(4.0)).unwrap())
            .unwrap();
        assert_eq!(d.v, 0.25);
        assert_eq!(d.spectral_norm_c, 0.0);
        assert_eq!(d.c_matrix.max_abs(), 0.0);
        assert!(d.log_prefactor.abs() < 1e-14);
    }

    #[test]
    fn derive_diagonal() {
        let d = mv_derive(&MvGammaParams::new(1.0, SymMatrix::diag(&[1.0, 3.0])).unwrap()).unwrap();
        assert!((d.v - 2.0 / 3.0).abs() < 1e-15);
        assert!((d.c_matrix.get(0, 0) + 0.5).abs() < 1e-15);
        assert!((d.c_matrix.get(1, 1) - 0.5).abs() < 1e-15);
        assert!(d.c_matrix.get(0, 1).abs() < 1e-15);
        assert!((d.spectral_norm_c - 0.5).abs() < 1e-15);
    }

    #[test]
    fn derive_correlated() {
        let s = m(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let d = mv_derive(&MvGammaParams::new(1.0, s).unwrap()).unwrap();
        assert!((d.v - 2.0 / 3.0).abs() < 1e-15);
        assert!((d.spectral_norm_c - 0.5).abs() < 1e-15);
        // I − (3/2)·(1/3)[[2,−1],[−1,2]]
        assert!(d.c_matrix.get(0, 0).abs() < 1e-14);
        assert!((d.c_matrix.get(0, 1) - 0.5).abs() < 1e-14);
        assert!(d.c_matrix.get(1, 1).abs() < 1e-14);
    }

    #[test]
    fn params_validation() {
        assert!(MvGammaParams::new(0.0, SymMatrix::identity(2)).is_err());
        assert!(MvGammaParams::new(1.0, SymMatrix::identity(4)).is_err());
        assert!(MvGammaParams::with_max_dim(1.0, SymMatrix::identity(4), 4).is_ok());
        assert!(MvGammaParams::with_max_dim(1.0, SymMatrix::identity(2), 5).is_err());
        assert!(MvGammaParams::new(1.0, m(&[&[1.0, 2.0], &[2.0, 1.0]])).is_err());
    }

    #[test]
    fn existence_caveat() {
        let p3 = |a| MvGammaParams::new(a, SymMatrix::identity(3)).unwrap();
        assert!(p3(0.3).existence_warning().is_some());
        assert!(p3(0.5).existence_warning().is_none());
        assert!(p3(0.75).existence_warning().is_none());
        let p2 = MvGammaParams::new(0.3, SymMatrix::identity(2)).unwrap();
        assert!(p2.existence_warning().is_none());
    }

    #[test]
    fn integrand_reference_point() {
        let s = m(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let d = mv_derive(&MvGammaParams::new(1.0, s).unwrap()).unwrap();
        let z = mv_integrand(&[PI / 3.0, -PI / 4.0], &[2.0, 3.0], &d, 0.75, 1e-15).unwrap();
        assert!((z.re - 1.799281809432902738).abs() < 1e-12, "{z}");
        assert!((z.im + 0.50392366775315168808).abs() < 1e-12, "{z}");
    }

    #[test]
    fn integrand_zero_c_is_g_product() {
        let d = mv_derive(&MvGammaParams::new(0.7, SymMatrix::identity(2)).unwrap()).unwrap();
        let z = mv_integrand(&[0.3, -2.0], &[1.0, 2.5], &d, 0.6, 1e-15).unwrap();
        let g1 = g_eval(0.7, 1.0, Complex64::from_polar(0.6, 0.3), 1e-15).unwrap();
        let g2 = g_eval(0.7, 2.5, Complex64::from_polar(0.6, -2.0), 1e-15).unwrap();
        assert!((z - g1 * g2).norm() < 1e-14);
    }

    #[test]
    fn integrand_conjugate_symmetry() {
        let s = m(&[&[1.0, 0.4, 0.2], &[0.4, 2.0, 0.3], &[0.2, 0.3, 3.0]]);
        let d = mv_derive(&MvGammaParams::new(0.8, s).unwrap()).unwrap();
        let r = 0.5 * (1.0 + d.spectral_norm_c);
        let a = mv_integrand(&[0.5, -1.2, 2.9], &[1.0, 2.0, 3.0], &d, r, 1e-15).unwrap();
        let b = mv_integrand(&[-0.5, 1.2, -2.9], &[1.0, 2.0, 3.0], &d, r, 1e-15).unwrap();
        assert!((a - b.conj()).norm() < 1e-12 * a.norm().max(1.0));
    }

    #[test]
    fn integrand_guards() {
        let d = mv_derive(&MvGammaParams::new(1.0, SymMatrix::diag(&[1.0, 3.0])).unwrap()).unwrap();
        assert!(mv_integrand(&[0.0, 0.0], &[1.0, 1.0], &d, 0.4, 1e-12).is_err());
        assert!(mv_integrand(&[0.0], &[1.0, 1.0], &d, 0.75, 1e-12).is_err());
        assert!(mv_integrand(&[PI, 0.0], &[1.0, 1.0], &d, 0.75, 1e-12).is_err());
    }

    #[test]
    fn tracked_log_det_matches_principal_near_origin() {
        let s = m(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let d = mv_derive(&MvGammaParams::new(1.0, s).unwrap()).unwrap();
        let t = LogDetTracker {
            c: &d.c_matrix,
            r: 0.75,
        };
        let o = t.origin().unwrap();
        let logs = t.sweep(&[0.0, 0.0], o, 0, &[-0.2, -0.1, 0.1, 0.2]).unwrap();
        for (l, phi) in logs.iter().zip([-0.2, -0.1, 0.1, 0.2]) {
            let direct = log_det_any_branch(&d.c_matrix, &[phi, 0.0], 0.75)
                .unwrap()
                .exp();
            assert!((l.exp() - direct).norm() < 1e-14);
            assert!(l.im.abs() < 0.5 * PI);
        }
    }

    #[test]
    fn independence_factorization() {
        let p = MvGammaParams::new(1.3, SymMatrix::identity(2).scaled(2.0)).unwrap();
        let e = mv_cdf(&p, &[1.5, 4.0], &QuadratureConfig::default()).unwrap();
        let want = lower_gamma_p(1.3, 0.75) * lower_gamma_p(1.3, 2.0);
        assert!((e.value - want).abs() < 1e-9, "{} vs {want}", e.value);
    }

    #[test]
    fn one_dimension_matches_gamma_sum() {
        let p = MvGammaParams::new(1.0, SymMatrix::diag(&[2.0])).unwrap();
        let e = mv_cdf(&p, &[3.0], &QuadratureConfig::default()).unwrap();
        assert!((e.value - (1.0 - (-1.5f64).exp())).abs() < 1e-9);
        let single = cdf(
            &GammaSumParams::new(vec![1.0], vec![2.0]).unwrap(),
            3.0,
            &QuadratureConfig::default(),
        )
        .unwrap();
        assert!((e.value - single.value).abs() < 1e-9);
    }

    #[test]
    fn non_positive_thresholds() {
        let p = MvGammaParams::new(1.0, SymMatrix::identity(2)).unwrap();
        assert_eq!(
            mv_cdf(&p, &[0.0, 1.0], &QuadratureConfig::default())
                .unwrap()
                .value,
            0.0
        );
        assert_eq!(
            mv_cdf(&p, &[1.0, -1.0], &QuadratureConfig::default())
                .unwrap()
                .value,
            0.0
        );
        assert!(mv_cdf(&p, &[1.0], &QuadratureConfig::default()).is_err());
    }

    #[test]
    fn correlated_pair_is_bounded_by_marginals() {
        let s = m(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let p = MvGammaParams::new(1.0, s).unwrap();
        let e = mv_cdf(&p, &[3.0, 3.0], &QuadratureConfig::default()).unwrap();
        let marginal = lower_gamma_p(1.0, 1.5);
        assert!(e.value < marginal);
        assert!(e.value > marginal * marginal);
    }
}
