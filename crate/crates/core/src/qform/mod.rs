//! CDF of a positive-definite Gaussian quadratic form Q = XᵀCX with
//! X ~ N_k(0, Σ).
//!
//! Q has the law of Σ_j λ_j Z_j², with λ_j the eigenvalues of Σ^{1/2} C Σ^{1/2}.
//! Since ½Z_j² ~ Gamma(½, 1), ½Q is a gamma sum with shapes ½ and scales λ_j,
//! so P{Q ≤ x} = F_{½Q}(x / 2).

mod linalg;

pub(crate) use linalg::matmul;
pub use linalg::{jacobi_eigen, posdef_eigen, sym_sqrt, EigenDecomp, SymMatrix, MAX_DIM};

use crate::cdf::{cdf, CdfEstimate, GammaSumParams, QuadratureConfig};
use crate::error::{Error, Result};

/// Ascending eigenvalues of Σ^{1/2} C Σ^{1/2}.
pub fn qform_eigenvalues(sigma: &SymMatrix, c: &SymMatrix) -> Result<Vec<f64>> {
    if sigma.dim() != c.dim() {
        return Err(Error::InvalidParams(format!(
            "Σ is {0}x{0} but C is {1}x{1}",
            sigma.dim(),
            c.dim()
        )));
    }
    posdef_eigen(c)?;
    let root = sym_sqrt(sigma)?;
    let n = sigma.dim();
    let product = matmul(
        &matmul(root.as_slice(), c.as_slice(), n),
        root.as_slice(),
        n,
    );
    let eig = jacobi_eigen(&SymMatrix::symmetrized(n, product))?;
    if let Some(&lmin) = eig.values.first() {
        if !(lmin > 0.0) {
            return Err(Error::NotPositiveDefinite(format!(
                "Σ^(1/2) C Σ^(1/2) has eigenvalue {lmin:e}"
            )));
        }
    }
    Ok(eig.values)
}

/// Gamma-sum parameters of ½Q: shapes ½, scales the form's eigenvalues.
pub fn half_form_params(sigma: &SymMatrix, c: &SymMatrix) -> Result<GammaSumParams> {
    let lambdas = qform_eigenvalues(sigma, c)?;
    GammaSumParams::new(vec![0.5; lambdas.len()], lambdas)
}

/// P{XᵀCX ≤ x} for X ~ N(0, Σ).
pub fn qform_cdf(
    sigma: &SymMatrix,
    c: &SymMatrix,
    x: f64,
    cfg: &QuadratureConfig,
) -> Result<CdfEstimate> {
    let params = half_form_params(sigma, c)?;
    let mut estimate = cdf(&params, 0.5 * x, cfg)?;

    // ∏ λ_j must reproduce |CΣ|, obtained here through Cholesky.
    let log_eig: f64 = params.lambdas().iter().map(|l| l.ln()).sum();
    let log_det = c.log_det()? + sigma.log_det()?;
    let rel = (log_eig - log_det).exp_m1().abs();
    if rel > 1e-9 {
        estimate.warnings.push(format!(
            "eigenvalue product differs from det(C)·det(Σ) by relative {rel:e}"
        ));
    }
    Ok(estimate)
}
