//! CDF of a sum of independent gamma variables as a single integral over
//! (0, π).
//!
//! With v = ½(1/λ_max + 1/λ_min), c_j = 1 − 1/(v λ_j) and α = Σ α_j,
//!
//! ```text
//! F(x) = ∏_j (v λ_j)^{−α_j} · (1/π) ∫_0^π Re[ ∏_j (1 − c_j r⁻¹ e^{−iφ})^{−α_j} · G_α(v x, r e^{iφ}) ] dφ
//! ```
//!
//! for any r in (max|c_j|, 1). The integrand is the restriction of a
//! 2π-periodic analytic function, so the midpoint rule converges
//! geometrically; node counts are doubled until two levels agree.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gfun::GCoefficients;
use crate::special::lower_gamma_p;

/// Shape and scale parameters of the independent gamma summands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaSumParams {
    alphas: Vec<f64>,
    lambdas: Vec<f64>,
}

impl GammaSumParams {
    pub fn new(alphas: Vec<f64>, lambdas: Vec<f64>) -> Result<Self> {
        if alphas.is_empty() {
            return Err(Error::InvalidParams(
                "at least one summand is required".into(),
            ));
        }
        if alphas.len() != lambdas.len() {
            return Err(Error::InvalidParams(format!(
                "{} shapes but {} scales",
                alphas.len(),
                lambdas.len()
            )));
        }
        for (name, values) in [("shape", &alphas), ("scale", &lambdas)] {
            if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
                return Err(Error::InvalidParams(format!(
                    "{name} parameters must be positive and finite, got {bad}"
                )));
            }
        }
        Ok(Self { alphas, lambdas })
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    /// Σ α_j λ_j.
    pub fn mean(&self) -> f64 {
        self.alphas
            .iter()
            .zip(&self.lambdas)
            .map(|(a, l)| a * l)
            .sum()
    }

    fn scale_range(&self) -> (f64, f64) {
        let min = self.lambdas.iter().copied().fold(f64::INFINITY, f64::min);
        let max = self.lambdas.iter().copied().fold(0.0, f64::max);
        (min, max)
    }
}

/// Reparametrized quantities shared by the integral and the series.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedParams {
    pub v: f64,
    pub c: Vec<f64>,
    pub alphas: Vec<f64>,
    pub alpha_total: f64,
    /// max_j |c_j| = (λ_max − λ_min) / (λ_max + λ_min).
    pub c_max_abs: f64,
    /// ln of ∏_j (v λ_j)^{−α_j}.
    pub log_prefactor: f64,
}

pub fn derive_params(p: &GammaSumParams) -> DerivedParams {
    let (lmin, lmax) = p.scale_range();
    let alpha_total: f64 = p.alphas.iter().sum();
    if lmin == lmax {
        return DerivedParams {
            v: 1.0 / lmin,
            c: vec![0.0; p.len()],
            alphas: p.alphas.clone(),
            alpha_total,
            c_max_abs: 0.0,
            log_prefactor: 0.0,
        };
    }
    let v = 0.5 * (1.0 / lmax + 1.0 / lmin);
    let c: Vec<f64> = p.lambdas.iter().map(|&l| 1.0 - 1.0 / (v * l)).collect();
    let log_prefactor = -p
        .alphas
        .iter()
        .zip(&p.lambdas)
        .map(|(a, l)| a * (v * l).ln())
        .sum::<f64>();
    DerivedParams {
        v,
        c,
        alphas: p.alphas.clone(),
        alpha_total,
        c_max_abs: (lmax - lmin) / (lmax + lmin),
        log_prefactor,
    }
}

/// Quadrature controls. `r: None` selects the radius automatically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureConfig {
    pub r: Option<f64>,
    pub n_start: usize,
    pub n_max: usize,
    pub tol: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            r: None,
            n_start: 16,
            n_max: 65_536,
            tol: 1e-10,
        }
    }
}

impl QuadratureConfig {
    pub fn with_r(mut self, r: f64) -> Self {
        self.r = Some(r);
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            return Err(Error::Config(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.n_start < 2 || self.n_start > self.n_max {
            return Err(Error::Config(format!(
                "need 2 <= n_start <= n_max, got {} and {}",
                self.n_start, self.n_max
            )));
        }
        Ok(())
    }
}

/// A probability with its quadrature diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfEstimate {
    /// Raw estimate clamped to [0, 1].
    pub value: f64,
    pub raw_value: f64,
    /// |I_{2n} − I_n| of the last refinement.
    pub err_estimate: f64,
    pub nodes_used: usize,
    /// None when an exact reduction bypassed the quadrature.
    pub r_used: Option<f64>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl CdfEstimate {
    pub(crate) fn exact(value: f64) -> Self {
        Self {
            value,
            raw_value: value,
            err_estimate: 0.0,
            nodes_used: 0,
            r_used: None,
            warnings: Vec::new(),
        }
    }
}

/// Contour radius: the midpoint of (c_max, 1) unless configured explicitly.
pub fn choose_r(d: &DerivedParams, cfg: &QuadratureConfig) -> Result<f64> {
    match cfg.r {
        None => Ok(0.5 * (1.0 + d.c_max_abs)),
        Some(r) if r > d.c_max_abs && r < 1.0 => Ok(r),
        Some(r) => Err(Error::Config(format!(
            "r = {r} outside the admissible interval ({}, 1)",
            d.c_max_abs
        ))),
    }
}

/// Smallest Re(1 − c_j r⁻¹ e^{−iφ}) over the summands; positive whenever
/// r > max|c_j|, which keeps every principal power continuous.
pub fn branch_margin(d: &DerivedParams, r: f64, phi: f64) -> f64 {
    let w = Complex64::from_polar(1.0 / r, -phi);
    d.c.iter()
        .map(|&c| (Complex64::new(1.0, 0.0) - c * w).re)
        .fold(f64::INFINITY, f64::min)
}

/// Complex integrand of the (0, π) representation at a fixed abscissa.
pub(crate) struct Integrand<'a> {
    d: &'a DerivedParams,
    r: f64,
    table: GCoefficients,
}

impl<'a> Integrand<'a> {
    pub(crate) fn new(d: &'a DerivedParams, x: f64, r: f64, g_tol: f64) -> Result<Self> {
        let table = GCoefficients::with_cap(d.alpha_total, d.v * x, r, g_tol, 200_000)?;
        Ok(Self { d, r, table })
    }

    /// ln ∏_j (1 − c_j r⁻¹ e^{−iφ})^{−α_j} + `shift`.
    fn log_factor(&self, phi: f64, shift: f64) -> Complex64 {
        let w = Complex64::from_polar(1.0 / self.r, -phi);
        let mut acc = Complex64::new(shift, 0.0);
        for (&c, &a) in self.d.c.iter().zip(&self.d.alphas) {
            if c != 0.0 {
                acc -= a * (Complex64::new(1.0, 0.0) - c * w).ln();
            }
        }
        acc
    }

    /// Full complex integrand, optionally including the constant prefactor.
    pub(crate) fn complex_value(&self, phi: f64, with_prefactor: bool) -> Complex64 {
        let shift = if with_prefactor {
            self.d.log_prefactor
        } else {
            0.0
        };
        let g = self.table.eval(Complex64::from_polar(self.r, phi));
        self.log_factor(phi, shift).exp() * g
    }

    /// Midpoint-rule estimate of the prefactor times (1/π)∫_0^π Re(·).
    pub(crate) fn midpoint(&self, n: usize) -> f64 {
        let h = PI / n as f64;
        let values: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|m| self.complex_value((m as f64 + 0.5) * h, true).re)
            .collect();
        compensated_sum(&values) / n as f64
    }
}

/// Neumaier summation in slice order.
pub(crate) fn compensated_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Upper bound on |prefactor · ∏_j (1 − c_j r⁻¹ e^{−iφ})^{−α_j}| over φ.
fn factor_bound(d: &DerivedParams, r: f64) -> f64 {
    let log_max: f64 =
        d.c.iter()
            .zip(&d.alphas)
            .map(|(&c, &a)| -a * (1.0 - c.abs() / r).ln())
            .sum();
    (d.log_prefactor + log_max).exp()
}

/// Series tolerance such that G truncation contributes at most tol/10.
fn g_tolerance(d: &DerivedParams, r: f64, tol: f64) -> f64 {
    (0.1 * tol / factor_bound(d, r).max(1.0)).max(1e-18)
}

/// Re[∏_j (1 − c_j r⁻¹ e^{−iφ})^{−α_j} · G_α(v x, r e^{iφ})], without the prefactor.
pub fn integrand(phi: f64, x: f64, d: &DerivedParams, r: f64, tol: f64) -> Result<f64> {
    if !(r > d.c_max_abs && r < 1.0) {
        return Err(Error::Config(format!(
            "r = {r} outside ({}, 1)",
            d.c_max_abs
        )));
    }
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!(
            "x must be finite and non-negative, got {x}"
        )));
    }
    let ig = Integrand::new(d, x, r, tol.max(1e-18))?;
    Ok(ig.complex_value(phi, false).re)
}

/// Single midpoint-rule level with `n` nodes at a given radius, prefactor
/// included. Exposed for convergence studies.
pub fn midpoint_estimate(p: &GammaSumParams, x: f64, r: f64, n: usize, tol: f64) -> Result<f64> {
    let d = derive_params(p);
    if !(r > d.c_max_abs && r < 1.0) {
        return Err(Error::Config(format!(
            "r = {r} outside ({}, 1)",
            d.c_max_abs
        )));
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    let ig = Integrand::new(&d, x, r, g_tolerance(&d, r, tol))?;
    Ok(ig.midpoint(n.max(1)))
}

/// P{Σ_j X_j ≤ x} for independent X_j ~ Gamma(α_j, scale λ_j).
pub fn cdf(p: &GammaSumParams, x: f64, cfg: &QuadratureConfig) -> Result<CdfEstimate> {
    cfg.validate()?;
    if !x.is_finite() {
        return Err(Error::Domain(format!("x must be finite, got {x}")));
    }
    if x <= 0.0 {
        return Ok(CdfEstimate::exact(0.0));
    }
    let d = derive_params(p);
    let (lmin, lmax) = p.scale_range();
    if lmin == lmax {
        if let Some(r) = cfg.r {
            if !(r > 0.0 && r < 1.0) {
                return Err(Error::Config(format!("r = {r} outside (0, 1)")));
            }
        }
        return Ok(CdfEstimate::exact(lower_gamma_p(d.alpha_total, x / lmin)));
    }
    let r = choose_r(&d, cfg)?;
    let ig = Integrand::new(&d, x, r, g_tolerance(&d, r, cfg.tol))?;

    let mut n = cfg.n_start;
    let mut previous = ig.midpoint(n);
    loop {
        let n2 = 2 * n;
        let current = ig.midpoint(n2);
        let diff = (current - previous).abs();
        log::debug!("cdf x={x} r={r} n={n2} estimate={current:e} diff={diff:e}");
        let estimate = finish(current, diff, n2, r, cfg.tol);
        if diff < cfg.tol {
            return Ok(estimate);
        }
        if n2 >= cfg.n_max {
            return Err(Error::NonConvergence {
                context: format!("midpoint quadrature at x = {x} after {n2} nodes"),
                estimate: Some(Box::new(estimate)),
            });
        }
        n = n2;
        previous = current;
    }
}

fn finish(raw: f64, err: f64, nodes: usize, r: f64, tol: f64) -> CdfEstimate {
    let mut warnings = Vec::new();
    if raw < -10.0 * tol || raw > 1.0 + 10.0 * tol {
        warnings.push(format!(
            "raw quadrature value {raw:e} lies outside [0, 1] by more than 10·tol"
        ));
    }
    CdfEstimate {
        value: raw.clamp(0.0, 1.0),
        raw_value: raw,
        err_estimate: err,
        nodes_used: nodes,
        r_used: Some(r),
        warnings,
    }
}

/// Smallest x with cdf(x) = prob, by doubling a bracket from the mean and
/// bisecting. Probabilities within 10·tol of 0 or 1 are rejected because the
/// quadrature cannot resolve them.
pub fn quantile(p: &GammaSumParams, prob: f64, cfg: &QuadratureConfig) -> Result<f64> {
    cfg.validate()?;
    if !(prob > 0.0 && prob < 1.0) {
        return Err(Error::Domain(format!(
            "probability must lie in (0, 1), got {prob}"
        )));
    }
    let guard = 10.0 * cfg.tol;
    if prob < guard || 1.0 - prob < guard {
        return Err(Error::Precision(format!(
            "probability {prob} is within 10·tol = {guard:e} of 0 or 1; the quadrature cannot resolve it"
        )));
    }
    let f = |x: f64| cdf(p, x, cfg).map(|e| e.value);

    let mut lo = 0.0;
    let mut hi = p.mean();
    let mut doublings = 0;
    while f(hi)? <= prob {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 1100 {
            return Err(Error::non_convergence("quantile bracket search"));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid)? < prob {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    let x = 0.5 * (lo + hi);
    let residual = (f(x)? - prob).abs();
    if residual > 1e-8 {
        return Err(Error::non_convergence(format!(
            "quantile bisection (residual {residual:e})"
        )));
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(a: &[f64], l: &[f64]) -> GammaSumParams {
        GammaSumParams::new(a.to_vec(), l.to_vec()).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(GammaSumParams::new(vec![], vec![]).is_err());
        assert!(GammaSumParams::new(vec![1.0], vec![1.0, 2.0]).is_err());
        assert!(GammaSumParams::new(vec![0.0], vec![1.0]).is_err());
        assert!(GammaSumParams::new(vec![1.0], vec![f64::INFINITY]).is_err());
        assert!(GammaSumParams::new(vec![1.0], vec![-2.0]).is_err());
    }

    #[test]
    fn derived_two_scales() {
        let d = derive_params(&params(&[1.0, 2.0], &[1.0, 3.0]));
        assert!((d.v - 2.0 / 3.0).abs() < 1e-15);
        assert!((d.c[0] + 0.5).abs() < 1e-15);
        assert!((d.c[1] - 0.5).abs() < 1e-15);
        assert!((d.c_max_abs - 0.5).abs() < 1e-15);
        assert_eq!(d.alpha_total, 3.0);
    }

    #[test]
    fn derived_equal_scales() {
        let d = derive_params(&params(&[1.0, 1.0, 1.0], &[2.0, 2.0, 2.0]));
        assert_eq!(d.v, 0.5);
        assert_eq!(d.c, vec![0.0; 3]);
        assert_eq!(d.alpha_total, 3.0);
        assert_eq!(d.c_max_abs, 0.0);
    }

    #[test]
    fn derived_three_scales() {
        let d = derive_params(&params(&[0.7, 1.3, 2.0], &[0.5, 1.0, 4.0]));
        assert!((d.v - 1.125).abs() < 1e-15);
        let expected = [1.0 - 1.0 / 0.5625, 1.0 - 1.0 / 1.125, 1.0 - 1.0 / 4.5];
        for (c, e) in d.c.iter().zip(expected) {
            assert!((c - e).abs() < 1e-15);
        }
        let max_c = d.c.iter().map(|c| c.abs()).fold(0.0, f64::max);
        assert!((max_c - d.c_max_abs).abs() < 1e-15);
        assert!((d.c_max_abs - 3.5 / 4.5).abs() < 1e-15);
    }

    #[test]
    fn radius_selection() {
        let mut d = derive_params(&params(&[1.0, 1.0], &[1.0, 3.0]));
        let auto = QuadratureConfig::default();
        assert_eq!(choose_r(&d, &auto).unwrap(), 0.75);
        d.c_max_abs = 0.0;
        assert_eq!(choose_r(&d, &auto).unwrap(), 0.5);
        d.c_max_abs = 0.6;
        assert!(matches!(
            choose_r(&d, &QuadratureConfig::default().with_r(0.5)),
            Err(Error::Config(_))
        ));
        assert_eq!(
            choose_r(&d, &QuadratureConfig::default().with_r(0.8)).unwrap(),
            0.8
        );
    }

    #[test]
    fn integrand_vanishes_at_origin() {
        let d = derive_params(&params(&[1.0, 2.5], &[1.0, 3.0]));
        for &phi in &[0.1, 1.0, 2.0, 3.1] {
            assert_eq!(integrand(phi, 0.0, &d, 0.75, 1e-12).unwrap(), 0.0);
        }
    }

    #[test]
    fn integrand_reference_point() {
        // 50-digit evaluation, tests/reference/values.txt
        let d = derive_params(&params(&[1.0, 1.0], &[1.0, 3.0]));
        let v = integrand(PI / 2.0, 2.0, &d, 0.75, 1e-15).unwrap();
        assert!((v - 0.248_934_823_644_015_67).abs() < 1e-13, "{v}");
    }

    #[test]
    fn integrand_rejects_bad_radius() {
        let d = derive_params(&params(&[1.0, 1.0], &[1.0, 3.0]));
        assert!(integrand(0.3, 1.0, &d, 0.4, 1e-12).is_err());
        assert!(integrand(0.3, 1.0, &d, 1.0, 1e-12).is_err());
    }

    #[test]
    fn exponential_median() {
        let e = cdf(
            &params(&[1.0], &[1.0]),
            2f64.ln(),
            &QuadratureConfig::default(),
        )
        .unwrap();
        assert!((e.value - 0.5).abs() < 1e-15);
        assert_eq!(e.r_used, None);
    }

    #[test]
    fn equal_scales_reduce_to_single_gamma() {
        let e = cdf(
            &params(&[1.0, 1.0, 1.0], &[2.0, 2.0, 2.0]),
            4.0,
            &QuadratureConfig::default(),
        )
        .unwrap();
        assert!((e.value - lower_gamma_p(3.0, 2.0)).abs() < 1e-15);
        assert!((e.value - 0.323_323_583_8).abs() < 1e-10);
    }

    #[test]
    fn hypoexponential_two_scales() {
        let e = cdf(
            &params(&[1.0, 1.0], &[1.0, 2.0]),
            2.0,
            &QuadratureConfig::default(),
        )
        .unwrap();
        let exact = 1.0 - 2.0 * (-1.0f64).exp() + (-2.0f64).exp();
        assert!((e.value - exact).abs() < 1e-10, "{} vs {exact}", e.value);
        assert!(e.err_estimate < 1e-10);
        assert_eq!(e.r_used, Some(2.0 / 3.0));
    }

    #[test]
    fn three_summands_reference() {
        // composition-enumeration series at 50 digits
        let e = cdf(
            &params(&[0.7, 1.3, 2.0], &[0.5, 1.0, 4.0]),
            6.0,
            &QuadratureConfig::default(),
        )
        .unwrap();
        assert!(
            (e.value - 0.298_712_166_374_491_7).abs() < 1e-10,
            "{}",
            e.value
        );
    }

    #[test]
    fn negative_and_zero_x() {
        let p = params(&[1.5, 0.5], &[1.0, 7.0]);
        let cfg = QuadratureConfig::default();
        assert_eq!(cdf(&p, -3.0, &cfg).unwrap().value, 0.0);
        assert_eq!(cdf(&p, 0.0, &cfg).unwrap().value, 0.0);
        assert!(cdf(&p, f64::NAN, &cfg).is_err());
    }

    #[test]
    fn non_convergence_carries_estimate() {
        let p = params(&[3.0, 3.0], &[1.0, 40.0]);
        let cfg = QuadratureConfig {
            n_start: 2,
            n_max: 4,
            ..Default::default()
        };
        match cdf(&p, 50.0, &cfg) {
            Err(Error::NonConvergence {
                estimate: Some(e), ..
            }) => {
                assert_eq!(e.nodes_used, 4);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn bad_config() {
        let p = params(&[1.0, 1.0], &[1.0, 2.0]);
        let cfg = QuadratureConfig {
            tol: 0.0,
            ..Default::default()
        };
        assert!(matches!(cdf(&p, 1.0, &cfg), Err(Error::Config(_))));
        let cfg = QuadratureConfig {
            n_start: 64,
            n_max: 32,
            ..Default::default()
        };
        assert!(matches!(cdf(&p, 1.0, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn branch_margin_positive() {
        let d = derive_params(&params(&[0.4, 2.0, 1.0], &[1.0, 9.0, 30.0]));
        let r = choose_r(&d, &QuadratureConfig::default()).unwrap();
        for m in 0..256 {
            let phi = (m as f64 + 0.5) * PI / 256.0;
            let margin = branch_margin(&d, r, phi);
            assert!(margin >= 1.0 - d.c_max_abs / r - 1e-15);
            assert!(margin > 0.0);
        }
    }

    #[test]
    fn quantile_exponential_median() {
        let q = quantile(&params(&[1.0], &[1.0]), 0.5, &QuadratureConfig::default()).unwrap();
        assert!((q - 2f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn quantile_inverts_equal_scale_case() {
        let prob = lower_gamma_p(3.0, 2.0);
        let q = quantile(
            &params(&[1.0, 1.0, 1.0], &[2.0, 2.0, 2.0]),
            prob,
            &QuadratureConfig::default(),
        )
        .unwrap();
        assert!((q - 4.0).abs() < 1e-6);
    }

    #[test]
    fn quantile_rejects_unresolvable_tail() {
        let p = params(&[1.0, 2.0], &[1.0, 2.0]);
        let err = quantile(&p, 1.0 - 1e-12, &QuadratureConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Precision(_)));
        assert!(quantile(&p, 1.0, &QuadratureConfig::default()).is_err());
        assert!(quantile(&p, 0.0, &QuadratureConfig::default()).is_err());
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let v = [1.0, 1e-16, 1e-16, -1.0];
        assert_eq!(compensated_sum(&v), 2e-16);
    }
}
