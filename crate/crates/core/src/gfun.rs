//! The generating function G_a(x, y) = Σ_{n≥0} P(a + n, x) yⁿ for complex y
//! in the closed unit disk.
//!
//! The production path is the direct series: its coefficients are real,
//! lie in [0, 1] and decrease in n, so for |y| ≤ ρ < 1 the truncation error
//! after N terms is at most P(a+N+1, x) ρ^{N+1} / (1 − ρ). The coefficients
//! do not depend on y, which lets a quadrature precompute them once per
//! abscissa and evaluate every node by Horner's rule.
//!
//! Two closed forms (one in terms of P_c(a, xy), one in terms of
//! P_c(a − 1, xy)) and the limit at y = 1 are kept as independent checks.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::special::{complex_lower_series, gamma_pdf, ln_gamma_term, lower_gamma_p, ComplexValue};

/// Default cap on the number of series terms.
pub const DEFAULT_TERM_CAP: usize = 10_000;

/// Largest |y| the direct series accepts.
pub const SERIES_RADIUS_MAX: f64 = 1.0 - 1e-6;

/// Coefficients below this are treated as an exactly zero tail.
const NEGLIGIBLE: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GfunResult {
    pub value: ComplexValue,
    pub terms_used: usize,
    /// Upper bound on |G − partial sum|.
    pub tail_bound: f64,
}

/// Truncated coefficient table P(a + n, x), n = 0..N, valid for |y| ≤ radius.
#[derive(Debug, Clone)]
pub struct GCoefficients {
    radius: f64,
    coeffs: Vec<f64>,
    tail_bound: f64,
}

impl GCoefficients {
    pub fn new(a: f64, x: f64, radius: f64, tol: f64) -> Result<Self> {
        Self::with_cap(a, x, radius, tol, DEFAULT_TERM_CAP)
    }

    pub fn with_cap(a: f64, x: f64, radius: f64, tol: f64, cap: usize) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::Domain(format!("shape must be positive, got {a}")));
        }
        if !(x >= 0.0) || !x.is_finite() {
            return Err(Error::Domain(format!(
                "x must be finite and non-negative, got {x}"
            )));
        }
        if !(0.0..=SERIES_RADIUS_MAX).contains(&radius) {
            return Err(Error::Domain(format!(
                "series radius {radius} outside [0, 1 - 1e-6]"
            )));
        }
        if !(tol > 0.0) {
            return Err(Error::Domain(format!(
                "tolerance must be positive, got {tol}"
            )));
        }

        let mut coeffs = vec![lower_gamma_p(a, x)];
        if coeffs[0] == 0.0 || radius == 0.0 {
            return Ok(Self {
                radius,
                coeffs,
                tail_bound: 0.0,
            });
        }
        let geometric = 1.0 / (1.0 - radius);
        let mut power = 1.0;
        loop {
            let n = coeffs.len() - 1;
            let shape = a + n as f64;
            let current = coeffs[n];
            // P(b + 1, x) = P(b, x) − x^b e^{−x} / Γ(b + 1). The subtraction is
            // only used while P is O(1); beyond the mode the series for
            // P(b + 1, x) has positive terms and is taken directly.
            let next = if shape + 1.0 <= x {
                (current - ln_gamma_term(shape, x).exp()).max(0.0)
            } else {
                lower_gamma_p(shape + 1.0, x)
            };
            power *= radius;
            if next < NEGLIGIBLE {
                return Ok(Self {
                    radius,
                    coeffs,
                    tail_bound: 0.0,
                });
            }
            let tail = next * power * geometric;
            if tail < tol {
                return Ok(Self {
                    radius,
                    coeffs,
                    tail_bound: tail,
                });
            }
            if coeffs.len() >= cap {
                return Err(Error::non_convergence(format!(
                    "G-function series (a = {a}, x = {x}, |y| = {radius}) after {cap} terms"
                )));
            }
            coeffs.push(next);
        }
    }

    /// Σ_{n ≤ N} P(a+n, x) yⁿ by Horner's rule. Callers keep |y| ≤ radius.
    pub fn eval(&self, y: Complex64) -> Complex64 {
        debug_assert!(y.norm() <= self.radius * (1.0 + 1e-12));
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            acc = acc * y + c;
        }
        acc
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn terms(&self) -> usize {
        self.coeffs.len()
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

/// G_a(x, y) by the direct series, truncated once the geometric tail bound
/// drops below `tol`.
pub fn g_series(a: f64, x: f64, y: ComplexValue, tol: f64) -> Result<GfunResult> {
    if !(tol >= 1e-15) {
        return Err(Error::Domain(format!(
            "series tolerance must be at least 1e-15, got {tol}"
        )));
    }
    let rho = y.norm();
    if rho > SERIES_RADIUS_MAX {
        return Err(Error::Domain(format!("|y| = {rho} exceeds 1 - 1e-6")));
    }
    let table = GCoefficients::new(a, x, rho, tol)?;
    Ok(GfunResult {
        value: table.eval(y),
        terms_used: table.terms(),
        tail_bound: table.tail_bound(),
    })
}

fn check_closed_args(a: f64, x: f64, y: Complex64) -> Result<()> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::Domain(format!("shape must be positive, got {a}")));
    }
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!(
            "x must be finite and non-negative, got {x}"
        )));
    }
    if !(y.norm() < 1.0) {
        return Err(Error::Domain(format!("closed form needs |y| < 1, got {y}")));
    }
    if !((Complex64::new(1.0, 0.0) - y).norm() > 1e-4) {
        return Err(Error::Domain(format!(
            "y = {y} too close to the removable singularity at 1"
        )));
    }
    Ok(())
}

/// Combines P(b, x) and the scaled complex series into (P − T) / (1 − y),
/// where T = e^{ln_scale} · y^{shift} · S(b, xy).
fn closed_combine(
    head: f64,
    ln_scale: f64,
    b: f64,
    x: f64,
    y: Complex64,
    with_y: bool,
    tol: f64,
) -> Result<Complex64> {
    let (series, abs_sum) = complex_lower_series(b, y * x);
    let scale = ln_scale.exp();
    let tail = if with_y {
        y * scale * series
    } else {
        scale * series
    };
    let one_minus_y = Complex64::new(1.0, 0.0) - y;
    let value = (head - tail) / one_minus_y;
    let rounding =
        8.0 * f64::EPSILON * (scale * abs_sum * y.norm().max(1.0) + head) / one_minus_y.norm();
    if rounding > 1e-8 * value.norm() && rounding > tol {
        return Err(Error::Precision(format!(
            "closed-form G at b = {b}, x = {x}, y = {y}: rounding ~{rounding:e} vs |G| = {:e}",
            value.norm()
        )));
    }
    Ok(value)
}

/// G_a(x, y) = (1 − y)^{−1} (P(a, x) − y^{1−a} e^{(y−1)x} P_c(a, xy)).
///
/// The factors y^{1−a} e^{(y−1)x} and the prefix (xy)^a e^{−xy} / Γ(a+1) of
/// P_c are merged analytically into y·x^a e^{−x} / Γ(a+1) before evaluation,
/// which removes the exponential growth of P_c in the left half-plane.
/// `tol` is the absolute rounding error tolerated before a precision error
/// is reported.
pub fn g_closed(a: f64, x: f64, y: ComplexValue, tol: f64) -> Result<ComplexValue> {
    check_closed_args(a, x, y)?;
    let head = lower_gamma_p(a, x);
    if x == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    closed_combine(head, ln_gamma_term(a, x), a, x, y, true, tol)
}

/// G_a(x, y) = (1 − y)^{−1} (P(a−1, x) − y^{1−a} e^{(y−1)x} P_c(a−1, xy))
/// for a ≥ 1, with P(0, ·) := 1.
pub fn g_closed_alt(a: f64, x: f64, y: ComplexValue) -> Result<ComplexValue> {
    check_closed_args(a, x, y)?;
    if a < 1.0 {
        return Err(Error::Domain(format!(
            "shape-shifted closed form needs a >= 1, got {a}"
        )));
    }
    let one_minus_y = Complex64::new(1.0, 0.0) - y;
    let b = a - 1.0;
    if b == 0.0 {
        // y^0 e^{(y−1)x} · 1
        let tail = (-(one_minus_y) * x).exp();
        return Ok((1.0 - tail) / one_minus_y);
    }
    if x == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    // y^{1−a} (xy)^{a−1} e^{(y−1)x − xy} / Γ(a) = x^{a−1} e^{−x} / Γ(a)
    closed_combine(
        lower_gamma_p(b, x),
        ln_gamma_term(b, x),
        b,
        x,
        y,
        false,
        1e-12,
    )
}

/// The limit G_a(x, 1) = x g_a(x) + (1 + x − a) P(a, x).
pub fn g_at_one(a: f64, x: f64) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::Domain(format!("shape must be positive, got {a}")));
    }
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!(
            "x must be finite and non-negative, got {x}"
        )));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    Ok(x * gamma_pdf(a, x)? + (1.0 + x - a) * lower_gamma_p(a, x))
}

/// Dispatches to the series inside the disk and to the limit formula at y = 1.
pub fn g_eval(a: f64, x: f64, y: ComplexValue, tol: f64) -> Result<ComplexValue> {
    let rho = y.norm();
    if rho > 1.0 {
        return Err(Error::Domain(format!("|y| = {rho} > 1")));
    }
    if rho <= SERIES_RADIUS_MAX {
        return Ok(g_series(a, x, y, tol.max(1e-15))?.value);
    }
    if (Complex64::new(1.0, 0.0) - y).norm() < 1e-6 && y.im == 0.0 {
        return Ok(Complex64::new(g_at_one(a, x)?, 0.0));
    }
    Err(Error::Domain(format!(
        "y = {y} lies in the band 1 - 1e-6 < |y| <= 1 away from y = 1"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_argument_is_single_term() {
        for &(a, x) in &[(0.5, 1.2), (3.0, 0.1), (7.5, 20.0)] {
            let r = g_series(a, x, c(0.0, 0.0), 1e-12).unwrap();
            assert_eq!(r.value, c(lower_gamma_p(a, x), 0.0));
            assert_eq!(r.terms_used, 1);
        }
    }

    #[test]
    fn geometric_limit_for_huge_x() {
        let r = g_series(1.0, 700.0, c(0.5, 0.0), 1e-14).unwrap();
        assert!((r.value - c(2.0, 0.0)).norm() < 1e-13);
        assert!(r.tail_bound < 1e-14);
    }

    #[test]
    fn series_matches_closed_form_off_axis() {
        let y = Complex64::from_polar(0.6, PI / 3.0);
        let s = g_series(0.5, 1.2, y, 1e-14).unwrap().value;
        let cl = g_closed(0.5, 1.2, y, 1e-14).unwrap();
        assert!((s - cl).norm() < 1e-10, "{s} vs {cl}");
    }

    #[test]
    fn closed_real_half() {
        let series = g_series(1.0, 1.0, c(0.5, 0.0), 1e-15).unwrap().value;
        let closed = g_closed(1.0, 1.0, c(0.5, 0.0), 1e-15).unwrap();
        assert!((series - closed).norm() < 1e-13);
        let a2 = g_closed(2.0, 3.0, c(0.7, 0.0), 1e-15).unwrap();
        let s2 = g_series(2.0, 3.0, c(0.7, 0.0), 1e-15).unwrap().value;
        assert!((a2 - s2).norm() < 1e-10);
    }

    #[test]
    fn closed_near_zero_argument() {
        let v = g_closed(2.5, 1.7, c(1e-8, 0.0), 1e-15).unwrap();
        assert!((v.re - lower_gamma_p(2.5, 1.7)).abs() < 1e-6);
    }

    #[test]
    fn closed_alt_values() {
        let v = g_closed_alt(1.0, 1.0, c(0.5, 0.0)).unwrap();
        assert!((v.re - 2.0 * (1.0 - (-0.5f64).exp())).abs() < 1e-15);
        assert!((v.re - 0.786_938_680_574_732_6).abs() < 1e-12);
        let s = g_series(1.0, 1.0, c(0.5, 0.0), 1e-15).unwrap().value;
        assert!((v - s).norm() < 1e-13);

        let alt = g_closed_alt(2.0, 3.0, c(0.4, 0.0)).unwrap();
        let ser = g_series(2.0, 3.0, c(0.4, 0.0), 1e-15).unwrap().value;
        assert!((alt - ser).norm() < 1e-10);

        for y in [c(0.3, 0.2), c(-0.5, 0.1), c(0.0, 0.9)] {
            assert_eq!(g_closed_alt(1.5, 0.0, y).unwrap(), c(0.0, 0.0));
        }
        assert!(g_closed_alt(0.5, 1.0, c(0.5, 0.0)).is_err());
    }

    #[test]
    fn closed_form_rejects_singular_point() {
        assert!(g_closed(1.0, 1.0, c(1.0 - 1e-5, 0.0), 1e-12).is_err());
        assert!(g_closed(1.0, 1.0, c(1.2, 0.0), 1e-12).is_err());
    }

    #[test]
    fn limit_at_one() {
        assert_eq!(g_at_one(1.3, 0.0).unwrap(), 0.0);
        assert!((g_at_one(1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        let e2 = (-2.0f64).exp();
        let expected = 2.0 * 2.0 * e2 + (1.0 - 3.0 * e2);
        assert!((g_at_one(2.0, 2.0).unwrap() - expected).abs() < 1e-15);
        assert!((expected - (1.0 + e2)).abs() < 1e-15);
        let near = g_series(2.0, 2.0, c(1.0 - 1e-4, 0.0), 1e-14).unwrap().value;
        assert!((near.re - expected).abs() < 1e-3);
    }

    #[test]
    fn limit_matches_direct_sum() {
        for &(a, x) in &[(0.5, 0.3), (0.8, 12.0), (2.0, 2.0), (3.7, 5.0), (7.5, 30.0)] {
            let mut sum = 0.0;
            let mut n = 0;
            loop {
                let p = lower_gamma_p(a + n as f64, x);
                sum += p;
                if p < 1e-18 * sum {
                    break;
                }
                n += 1;
            }
            let limit = g_at_one(a, x).unwrap();
            assert!(
                (limit - sum).abs() < 1e-13 * sum,
                "a={a} x={x}: {limit} vs {sum}"
            );
        }
    }

    #[test]
    fn dispatcher() {
        assert_eq!(
            g_eval(2.0, 1.0, c(0.0, 0.0), 1e-12).unwrap(),
            c(lower_gamma_p(2.0, 1.0), 0.0)
        );
        assert_eq!(
            g_eval(2.0, 2.0, c(1.0, 0.0), 1e-12).unwrap().re,
            g_at_one(2.0, 2.0).unwrap()
        );
        let y = Complex64::from_polar(0.9, 0.2);
        let d = g_eval(1.7, 4.0, y, 1e-13).unwrap();
        let cl = g_closed(1.7, 4.0, y, 1e-13).unwrap();
        assert!((d - cl).norm() < 1e-10);
        assert!(matches!(
            g_eval(1.0, 1.0, c(1.1, 0.0), 1e-12),
            Err(Error::Domain(_))
        ));
        assert!(g_eval(1.0, 1.0, c(0.0, 1.0 - 1e-8), 1e-12).is_err());
    }

    #[test]
    fn term_cap_reports_non_convergence() {
        let err = GCoefficients::with_cap(1.0, 500.0, 0.999, 1e-14, 50).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { .. }));
    }

    #[test]
    fn coefficients_decrease_and_stay_in_unit_interval() {
        let t = GCoefficients::new(2.3, 40.0, 0.95, 1e-14).unwrap();
        let cs = t.coefficients();
        assert!(cs.windows(2).all(|w| w[1] <= w[0]));
        assert!(cs.iter().all(|&p| (0.0..=1.0).contains(&p)));
    }
}
