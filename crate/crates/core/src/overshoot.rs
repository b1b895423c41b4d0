//! Conditional overshoot functionals of a single LLR increment.
//!
//! For a law `p` of `Y`, the SPRT overshoots vanish whenever
//! `sup_{y >= 0} E_p[Y - y | Y >= y]` and `inf_{y <= 0} E_p[Y - y | Y <= y]`
//! both go to zero. The Gaussian case reduces to a shifted, scaled
//! noncentral chi-square and is expressed through [`j_mapping`] and
//! [`g2_mapping`]; the exponential case is piecewise memoryless.
//!
//! Notation: `W ~ N(theta, 1)`; `J(x, theta) = E[W^2 - x^2 | |W| >= x]` and
//! `g2(x, theta) = E[W^2 - x^2 | |W| <= x]`.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{chi, xi, ChangeModel, ExponentialModel, GaussianModel, Hypothesis};
use crate::special::{erf, erfc, erfcx};

const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

/// `E[Z - x | Z >= x]` for standard normal `Z`.
pub fn delta1(x: f64) -> f64 {
    if x > 100.0 {
        let u = 1.0 / (x * x);
        return (1.0 + u * (-2.0 + u * (10.0 + u * (-74.0 + u * 706.0)))) / x;
    }
    SQRT_2_OVER_PI / erfcx(x * FRAC_1_SQRT_2) - x
}

/// `Delta1(-x)`, i.e. `E[x - Z | Z <= x]` for standard normal `Z`.
pub fn delta2(x: f64) -> f64 {
    delta1(-x)
}

/// `E[W^2 - x^2 | |W| >= x]` with `W ~ N(theta, 1)`.
///
/// Written as a mixture of the two tails, each of which is
/// `1 + (x +- theta) Delta1(x -+ theta)`, so nothing cancels for large `x`.
pub fn j_mapping(x: f64, theta: f64) -> f64 {
    let x = x.abs();
    let theta = theta.abs();
    let (a, b) = ((x - theta) * FRAC_1_SQRT_2, (x + theta) * FRAC_1_SQRT_2);
    // Lower-tail to upper-tail probability ratio.
    let r = if a >= 0.0 {
        erfcx(b) / erfcx(a) * (-2.0 * x * theta).exp()
    } else {
        erfc(b) / erfc(a)
    };
    let upper = (x + theta) * delta1(x - theta);
    let lower = (x - theta) * delta1(x + theta);
    1.0 + (upper + r * lower) / (1.0 + r)
}

/// `E[W^2 - x^2 | |W| <= x]` with `W ~ N(theta, 1)`, `x >= 0`.
pub fn g2_mapping(x: f64, theta: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::domain("g2_mapping", x, "x >= 0"));
    }
    let theta = theta.abs();
    let t2 = theta * theta;
    if x < 0.05 / theta.max(1.0) {
        let x2 = x * x;
        let c2 = -2.0 / 3.0;
        let c4 = 2.0 / 45.0 * (t2 - 1.0);
        let c6 = 2.0 / 945.0 * (1.0 - 2.0 * t2 - 2.0 * t2 * t2);
        return Ok(x2 * (c2 + x2 * (c4 + x2 * c6)));
    }
    let ratio = if theta > x {
        let a = (theta - x) * FRAC_1_SQRT_2;
        let b = (theta + x) * FRAC_1_SQRT_2;
        let e = (-2.0 * theta * x).exp();
        SQRT_2_OVER_PI * ((theta - x) * e - (theta + x)) / (erfcx(a) - erfcx(b) * e)
    } else {
        let num = (theta - x) * (-0.5 * (theta + x).powi(2)).exp()
            - (theta + x) * (-0.5 * (theta - x).powi(2)).exp();
        SQRT_2_OVER_PI * num / (erf((theta + x) * FRAC_1_SQRT_2) - erf((theta - x) * FRAC_1_SQRT_2))
    };
    Ok((ratio + t2 - x * x + 1.0).min(0.0))
}

/// How a supremum or infimum in a report was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OvershootMethod {
    /// Closed form in the model parameters.
    ClosedForm,
    /// Value at an endpoint of an interval on which the functional is monotone.
    MonotoneEndpoint,
    /// Limit at infinity, which dominated every grid point.
    AsymptoticLimit,
    /// Log grid refined by golden section.
    Grid,
}

impl OvershootMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            OvershootMethod::ClosedForm => "closed_form",
            OvershootMethod::MonotoneEndpoint => "monotone_endpoint",
            OvershootMethod::AsymptoticLimit => "asymptotic_limit",
            OvershootMethod::Grid => "grid",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OvershootReport {
    /// `sup_{y >= 0} E_p[Y - y | Y >= y]`.
    pub sup_upper: f64,
    /// `inf_{y <= 0} E_p[Y - y | Y <= y]`.
    pub inf_lower: f64,
    pub hyp: Hypothesis,
    pub sup_method: OvershootMethod,
    pub inf_method: OvershootMethod,
}

impl OvershootReport {
    /// Largest of `sup_upper` and `|inf_lower|`.
    pub fn magnitude(&self) -> f64 {
        self.sup_upper.max(-self.inf_lower)
    }
}

const GRID_POINTS: usize = 512;

/// Maximize `f` over `[lo, inf)` on a log grid of offsets, then refine.
fn grid_sup<F: Fn(f64) -> f64>(f: F, lo: f64, span: f64) -> (f64, f64) {
    let (e0, e1) = (-8.0f64, span.log10());
    let xs: Vec<f64> = std::iter::once(lo)
        .chain((0..GRID_POINTS - 1).map(|i| {
            let e = e0 + (e1 - e0) * i as f64 / (GRID_POINTS - 2) as f64;
            lo + 10f64.powf(e)
        }))
        .collect();
    let values: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let best = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("grid is non-empty");
    let left = xs[best.saturating_sub(1)];
    let right = xs[(best + 1).min(xs.len() - 1)];
    let (x, v) = golden_max(&f, left, right);
    if v >= values[best] {
        (x, v)
    } else {
        (xs[best], values[best])
    }
}

fn golden_max<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-14 * (a.abs() + b.abs()).max(1e-300) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Supremum and infimum of the conditional excesses for a Gaussian model.
pub fn gaussian_overshoot_report(model: &GaussianModel, hyp: Hypothesis) -> OvershootReport {
    let mu = model.mu().abs();
    let Some(k) = model.llr_constants() else {
        // Y = m + |mu| Z with m = xi mu^2 / 2; both functionals are monotone in y.
        let z0 = -mu * xi(hyp) / 2.0;
        return OvershootReport {
            sup_upper: mu * delta1(z0),
            inf_lower: -mu * delta2(z0),
            hyp,
            sup_method: OvershootMethod::MonotoneEndpoint,
            inf_method: OvershootMethod::MonotoneEndpoint,
        };
    };
    let chi_p = chi(model, hyp);
    let scale = model.sigma2() * chi_p / (2.0 * (1.0 + model.sigma2()));
    let theta = (k.tau * chi_p.sqrt()).abs();
    let x_min = (-k.nu * k.support_edge / chi_p).sqrt();

    let (sup_upper, sup_method) = if theta >= 3.0 * FRAC_1_SQRT_2 && x_min >= FRAC_1_SQRT_2 {
        (
            scale * j_mapping(x_min, theta),
            OvershootMethod::MonotoneEndpoint,
        )
    } else {
        let (_, v) = grid_sup(|x| j_mapping(x, theta), x_min, 60.0 + theta);
        if v >= 2.0 {
            (scale * v, OvershootMethod::Grid)
        } else {
            (scale * 2.0, OvershootMethod::AsymptoticLimit)
        }
    };
    let inf_lower = scale * g2_mapping(x_min, theta).expect("x_min >= 0");
    OvershootReport {
        sup_upper,
        inf_lower,
        hyp,
        sup_method,
        inf_method: OvershootMethod::MonotoneEndpoint,
    }
}

/// Closed-form overshoot bounds for an exponential model.
///
/// Where the conditional excess is constant in `y` the value is exact; on
/// the other branch the reported value is `2 / d` with
/// `d = rate / |lambda_post - lambda_pre|`, the limit used in the
/// sufficient conditions. [`exponential_conditional_excess_upper`] and
/// [`exponential_conditional_excess_lower`] give the exact functionals.
pub fn exponential_overshoot_report(model: &ExponentialModel, hyp: Hypothesis) -> OvershootReport {
    let (lambda, lambda_g) = (model.lambda_pre(), model.lambda_post());
    let rate = model.rate(hyp);
    let (sup_upper, inf_lower) = if lambda_g < lambda {
        (
            (lambda - lambda_g) / rate,
            -2.0 * (lambda - lambda_g) / rate,
        )
    } else {
        (2.0 * (lambda_g - lambda) / rate, (lambda - lambda_g) / rate)
    };
    OvershootReport {
        sup_upper,
        inf_lower,
        hyp,
        sup_method: OvershootMethod::ClosedForm,
        inf_method: OvershootMethod::ClosedForm,
    }
}

/// Dispatch on the model family.
pub fn overshoot_report(model: &ChangeModel, hyp: Hypothesis) -> OvershootReport {
    match model {
        ChangeModel::Gaussian(m) => gaussian_overshoot_report(m, hyp),
        ChangeModel::Exponential(m) => exponential_overshoot_report(m, hyp),
    }
}

/// `E_p[Y - y | Y >= y]`; `None` when `P_p(Y >= y) = 0`.
pub fn conditional_excess_upper(model: &ChangeModel, hyp: Hypothesis, y: f64) -> Option<f64> {
    match model {
        ChangeModel::Gaussian(m) => Some(gaussian_conditional_excess(m, hyp, y, true)),
        ChangeModel::Exponential(m) => exponential_conditional_excess_upper(m, hyp, y),
    }
}

/// `E_p[Y - y | Y <= y]`; `None` when `P_p(Y <= y) = 0`.
pub fn conditional_excess_lower(model: &ChangeModel, hyp: Hypothesis, y: f64) -> Option<f64> {
    match model {
        ChangeModel::Gaussian(m) => {
            if let Some(k) = m.llr_constants() {
                if y <= k.support_edge {
                    return None;
                }
            }
            Some(gaussian_conditional_excess(m, hyp, y, false))
        }
        ChangeModel::Exponential(m) => exponential_conditional_excess_lower(m, hyp, y),
    }
}

fn gaussian_conditional_excess(m: &GaussianModel, hyp: Hypothesis, y: f64, upper: bool) -> f64 {
    let Some(k) = m.llr_constants() else {
        let s = m.mu().abs();
        let z = (y - xi(hyp) * s * s / 2.0) / s;
        return if upper { s * delta1(z) } else { -s * delta2(z) };
    };
    let chi_p = chi(m, hyp);
    let scale = m.sigma2() * chi_p / (2.0 * (1.0 + m.sigma2()));
    let theta = k.tau * chi_p.sqrt();
    if y <= k.support_edge {
        // Only reachable for the upper functional: the event is certain.
        return k.support_edge + scale * (1.0 + theta * theta) - y;
    }
    let x = ((y - k.support_edge) / scale).sqrt();
    if upper {
        scale * j_mapping(x, theta)
    } else {
        scale * g2_mapping(x, theta).expect("x >= 0")
    }
}

/// Exact `E_p[Y - y | Y >= y]` for the exponential model.
pub fn exponential_conditional_excess_upper(
    m: &ExponentialModel,
    hyp: Hypothesis,
    y: f64,
) -> Option<f64> {
    let a = m.llr_offset();
    let slope = m.lambda_pre() - m.lambda_post();
    let d = m.rate(hyp) / slope.abs();
    if slope > 0.0 {
        // Y = a + slope * X >= a.
        Some(if y <= a { a + 1.0 / d - y } else { 1.0 / d })
    } else {
        if y >= a {
            return None;
        }
        let t = a - y;
        Some(t / -(-d * t).exp_m1() - 1.0 / d)
    }
}

/// Exact `E_p[Y - y | Y <= y]` for the exponential model.
pub fn exponential_conditional_excess_lower(
    m: &ExponentialModel,
    hyp: Hypothesis,
    y: f64,
) -> Option<f64> {
    let a = m.llr_offset();
    let slope = m.lambda_pre() - m.lambda_post();
    let d = m.rate(hyp) / slope.abs();
    if slope > 0.0 {
        if y <= a {
            return None;
        }
        let t = y - a;
        Some(1.0 / d - t / -(-d * t).exp_m1())
    } else {
        Some(if y >= a { a - 1.0 / d - y } else { -1.0 / d })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate, integrate_lower_tail, integrate_upper_tail, QuadOptions};
    use approx::assert_relative_eq;

    fn phi(z: f64) -> f64 {
        (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
    }

    fn opts() -> QuadOptions {
        QuadOptions {
            abs_tol: 1e-15,
            rel_tol: 1e-13,
            max_subintervals: 4000,
        }
    }

    fn delta1_oracle(x: f64) -> f64 {
        let num = integrate_upper_tail(|t| (t - x) * phi(t), x, opts())
            .unwrap()
            .value;
        let den = integrate_upper_tail(phi, x, opts()).unwrap().value;
        num / den
    }

    fn j_oracle(x: f64, theta: f64) -> f64 {
        let f = |w: f64| (w * w - x * x) * phi(w - theta);
        let num = integrate_upper_tail(f, x, opts()).unwrap().value
            + integrate_lower_tail(f, -x, opts()).unwrap().value;
        let den = integrate_upper_tail(|w| phi(w - theta), x, opts())
            .unwrap()
            .value
            + integrate_lower_tail(|w| phi(w - theta), -x, opts())
                .unwrap()
                .value;
        num / den
    }

    fn g2_oracle(x: f64, theta: f64) -> f64 {
        let num = integrate(|w| (w * w - x * x) * phi(w - theta), -x, x, opts())
            .unwrap()
            .value;
        let den = integrate(|w| phi(w - theta), -x, x, opts()).unwrap().value;
        num / den
    }

    #[test]
    fn delta1_values() {
        assert!((delta1(0.0) - SQRT_2_OVER_PI).abs() < 1e-15);
        assert!(delta1(1.0) >= delta1(2.0));
        assert!((delta1(3.0) - delta1_oracle(3.0)).abs() < 1e-10);
        // Series and direct forms meet at the switch.
        let direct = SQRT_2_OVER_PI / erfcx(100.0 * FRAC_1_SQRT_2) - 100.0;
        assert_relative_eq!(delta1(100.0 + 1e-9), direct, max_relative = 1e-9);
        assert!((delta1(-40.0) - 40.0).abs() < 1e-12);
    }

    #[test]
    fn delta2_values() {
        assert_eq!(delta2(0.0), delta1(0.0));
        assert!(delta2(-40.0) < 0.03);
        // Integral definition E[Z - x | Z <= x] is -delta2(x).
        let x = -5.0;
        let num = integrate_lower_tail(|t| (t - x) * phi(t), x, opts())
            .unwrap()
            .value;
        let den = integrate_lower_tail(phi, x, opts()).unwrap().value;
        assert!((num / den + delta2(x)).abs() < 1e-10);
    }

    #[test]
    fn j_values() {
        assert_relative_eq!(j_mapping(0.0, 1.0), 2.0, max_relative = 1e-14);
        assert_relative_eq!(j_mapping(1e-6, 1.0), 2.0, max_relative = 1e-6);
        assert!((j_mapping(2.0, 3.0) - j_oracle(2.0, 3.0)).abs() < 1e-8);
        assert_eq!(j_mapping(1.3, 0.7), j_mapping(1.3, -0.7));
        // Approaches 2 + 2 theta / x.
        let j = j_mapping(1e4, 1.0);
        assert!((j - 2.0 - 2.0 / 1e4).abs() < 1e-7);
    }

    #[test]
    fn g2_values() {
        assert_eq!(g2_mapping(0.0, 1.0).unwrap(), 0.0);
        assert!(g2_mapping(0.5, 1.0).unwrap() >= g2_mapping(1.5, 1.0).unwrap());
        assert!((g2_mapping(1.0, 2.0).unwrap() - g2_oracle(1.0, 2.0)).abs() < 1e-8);
        assert!(g2_mapping(-0.1, 1.0).is_err());
        for &(x, t) in &[(0.3, 1.0), (2.0, 0.5), (0.04, 0.0), (1e-3, 3.0)] {
            assert!((g2_mapping(x, t).unwrap() - g2_mapping(x, -t).unwrap()).abs() < 1e-14);
        }
    }

    #[test]
    fn g2_series_meets_direct_form() {
        for &theta in &[0.0, 0.5, 1.0, 3.0, 8.0] {
            let x = 0.05 / f64::max(theta, 1.0);
            let below = g2_mapping(x * (1.0 - 1e-9), theta).unwrap();
            let above = g2_mapping(x * (1.0 + 1e-9), theta).unwrap();
            assert_relative_eq!(below, above, max_relative = 1e-8);
        }
    }

    #[test]
    fn gaussian_mean_shift_report() {
        let m = GaussianModel::new(0.1, 0.0).unwrap();
        let r = gaussian_overshoot_report(&m, Hypothesis::Post);
        assert_relative_eq!(r.sup_upper, 0.1 * delta1(-0.05), max_relative = 1e-15);
        assert!(r.inf_lower < 0.0);
        // Conditional expectation of Y ~ N(0.005, 0.01) above 0, by quadrature.
        let dens = |t: f64| phi((t - 0.005) / 0.1) / 0.1;
        let num = integrate_upper_tail(|t| t * dens(t), 0.0, opts())
            .unwrap()
            .value;
        let den = integrate_upper_tail(dens, 0.0, opts()).unwrap().value;
        assert!((r.sup_upper - num / den).abs() < 1e-8);
        let tiny = GaussianModel::new(1e-4, 0.0).unwrap();
        assert!(gaussian_overshoot_report(&tiny, Hypothesis::Pre).sup_upper < 1e-4);
    }

    #[test]
    fn gaussian_variance_report_uses_limit() {
        let m = GaussianModel::new(0.0, 0.01).unwrap();
        let r = gaussian_overshoot_report(&m, Hypothesis::Pre);
        assert_eq!(r.sup_method, OvershootMethod::AsymptoticLimit);
        assert_relative_eq!(r.sup_upper, 0.01 / 1.01, max_relative = 1e-14);
        assert!(r.inf_lower <= 0.0);
    }

    #[test]
    fn exact_excess_agrees_with_report_for_gaussian_scale_change() {
        let model = ChangeModel::gaussian(0.3, 0.5).unwrap();
        for hyp in [Hypothesis::Pre, Hypothesis::Post] {
            let r = overshoot_report(&model, hyp);
            for i in 0..200 {
                let y = i as f64 * 0.05;
                let v = conditional_excess_upper(&model, hyp, y).unwrap();
                assert!(
                    v <= r.sup_upper * (1.0 + 1e-9),
                    "y={y} v={v} sup={}",
                    r.sup_upper
                );
                let y = -(i as f64) * 0.002;
                if let Some(v) = conditional_excess_lower(&model, hyp, y) {
                    assert!(v >= r.inf_lower * (1.0 + 1e-9) - 1e-15);
                }
            }
        }
    }

    #[test]
    fn gaussian_excess_matches_llr_density_quadrature() {
        let model = ChangeModel::gaussian(0.4, 0.3).unwrap();
        let y = 0.2;
        let f = |t: f64| model.llr_density(Hypothesis::Post, t);
        let num = integrate_upper_tail(|t| (t - y) * f(t), y, opts())
            .unwrap()
            .value;
        let den = integrate_upper_tail(f, y, opts()).unwrap().value;
        let v = conditional_excess_upper(&model, Hypothesis::Post, y).unwrap();
        assert!((v - num / den).abs() < 1e-8);
    }

    #[test]
    fn exponential_closed_forms() {
        let m = ExponentialModel::new(1.0, 0.8).unwrap();
        assert_relative_eq!(
            exponential_overshoot_report(&m, Hypothesis::Pre).sup_upper,
            0.2,
            max_relative = 1e-14
        );
        let m = ExponentialModel::new(1.0, 1.3).unwrap();
        let r = exponential_overshoot_report(&m, Hypothesis::Pre);
        assert_relative_eq!(r.sup_upper, 0.6, max_relative = 1e-14);
        assert_relative_eq!(r.inf_lower, -0.3, max_relative = 1e-14);
        let r = exponential_overshoot_report(&m, Hypothesis::Post);
        assert_relative_eq!(r.sup_upper, 0.6 / 1.3, max_relative = 1e-14);
    }

    #[test]
    fn exponential_exact_excess() {
        // Constant branch: memorylessness.
        let m = ExponentialModel::new(1.0, 0.8).unwrap();
        for y in [0.0, 0.5, 3.0] {
            assert_relative_eq!(
                exponential_conditional_excess_upper(&m, Hypothesis::Pre, y).unwrap(),
                0.2,
                max_relative = 1e-14
            );
        }
        // Non-constant branch stays under the 2/d bound and matches quadrature.
        let m = ExponentialModel::new(1.0, 1.3).unwrap();
        let model = ChangeModel::Exponential(m);
        let v = exponential_conditional_excess_upper(&m, Hypothesis::Pre, 0.0).unwrap();
        assert!(v > 0.0 && v < 0.6);
        let a = m.llr_offset();
        let f = |t: f64| model.llr_density(Hypothesis::Pre, t);
        let num = integrate(|t| t * f(t), 0.0, a, opts()).unwrap().value;
        let den = integrate(f, 0.0, a, opts()).unwrap().value;
        assert!((v - num / den).abs() < 1e-10);
        assert!(exponential_conditional_excess_upper(&m, Hypothesis::Pre, a + 1.0).is_none());
        assert_relative_eq!(
            exponential_conditional_excess_lower(&m, Hypothesis::Pre, -1.0).unwrap(),
            -0.3,
            max_relative = 1e-14
        );
    }
}
