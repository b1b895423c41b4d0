//! Closed-form approximations: Wald's SPRT formulas, Khan's CuSum run
//! lengths, the asymptotic threshold `h*(gamma)` and the detection delay
//! `n(gamma)` in its three regimes.
//!
//! Throughout, `d_pre_post` is `D(q || q_gamma)` and `d_post_pre` is
//! `D(q_gamma || q)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{AdversarySchedule, BaseParams};
use crate::special::{g_mapping, positive_root_exp_excess};

/// Limit of `y = gamma * D(q || q_gamma)` along a schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum Regime {
    /// `y -> inf`.
    Detectable,
    /// `y -> y0` with `0 < y0 < inf`.
    Critical { y: f64 },
    /// `y -> 0`.
    DeepCovert,
}

impl Regime {
    pub fn critical(y: f64) -> Result<Self> {
        if !(y > 0.0 && y.is_finite()) {
            return Err(Error::domain("Regime::critical", y, "0 < y < inf"));
        }
        Ok(Regime::Critical { y })
    }

    pub fn label(&self) -> &'static str {
        match self {
            Regime::Detectable => "detectable",
            Regime::Critical { .. } => "critical",
            Regime::DeepCovert => "deep_covert",
        }
    }

    pub fn critical_y(&self) -> Option<f64> {
        match *self {
            Regime::Critical { y } => Some(y),
            _ => None,
        }
    }
}

fn positive(function: &'static str, name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(function, v, name))
    }
}

fn boundaries(function: &'static str, a: f64, b: f64) -> Result<()> {
    if !(a < 0.0 && a.is_finite()) {
        return Err(Error::domain(function, a, "lower boundary a < 0"));
    }
    positive(function, "upper boundary b > 0", b)
}

/// Wald's approximations to `(E_post[T], E_pre[T])` for the SPRT with
/// boundaries `a < 0 < b`.
pub fn sprt_expected_samples(
    d_post_pre: f64,
    d_pre_post: f64,
    a: f64,
    b: f64,
) -> Result<(f64, f64)> {
    positive("sprt_expected_samples", "D(q_gamma||q) > 0", d_post_pre)?;
    positive("sprt_expected_samples", "D(q||q_gamma) > 0", d_pre_post)?;
    boundaries("sprt_expected_samples", a, b)?;
    let (big_a, big_b) = (a.exp(), b.exp());
    let span = big_b - big_a;
    let e_post = (big_a * (big_b - 1.0) * a + big_b * (1.0 - big_a) * b) / (d_post_pre * span);
    let e_pre = -((big_b - 1.0) * a + (1.0 - big_a) * b) / (d_pre_post * span);
    Ok((e_post, e_pre))
}

/// Limits of the SPRT error probabilities `(alpha, beta)` as the divergences
/// vanish with the boundaries held fixed.
pub fn sprt_error_asymptotes(a: f64, b: f64) -> Result<(f64, f64)> {
    boundaries("sprt_error_asymptotes", a, b)?;
    let (big_a, big_b) = (a.exp(), b.exp());
    let span = big_b - big_a;
    Ok(((1.0 - big_a) / span, big_a * (big_b - 1.0) / span))
}

/// Khan's approximations `(ADD, AT2FA)` for CuSum at threshold `h`.
pub fn khan_expected_run_lengths(d_post_pre: f64, d_pre_post: f64, h: f64) -> Result<(f64, f64)> {
    positive("khan_expected_run_lengths", "D(q_gamma||q) > 0", d_post_pre)?;
    positive("khan_expected_run_lengths", "D(q||q_gamma) > 0", d_pre_post)?;
    positive("khan_expected_run_lengths", "h > 0", h)?;
    // e^-h + h - 1 and e^h - h - 1 without cancellation for small h.
    let add = ((-h).exp_m1() + h) / d_post_pre;
    let at2fa = (h.exp_m1() - h) / d_pre_post;
    Ok((add, at2fa))
}

/// The threshold solving `e^h - h - 1 = gamma * D(q || q_gamma)`.
pub fn h_star_asymptotic(gamma: f64, d_pre_post: f64) -> Result<f64> {
    positive("h_star_asymptotic", "gamma > 0", gamma)?;
    positive("h_star_asymptotic", "D(q||q_gamma) > 0", d_pre_post)?;
    let y = gamma * d_pre_post;
    if !y.is_finite() {
        return Err(Error::domain("h_star_asymptotic", y, "finite gamma * D"));
    }
    Ok(positive_root_exp_excess(y))
}

/// Asymptotic detection delay `n(gamma)` in the given regime.
pub fn n_gamma_asymptotic(
    gamma: f64,
    d_pre_post: f64,
    d_post_pre: f64,
    regime: Regime,
) -> Result<f64> {
    positive("n_gamma_asymptotic", "gamma > 0", gamma)?;
    positive("n_gamma_asymptotic", "D(q||q_gamma) > 0", d_pre_post)?;
    positive("n_gamma_asymptotic", "D(q_gamma||q) > 0", d_post_pre)?;
    let y = gamma * d_pre_post;
    match regime {
        Regime::Detectable => {
            if y <= 1.0 {
                return Err(Error::domain(
                    "n_gamma_asymptotic",
                    y,
                    "gamma * D > 1 in the detectable regime",
                ));
            }
            Ok(y.ln() / d_post_pre)
        }
        Regime::Critical { y: y0 } => {
            positive("n_gamma_asymptotic", "critical y > 0", y0)?;
            Ok(y / d_post_pre * g_mapping(y0)? / y0)
        }
        Regime::DeepCovert => Ok(y / d_post_pre),
    }
}

/// Regime of a schedule, read off the decay exponent of `gamma * D`.
pub fn classify_regime(schedule: &AdversarySchedule, _base: &BaseParams) -> Result<Regime> {
    schedule.validate()?;
    let delta = schedule.delta();
    if delta < 0.5 {
        return Ok(Regime::Detectable);
    }
    if delta > 0.5 {
        return Ok(Regime::DeepCovert);
    }
    let c = schedule.c();
    // gamma * D ~ gamma mu^2 / 2, gamma sigma^4 / 4 and gamma (1 - lambda_gamma/lambda)^2 / 2.
    let y = match schedule {
        AdversarySchedule::GaussianMean { .. } => c * c / 2.0,
        AdversarySchedule::GaussianVariance { .. } => c * c / 4.0,
        AdversarySchedule::ExponentialRate { .. } => c * c / 2.0,
    };
    Regime::critical(y)
}

/// Regime for a single `(gamma, D)` point with no schedule: always
/// `Critical { y = gamma * D }`, whose formula interpolates the other two.
pub fn classify_point(gamma: f64, d_pre_post: f64) -> Result<Regime> {
    Regime::critical(gamma * d_pre_post)
}

/// Lorden's `log(gamma) / D(q_gamma || q)` for a fixed post-change law.
pub fn lorden_baseline(gamma: f64, d_post_pre: f64) -> Result<f64> {
    if !(gamma > 1.0 && gamma.is_finite()) {
        return Err(Error::domain("lorden_baseline", gamma, "gamma > 1"));
    }
    positive("lorden_baseline", "D(q_gamma||q) > 0", d_post_pre)?;
    Ok(gamma.ln() / d_post_pre)
}

/// `n(gamma) * D(q || q_gamma)^rho`.
pub fn total_damage(n_gamma: f64, d_pre_post: f64, rho: f64) -> Result<f64> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::domain("total_damage", rho, "0 < rho < 1"));
    }
    positive("total_damage", "n > 0", n_gamma)?;
    positive("total_damage", "D(q||q_gamma) > 0", d_pre_post)?;
    Ok(n_gamma * d_pre_post.powf(rho))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticPrediction {
    pub gamma: f64,
    pub d_pre_post: f64,
    pub d_post_pre: f64,
    pub regime: Regime,
    pub h_star: f64,
    pub n_gamma: f64,
    pub lorden_baseline: f64,
    pub damage: Option<f64>,
}

/// Every asymptotic quantity for one point of a schedule.
pub fn predict(
    schedule: &AdversarySchedule,
    base: &BaseParams,
    gamma: f64,
    rho: Option<f64>,
) -> Result<AsymptoticPrediction> {
    let model = schedule.instantiate(gamma, base)?;
    let div = model.kl_divergences();
    let regime = classify_regime(schedule, base)?;
    let h_star = h_star_asymptotic(gamma, div.pre_post)?;
    let n_gamma = n_gamma_asymptotic(gamma, div.pre_post, div.post_pre, regime)?;
    let damage = rho
        .map(|r| total_damage(n_gamma, div.pre_post, r))
        .transpose()?;
    Ok(AsymptoticPrediction {
        gamma,
        d_pre_post: div.pre_post,
        d_post_pre: div.post_pre,
        regime,
        h_star,
        n_gamma,
        lorden_baseline: lorden_baseline(gamma, div.post_pre)?,
        damage,
    })
}
