//! Pre-change / post-change model pairs, their KL divergences, LLR sampling,
//! LLR densities, and `gamma`-indexed adversary schedules.
//!
//! The pre-change law is `q`, the post-change law is `q_gamma`. Both models
//! shrink toward `q` as the schedule parameter `gamma` grows.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{excess_over_log1p, log_minus_reciprocal_gap};

/// Which law generates the observations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hypothesis {
    /// Pre-change law `q`.
    Pre,
    /// Post-change law `q_gamma`.
    Post,
}

impl Hypothesis {
    pub fn as_str(self) -> &'static str {
        match self {
            Hypothesis::Pre => "pre",
            Hypothesis::Post => "post",
        }
    }
}

/// `q = N(0, 1)` against `q_gamma = N(mu, 1 + sigma2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianModel {
    mu: f64,
    sigma2: f64,
}

impl GaussianModel {
    pub fn new(mu: f64, sigma2: f64) -> Result<Self> {
        if !mu.is_finite() || !sigma2.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "gaussian parameters must be finite (mu={mu}, sigma2={sigma2})"
            )));
        }
        if sigma2 < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "sigma2 must be >= 0, got {sigma2}"
            )));
        }
        if mu == 0.0 && sigma2 == 0.0 {
            return Err(Error::InvalidParameter(
                "(mu, sigma2) = (0, 0) makes the two laws identical".into(),
            ));
        }
        Ok(Self { mu, sigma2 })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// Constants of the LLR law when `sigma2 > 0`.
    pub fn llr_constants(&self) -> Option<GaussianLlrConstants> {
        (self.sigma2 > 0.0).then(|| {
            let s2 = self.sigma2;
            GaussianLlrConstants {
                nu: 2.0 * (1.0 + s2) / s2,
                tau: self.mu / s2,
                support_edge: -self.mu * self.mu / (2.0 * s2) - 0.5 * s2.ln_1p(),
            }
        })
    }

    fn llr(&self, x: f64) -> f64 {
        let v = 1.0 + self.sigma2;
        let d = x - self.mu;
        -0.5 * self.sigma2.ln_1p() - d * d / (2.0 * v) + 0.5 * x * x
    }
}

/// `nu`, `tau` and the lower support edge of the Gaussian LLR when `sigma2 > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianLlrConstants {
    pub nu: f64,
    pub tau: f64,
    /// Smallest value the LLR can take: `-mu^2/(2 sigma2) - log(1 + sigma2)/2`.
    pub support_edge: f64,
}

/// Gaussian variance factor `chi_p`: `1 + sigma2` under `q_gamma`, `1` under `q`.
pub fn chi(model: &GaussianModel, hyp: Hypothesis) -> f64 {
    match hyp {
        Hypothesis::Pre => 1.0,
        Hypothesis::Post => 1.0 + model.sigma2,
    }
}

/// Sign `xi_p`: `+1` under `q_gamma`, `-1` under `q`.
pub fn xi(hyp: Hypothesis) -> f64 {
    match hyp {
        Hypothesis::Pre => -1.0,
        Hypothesis::Post => 1.0,
    }
}

/// `q = Exp(lambda_pre)` against `q_gamma = Exp(lambda_post)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentialModel {
    lambda_pre: f64,
    lambda_post: f64,
}

impl ExponentialModel {
    pub fn new(lambda_pre: f64, lambda_post: f64) -> Result<Self> {
        if !(lambda_pre > 0.0 && lambda_pre.is_finite())
            || !(lambda_post > 0.0 && lambda_post.is_finite())
        {
            return Err(Error::InvalidParameter(format!(
                "exponential rates must be positive and finite (lambda={lambda_pre}, lambda_gamma={lambda_post})"
            )));
        }
        if lambda_pre == lambda_post {
            return Err(Error::InvalidParameter(
                "lambda_gamma == lambda makes the two laws identical".into(),
            ));
        }
        Ok(Self {
            lambda_pre,
            lambda_post,
        })
    }

    pub fn lambda_pre(&self) -> f64 {
        self.lambda_pre
    }

    pub fn lambda_post(&self) -> f64 {
        self.lambda_post
    }

    /// Rate of the sampling law under `hyp`.
    pub fn rate(&self, hyp: Hypothesis) -> f64 {
        match hyp {
            Hypothesis::Pre => self.lambda_pre,
            Hypothesis::Post => self.lambda_post,
        }
    }

    /// `a_gamma = log(lambda_gamma / lambda)`, the edge of the LLR support.
    pub fn llr_offset(&self) -> f64 {
        (self.lambda_post / self.lambda_pre).ln()
    }

    fn llr(&self, x: f64) -> f64 {
        self.llr_offset() + (self.lambda_pre - self.lambda_post) * x
    }

    /// `(lambda_gamma - lambda) / lambda`.
    fn relative_shift(&self) -> f64 {
        (self.lambda_post - self.lambda_pre) / self.lambda_pre
    }
}

/// KL divergences between the two laws of a model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Divergences {
    /// `D(q_gamma || q)`, the drift of the LLR after the change.
    pub post_pre: f64,
    /// `D(q || q_gamma)`, minus the drift of the LLR before the change.
    pub pre_post: f64,
}

/// A pre-change / post-change pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChangeModel {
    Gaussian(GaussianModel),
    Exponential(ExponentialModel),
}

impl From<GaussianModel> for ChangeModel {
    fn from(m: GaussianModel) -> Self {
        ChangeModel::Gaussian(m)
    }
}

impl From<ExponentialModel> for ChangeModel {
    fn from(m: ExponentialModel) -> Self {
        ChangeModel::Exponential(m)
    }
}

/// Anything that can feed LLR increments to a detector.
pub trait LlrSource: Sync {
    fn sample_llr<R: Rng + ?Sized>(&self, hyp: Hypothesis, rng: &mut R) -> f64;

    /// `E_p[Y]` when known in closed form.
    fn expected_llr(&self, _hyp: Hypothesis) -> Option<f64> {
        None
    }
}

impl ChangeModel {
    pub fn gaussian(mu: f64, sigma2: f64) -> Result<Self> {
        GaussianModel::new(mu, sigma2).map(Into::into)
    }

    pub fn exponential(lambda_pre: f64, lambda_post: f64) -> Result<Self> {
        ExponentialModel::new(lambda_pre, lambda_post).map(Into::into)
    }

    /// Draw one observation from `q` (Pre) or `q_gamma` (Post).
    pub fn sample_observation<R: Rng + ?Sized>(&self, hyp: Hypothesis, rng: &mut R) -> f64 {
        match self {
            ChangeModel::Gaussian(m) => {
                let z: f64 = rng.sample(StandardNormal);
                match hyp {
                    Hypothesis::Pre => z,
                    Hypothesis::Post => m.mu + (1.0 + m.sigma2).sqrt() * z,
                }
            }
            ChangeModel::Exponential(m) => {
                // Inverse CDF; 1 - U lies in (0, 1].
                let u: f64 = rng.random();
                -(1.0 - u).ln() / m.rate(hyp)
            }
        }
    }

    /// `log(q_gamma(x) / q(x))`.
    pub fn llr(&self, x: f64) -> Result<f64> {
        match self {
            ChangeModel::Gaussian(m) => Ok(m.llr(x)),
            ChangeModel::Exponential(m) => {
                if !(x >= 0.0) {
                    return Err(Error::domain(
                        "llr",
                        x,
                        "x >= 0 for exponential observations",
                    ));
                }
                Ok(m.llr(x))
            }
        }
    }

    /// Density of one observation under `hyp`.
    pub fn density(&self, hyp: Hypothesis, x: f64) -> f64 {
        match self {
            ChangeModel::Gaussian(m) => {
                let (mean, var) = match hyp {
                    Hypothesis::Pre => (0.0, 1.0),
                    Hypothesis::Post => (m.mu, 1.0 + m.sigma2),
                };
                let d = x - mean;
                (-0.5 * d * d / var).exp() / (2.0 * PI * var).sqrt()
            }
            ChangeModel::Exponential(m) => {
                if x < 0.0 {
                    0.0
                } else {
                    let r = m.rate(hyp);
                    r * (-r * x).exp()
                }
            }
        }
    }

    pub fn kl_divergences(&self) -> Divergences {
        match self {
            ChangeModel::Gaussian(m) => {
                let s2 = m.sigma2;
                let mu2 = m.mu * m.mu;
                Divergences {
                    // mu^2/2 + (s2 - log(1 + s2))/2
                    post_pre: 0.5 * mu2 + 0.5 * excess_over_log1p(s2),
                    // mu^2/(2(1+s2)) + (log(1+s2) - s2/(1+s2))/2
                    pre_post: mu2 / (2.0 * (1.0 + s2)) + 0.5 * log_minus_reciprocal_gap(s2),
                }
            }
            ChangeModel::Exponential(m) => {
                let r = m.relative_shift();
                Divergences {
                    // log(lambda_gamma/lambda) + (lambda - lambda_gamma)/lambda_gamma
                    post_pre: log_minus_reciprocal_gap(r),
                    // log(lambda/lambda_gamma) + (lambda_gamma - lambda)/lambda
                    pre_post: excess_over_log1p(r),
                }
            }
        }
    }

    /// `E_p[Y]`: `+D(q_gamma||q)` after the change, `-D(q||q_gamma)` before.
    pub fn llr_mean(&self, hyp: Hypothesis) -> f64 {
        let d = self.kl_divergences();
        match hyp {
            Hypothesis::Pre => -d.pre_post,
            Hypothesis::Post => d.post_pre,
        }
    }

    /// Density of the LLR `Y` at `y` when the observation follows `hyp`.
    pub fn llr_density(&self, hyp: Hypothesis, y: f64) -> f64 {
        match self {
            ChangeModel::Gaussian(m) => match m.llr_constants() {
                Some(c) => {
                    if !(y > c.support_edge) {
                        return 0.0;
                    }
                    let chi = chi(m, hyp);
                    let root = (c.nu * (y - c.support_edge)).sqrt();
                    let rho1 = (-(c.tau * chi + root).powi(2) / (2.0 * chi)).exp();
                    let rho2 = (-(c.tau * chi - root).powi(2) / (2.0 * chi)).exp();
                    c.nu * (rho1 + rho2) / (2.0 * root * (2.0 * PI * chi).sqrt())
                }
                None => {
                    let mu = m.mu;
                    let z = y / mu - mu * xi(hyp) / 2.0;
                    (-0.5 * z * z).exp() / (mu.abs() * (2.0 * PI).sqrt())
                }
            },
            ChangeModel::Exponential(m) => {
                let rate = m.rate(hyp);
                let a = m.llr_offset();
                let slope = (m.lambda_post - m.lambda_pre).abs();
                let inside = if m.lambda_post > m.lambda_pre {
                    y < a
                } else {
                    y > a
                };
                if !inside {
                    return 0.0;
                }
                rate / slope * (-rate * (a - y).abs() / slope).exp()
            }
        }
    }
}

impl LlrSource for ChangeModel {
    fn sample_llr<R: Rng + ?Sized>(&self, hyp: Hypothesis, rng: &mut R) -> f64 {
        let x = self.sample_observation(hyp, rng);
        match self {
            ChangeModel::Gaussian(m) => m.llr(x),
            ChangeModel::Exponential(m) => m.llr(x),
        }
    }

    fn expected_llr(&self, hyp: Hypothesis) -> Option<f64> {
        Some(self.llr_mean(hyp))
    }
}

/// A `gamma`-indexed family of post-change laws that collapses onto the
/// pre-change law as `gamma -> inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum AdversarySchedule {
    /// `mu(gamma) = c * gamma^-delta`, `sigma2 = 0`.
    GaussianMean { c: f64, delta: f64 },
    /// `sigma2(gamma) = c * gamma^-delta`, `mu = 0`.
    GaussianVariance { c: f64, delta: f64 },
    /// `lambda_gamma = lambda * (1 + sign * c * gamma^-delta)`.
    ExponentialRate { c: f64, delta: f64, sign: i8 },
}

/// Parameters of the pre-change law that the schedule does not fix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseParams {
    /// Pre-change exponential rate; ignored by the Gaussian families.
    #[serde(default = "BaseParams::default_lambda")]
    pub lambda: f64,
}

impl BaseParams {
    fn default_lambda() -> f64 {
        1.0
    }
}

impl Default for BaseParams {
    fn default() -> Self {
        Self { lambda: 1.0 }
    }
}

impl AdversarySchedule {
    pub fn c(&self) -> f64 {
        match *self {
            AdversarySchedule::GaussianMean { c, .. }
            | AdversarySchedule::GaussianVariance { c, .. }
            | AdversarySchedule::ExponentialRate { c, .. } => c,
        }
    }

    pub fn delta(&self) -> f64 {
        match *self {
            AdversarySchedule::GaussianMean { delta, .. }
            | AdversarySchedule::GaussianVariance { delta, .. }
            | AdversarySchedule::ExponentialRate { delta, .. } => delta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (c, delta) = (self.c(), self.delta());
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "schedule c must be > 0, got {c}"
            )));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "schedule delta must be > 0, got {delta}"
            )));
        }
        if let AdversarySchedule::ExponentialRate { sign, .. } = self {
            if *sign != 1 && *sign != -1 {
                return Err(Error::InvalidParameter(format!(
                    "exponential schedule sign must be +1 or -1, got {sign}"
                )));
            }
        }
        Ok(())
    }

    /// The model at false-alarm budget `gamma`.
    pub fn instantiate(&self, gamma: f64, base: &BaseParams) -> Result<ChangeModel> {
        self.validate()?;
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::domain("instantiate", gamma, "gamma > 0"));
        }
        let shift = self.c() * gamma.powf(-self.delta());
        match *self {
            AdversarySchedule::GaussianMean { .. } => ChangeModel::gaussian(shift, 0.0),
            AdversarySchedule::GaussianVariance { .. } => ChangeModel::gaussian(0.0, shift),
            AdversarySchedule::ExponentialRate { sign, .. } => {
                let factor = 1.0 + sign as f64 * shift;
                if factor <= 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "c * gamma^-delta = {shift} >= 1 gives a non-positive post-change rate"
                    )));
                }
                ChangeModel::exponential(base.lambda, base.lambda * factor)
            }
        }
    }
}
