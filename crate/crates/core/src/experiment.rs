//! JSON experiment specs and the three studies behind the `covert-qcd` binary.
//!
//! Each study computes rows and checks in memory ([`predict_rows`],
//! [`validate_rows`], [`overshoot_rows`]) and the `cmd_*` wrappers write them
//! as CSV under the spec's output directory.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::asymptotics::{predict, AsymptoticPrediction};
use crate::calibration::{calibrate_threshold, DEFAULT_TOL_REL};
use crate::detectors::{Boundary, SprtConfig};
use crate::error::{Error, Result};
use crate::models::{AdversarySchedule, BaseParams, ChangeModel, Hypothesis};
use crate::montecarlo::{estimate_add, estimate_at2fa, simulate_sprt, McConfig, McEstimate};
use crate::overshoot::{overshoot_report, OvershootReport};

/// Exit status of a study.
pub const EXIT_PASS: i32 = 0;
pub const EXIT_TOLERANCE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    pub schedule: AdversarySchedule,
    #[serde(default)]
    pub base: BaseParams,
    pub gammas: Vec<f64>,
    pub mc: McSpec,
    pub outputs: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSpec {
    pub replications: u64,
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    /// Fixed step cap; when absent the cap is `cap_factor * gamma`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<u64>,
    #[serde(default = "default_cap_factor")]
    pub cap_factor: f64,
    #[serde(default)]
    pub progress: bool,
}

fn default_workers() -> usize {
    1
}

fn default_cap_factor() -> f64 {
    100.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdSource {
    /// `h = h_star_asymptotic(gamma, D)`.
    #[default]
    Asymptotic,
    /// `h` from Monte Carlo calibration of the AT2FA.
    Calibrated,
}

impl ThresholdSource {
    pub fn as_str(self) -> &'static str {
        match self {
            ThresholdSource::Asymptotic => "asymptotic",
            ThresholdSource::Calibrated => "calibrated",
        }
    }
}

/// Pass/fail criteria. Bounds marked "largest gamma" are checked on the last
/// entry of `gammas` only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default)]
    pub threshold: ThresholdSource,
    #[serde(default = "default_tol_rel")]
    pub calibration_tol_rel: f64,
    /// `|AT2FA / gamma - 1|` at the largest gamma.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at2fa_rel: Option<f64>,
    /// `|AT2FA / gamma - 1|` must decrease along `gammas`.
    #[serde(default)]
    pub at2fa_gap_decreasing: bool,
    /// `|ADD / n(gamma) - 1|` at the largest gamma.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub add_rel: Option<f64>,
    /// Closed-form overshoot magnitude at the largest gamma.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overshoot_max: Option<f64>,
    /// Closed-form overshoot magnitudes must decrease along `gammas`.
    #[serde(default)]
    pub overshoot_decreasing: bool,
    /// Slack, in standard errors, for MC overshoots against closed forms.
    #[serde(default = "default_se_multiplier")]
    pub se_multiplier: f64,
}

fn default_tol_rel() -> f64 {
    DEFAULT_TOL_REL
}

fn default_se_multiplier() -> f64 {
    3.0
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            threshold: ThresholdSource::default(),
            calibration_tol_rel: DEFAULT_TOL_REL,
            at2fa_rel: None,
            at2fa_gap_decreasing: false,
            add_rel: None,
            overshoot_max: None,
            overshoot_decreasing: false,
            se_multiplier: 3.0,
        }
    }
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' || c == '-')
        {
            return bad(format!("name {:?} must match [a-z0-9_-]+", self.name));
        }
        self.schedule.validate()?;
        if !(self.base.lambda > 0.0 && self.base.lambda.is_finite()) {
            return bad(format!("base.lambda must be > 0, got {}", self.base.lambda));
        }
        if self.gammas.is_empty() {
            return bad("gammas must be non-empty".into());
        }
        if self.gammas.iter().any(|g| !(*g > 1.0 && g.is_finite())) {
            return bad("every gamma must be finite and > 1".into());
        }
        if self.gammas.windows(2).any(|w| w[1] <= w[0]) {
            return bad("gammas must be strictly increasing".into());
        }
        if let Some(rho) = self.rho {
            if !(rho > 0.0 && rho < 1.0) {
                return bad(format!("rho must lie in (0, 1), got {rho}"));
            }
        }
        if self.mc.replications < 2 {
            return bad("mc.replications must be >= 2".into());
        }
        if self.mc.workers == 0 {
            return bad("mc.workers must be >= 1".into());
        }
        if self.mc.cap == Some(0) || !(self.mc.cap_factor > 0.0) {
            return bad("mc.cap and mc.cap_factor must be positive".into());
        }
        let t = &self.tolerances;
        if !(t.calibration_tol_rel > 0.0 && t.calibration_tol_rel < 0.5) {
            return bad("tolerances.calibration_tol_rel must lie in (0, 0.5)".into());
        }
        if !(t.se_multiplier >= 0.0) {
            return bad("tolerances.se_multiplier must be >= 0".into());
        }
        Ok(())
    }

    /// Monte Carlo settings at one gamma.
    pub fn mc_config(&self, gamma: f64) -> McConfig {
        let cap = self
            .mc
            .cap
            .unwrap_or_else(|| (self.mc.cap_factor * gamma).ceil().max(1.0) as u64);
        McConfig {
            replications: self.mc.replications,
            seed: self.mc.seed,
            cap,
            workers: self.mc.workers,
            progress: self.mc.progress,
        }
    }

    pub fn model(&self, gamma: f64) -> Result<ChangeModel> {
        self.schedule.instantiate(gamma, &self.base)
    }

    fn largest_gamma(&self) -> f64 {
        *self.gammas.last().expect("validated non-empty")
    }
}

/// Command-line overrides applied on top of a loaded spec.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, spec: &mut ExperimentSpec) -> Result<()> {
        if let Some(seed) = self.seed {
            spec.mc.seed = seed;
        }
        if let Some(workers) = self.workers {
            spec.mc.workers = workers;
        }
        if let Some(out) = &self.out {
            spec.outputs = out.clone();
        }
        spec.validate()
    }
}

/// One named pass/fail criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            passed: value <= limit,
        }
    }

    fn flag(name: impl Into<String>, passed: bool) -> Self {
        Self {
            name: name.into(),
            value: if passed { 1.0 } else { 0.0 },
            limit: 1.0,
            passed,
        }
    }
}

fn strictly_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0])
}

/// Format a real with 17 significant digits; absent values are empty.
pub fn fmt_real(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v:.16e}")
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_real).unwrap_or_default()
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

pub const CHECKS_HEADER: [&str; 4] = ["check", "value", "limit", "pass"];

fn write_checks(path: &Path, checks: &[Check]) -> Result<()> {
    let rows: Vec<_> = checks
        .iter()
        .map(|c| {
            vec![
                c.name.clone(),
                fmt_real(c.value),
                fmt_real(c.limit),
                c.passed.to_string(),
            ]
        })
        .collect();
    write_csv(path, &CHECKS_HEADER, &rows)
}

/// Files written by a study and whether every check passed.
#[derive(Debug, Clone)]
pub struct StudyOutcome {
    pub files: Vec<PathBuf>,
    pub checks: Vec<Check>,
}

impl StudyOutcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            EXIT_PASS
        } else {
            EXIT_TOLERANCE
        }
    }
}

// ---------------------------------------------------------------- predict

pub const PREDICT_HEADER: [&str; 10] = [
    "gamma",
    "d_pre_post",
    "d_post_pre",
    "regime",
    "critical_y",
    "h_star",
    "n_gamma",
    "n_gamma_over_gamma",
    "lorden_baseline",
    "damage",
];

pub fn predict_rows(spec: &ExperimentSpec) -> Result<Vec<AsymptoticPrediction>> {
    spec.gammas
        .iter()
        .map(|&g| predict(&spec.schedule, &spec.base, g, spec.rho))
        .collect()
}

/// Asymptotic predictions only; always passes.
pub fn cmd_predict(spec: &ExperimentSpec) -> Result<StudyOutcome> {
    let rows: Vec<Vec<String>> = predict_rows(spec)?
        .iter()
        .map(|p| {
            vec![
                fmt_real(p.gamma),
                fmt_real(p.d_pre_post),
                fmt_real(p.d_post_pre),
                p.regime.label().to_string(),
                fmt_opt(p.regime.critical_y()),
                fmt_real(p.h_star),
                fmt_real(p.n_gamma),
                fmt_real(p.n_gamma / p.gamma),
                fmt_real(p.lorden_baseline),
                fmt_opt(p.damage),
            ]
        })
        .collect();
    let path = spec.outputs.join("predict.csv");
    write_csv(&path, &PREDICT_HEADER, &rows)?;
    Ok(StudyOutcome {
        files: vec![path],
        checks: Vec::new(),
    })
}

// ---------------------------------------------------------------- validate

#[derive(Debug, Clone)]
pub struct ValidateRow {
    pub gamma: f64,
    pub h_asymptotic: f64,
    pub h: f64,
    pub at2fa: McEstimate,
    pub add: McEstimate,
    pub prediction: AsymptoticPrediction,
    pub overshoot_pre: OvershootReport,
    pub overshoot_post: OvershootReport,
    pub wall_clock_s: f64,
}

impl ValidateRow {
    pub fn at2fa_gap_rel(&self) -> f64 {
        (self.at2fa.mean / self.gamma - 1.0).abs()
    }

    pub fn add_gap_rel(&self) -> f64 {
        (self.add.mean / self.prediction.n_gamma - 1.0).abs()
    }
}

fn threshold(
    spec: &ExperimentSpec,
    model: &ChangeModel,
    gamma: f64,
    h_asym: f64,
) -> Result<(f64, McEstimate)> {
    let cfg = spec.mc_config(gamma);
    match spec.tolerances.threshold {
        ThresholdSource::Asymptotic => Ok((h_asym, estimate_at2fa(model, h_asym, &cfg)?)),
        ThresholdSource::Calibrated => {
            let cal = calibrate_threshold(model, gamma, &cfg, spec.tolerances.calibration_tol_rel)?;
            Ok((cal.h, cal.achieved_at2fa))
        }
    }
}

pub fn validate_rows(spec: &ExperimentSpec) -> Result<(Vec<ValidateRow>, Vec<Check>)> {
    let mut rows = Vec::with_capacity(spec.gammas.len());
    for &gamma in &spec.gammas {
        let start = Instant::now();
        let model = spec.model(gamma)?;
        let prediction = predict(&spec.schedule, &spec.base, gamma, spec.rho)?;
        let (h, at2fa) = threshold(spec, &model, gamma, prediction.h_star)?;
        let add = estimate_add(&model, h, &spec.mc_config(gamma))?;
        log::info!(
            "gamma = {gamma}: h = {h:.6}, AT2FA = {:.2} +/- {:.2}, ADD = {:.2} +/- {:.2}",
            at2fa.mean,
            at2fa.std_error,
            add.mean,
            add.std_error
        );
        rows.push(ValidateRow {
            gamma,
            h_asymptotic: prediction.h_star,
            h,
            at2fa,
            add,
            prediction,
            overshoot_pre: overshoot_report(&model, Hypothesis::Pre),
            overshoot_post: overshoot_report(&model, Hypothesis::Post),
            wall_clock_s: start.elapsed().as_secs_f64(),
        });
    }
    let t = &spec.tolerances;
    let last = rows.last().expect("non-empty gammas");
    let mut checks = Vec::new();
    if let Some(tol) = t.at2fa_rel {
        checks.push(Check::at_most(
            "at2fa_rel_at_largest_gamma",
            last.at2fa_gap_rel(),
            tol,
        ));
    }
    if t.at2fa_gap_decreasing {
        let gaps: Vec<f64> = rows.iter().map(|r| r.at2fa_gap_rel()).collect();
        checks.push(Check::flag(
            "at2fa_gap_decreasing",
            strictly_decreasing(&gaps),
        ));
    }
    if let Some(tol) = t.add_rel {
        checks.push(Check::at_most(
            "add_rel_at_largest_gamma",
            last.add_gap_rel(),
            tol,
        ));
    }
    if let Some(tol) = t.overshoot_max {
        let m = last
            .overshoot_pre
            .magnitude()
            .max(last.overshoot_post.magnitude());
        checks.push(Check::at_most(
            "overshoot_magnitude_at_largest_gamma",
            m,
            tol,
        ));
    }
    debug_assert_eq!(spec.largest_gamma(), last.gamma);
    Ok((rows, checks))
}

pub const VALIDATE_HEADER: [&str; 18] = [
    "gamma",
    "h_asymptotic",
    "h",
    "threshold_source",
    "at2fa_mean",
    "at2fa_se",
    "at2fa_gap_rel",
    "add_mean",
    "add_se",
    "n_gamma",
    "add_gap_rel",
    "n_truncated",
    "sup_upper_pre",
    "inf_lower_pre",
    "sup_upper_post",
    "inf_lower_post",
    "regime",
    "wall_clock_s",
];

pub fn cmd_validate(spec: &ExperimentSpec) -> Result<StudyOutcome> {
    let (rows, checks) = validate_rows(spec)?;
    let source = spec.tolerances.threshold.as_str();
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                fmt_real(r.gamma),
                fmt_real(r.h_asymptotic),
                fmt_real(r.h),
                source.to_string(),
                fmt_real(r.at2fa.mean),
                fmt_real(r.at2fa.std_error),
                fmt_real(r.at2fa_gap_rel()),
                fmt_real(r.add.mean),
                fmt_real(r.add.std_error),
                fmt_real(r.prediction.n_gamma),
                fmt_real(r.add_gap_rel()),
                (r.at2fa.n_truncated + r.add.n_truncated).to_string(),
                fmt_real(r.overshoot_pre.sup_upper),
                fmt_real(r.overshoot_pre.inf_lower),
                fmt_real(r.overshoot_post.sup_upper),
                fmt_real(r.overshoot_post.inf_lower),
                r.prediction.regime.label().to_string(),
                format!("{:.3}", r.wall_clock_s),
            ]
        })
        .collect();
    let path = spec.outputs.join("validate.csv");
    write_csv(&path, &VALIDATE_HEADER, &table)?;
    let checks_path = spec.outputs.join("validate_checks.csv");
    write_checks(&checks_path, &checks)?;
    Ok(StudyOutcome {
        files: vec![path, checks_path],
        checks,
    })
}

// ---------------------------------------------------------------- overshoot

#[derive(Debug, Clone)]
pub struct OvershootRow {
    pub gamma: f64,
    pub hyp: Hypothesis,
    /// SPRT boundaries are `(-b, b)`.
    pub b: f64,
    pub report: OvershootReport,
    pub mc_upper: McEstimate,
    pub mc_lower: McEstimate,
    pub passed: bool,
    pub wall_clock_s: f64,
}

pub fn overshoot_rows(spec: &ExperimentSpec) -> Result<(Vec<OvershootRow>, Vec<Check>)> {
    let k = spec.tolerances.se_multiplier;
    let mut rows = Vec::new();
    for &gamma in &spec.gammas {
        let model = spec.model(gamma)?;
        let prediction = predict(&spec.schedule, &spec.base, gamma, None)?;
        let (b, _) = threshold(spec, &model, gamma, prediction.h_star)?;
        let sprt = SprtConfig::symmetric(b)?;
        for hyp in [Hypothesis::Pre, Hypothesis::Post] {
            let start = Instant::now();
            let report = overshoot_report(&model, hyp);
            let batch = simulate_sprt(&model, hyp, sprt, &spec.mc_config(gamma))?;
            let upper = batch.overshoot(Boundary::Upper);
            let lower = batch.overshoot(Boundary::Lower);
            // Too few hits to estimate anything: no evidence against the bound.
            let upper_ok = upper.insufficient
                || upper.estimate.mean <= report.sup_upper + k * upper.estimate.std_error;
            let lower_ok = lower.insufficient
                || lower.estimate.mean >= report.inf_lower - k * lower.estimate.std_error;
            rows.push(OvershootRow {
                gamma,
                hyp,
                b,
                report,
                mc_upper: upper.estimate,
                mc_lower: lower.estimate,
                passed: upper_ok && lower_ok,
                wall_clock_s: start.elapsed().as_secs_f64(),
            });
        }
    }
    let t = &spec.tolerances;
    let mut checks = vec![Check::flag(
        "mc_overshoots_within_closed_form_bounds",
        rows.iter().all(|r| r.passed),
    )];
    for hyp in [Hypothesis::Pre, Hypothesis::Post] {
        let mags: Vec<f64> = rows
            .iter()
            .filter(|r| r.hyp == hyp)
            .map(|r| r.report.magnitude())
            .collect();
        if t.overshoot_decreasing {
            checks.push(Check::flag(
                format!("overshoot_decreasing_{}", hyp.as_str()),
                strictly_decreasing(&mags),
            ));
        }
        if let Some(tol) = t.overshoot_max {
            checks.push(Check::at_most(
                format!("overshoot_magnitude_at_largest_gamma_{}", hyp.as_str()),
                *mags.last().expect("non-empty gammas"),
                tol,
            ));
        }
    }
    Ok((rows, checks))
}

pub const OVERSHOOT_HEADER: [&str; 15] = [
    "gamma",
    "hyp",
    "b",
    "sup_upper",
    "inf_lower",
    "method",
    "mc_upper_mean",
    "mc_upper_se",
    "mc_upper_hits",
    "mc_lower_mean",
    "mc_lower_se",
    "mc_lower_hits",
    "n_truncated",
    "pass",
    "wall_clock_s",
];

pub fn cmd_overshoot(spec: &ExperimentSpec) -> Result<StudyOutcome> {
    let (rows, checks) = overshoot_rows(spec)?;
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                fmt_real(r.gamma),
                r.hyp.as_str().to_string(),
                fmt_real(r.b),
                fmt_real(r.report.sup_upper),
                fmt_real(r.report.inf_lower),
                format!(
                    "{}/{}",
                    r.report.sup_method.as_str(),
                    r.report.inf_method.as_str()
                ),
                fmt_real(r.mc_upper.mean),
                fmt_real(r.mc_upper.std_error),
                r.mc_upper.n_effective.to_string(),
                fmt_real(r.mc_lower.mean),
                fmt_real(r.mc_lower.std_error),
                r.mc_lower.n_effective.to_string(),
                r.mc_upper.n_truncated.to_string(),
                r.passed.to_string(),
                format!("{:.3}", r.wall_clock_s),
            ]
        })
        .collect();
    let path = spec.outputs.join("overshoot.csv");
    write_csv(&path, &OVERSHOOT_HEADER, &table)?;
    let checks_path = spec.outputs.join("overshoot_checks.csv");
    write_checks(&checks_path, &checks)?;
    Ok(StudyOutcome {
        files: vec![path, checks_path],
        checks,
    })
}
