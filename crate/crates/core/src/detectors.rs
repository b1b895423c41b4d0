//! CuSum and two-boundary SPRT as streaming state machines.
//!
//! Stopping times count observations consumed, so a CuSum that alarms on its
//! first observation has `tau = 1`. With that convention the expected CuSum
//! run length equals the expected SPRT cycle length `T_{0,h}` divided by the
//! probability that a cycle ends at the upper boundary.

use std::io::Write;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{Hypothesis, LlrSource};

/// Page's CuSum statistic `W_k = max(0, W_{k-1} + Y_k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CusumState {
    statistic: f64,
    steps: u64,
    threshold: f64,
}

impl CusumState {
    pub fn new(threshold: f64) -> Result<Self> {
        if !(threshold > 0.0) || threshold.is_nan() {
            return Err(Error::domain("cusum", threshold, "threshold h > 0"));
        }
        Ok(Self {
            statistic: 0.0,
            steps: 0,
            threshold,
        })
    }

    pub fn statistic(&self) -> f64 {
        self.statistic
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Feed one LLR; returns `true` once the statistic reaches the threshold.
    pub fn step(&mut self, y: f64) -> bool {
        self.statistic = (self.statistic + y).max(0.0);
        self.steps += 1;
        self.statistic >= self.threshold
    }
}

/// Result of a CuSum run that stopped before the cap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CusumAlarm {
    /// Observations consumed up to and including the alarm.
    pub tau: u64,
    /// Statistic minus threshold at the alarm.
    pub overshoot: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CusumOutcome {
    Alarm(CusumAlarm),
    Truncated,
}

impl CusumOutcome {
    pub fn alarm(self) -> Option<CusumAlarm> {
        match self {
            CusumOutcome::Alarm(a) => Some(a),
            CusumOutcome::Truncated => None,
        }
    }
}

fn check_cap(cap: u64) -> Result<()> {
    if cap == 0 {
        return Err(Error::InvalidParameter("cap must be >= 1".into()));
    }
    Ok(())
}

/// Run CuSum on fresh LLRs drawn under `hyp` until alarm or `cap` steps.
pub fn run_cusum<S, R>(
    source: &S,
    hyp: Hypothesis,
    h: f64,
    rng: &mut R,
    cap: u64,
) -> Result<CusumOutcome>
where
    S: LlrSource + ?Sized,
    R: Rng + ?Sized,
{
    run_cusum_observed(source, hyp, h, rng, cap, |_| {})
}

/// As [`run_cusum`], reporting every step to `observe`.
pub fn run_cusum_observed<S, R, F>(
    source: &S,
    hyp: Hypothesis,
    h: f64,
    rng: &mut R,
    cap: u64,
    mut observe: F,
) -> Result<CusumOutcome>
where
    S: LlrSource + ?Sized,
    R: Rng + ?Sized,
    F: FnMut(TracePoint),
{
    let mut state = CusumState::new(h)?;
    check_cap(cap)?;
    while state.steps < cap {
        let y = source.sample_llr(hyp, rng);
        let alarmed = state.step(y);
        observe(TracePoint {
            step: state.steps,
            y,
            statistic: state.statistic,
        });
        if alarmed {
            return Ok(CusumOutcome::Alarm(CusumAlarm {
                tau: state.steps,
                overshoot: state.statistic - h,
            }));
        }
    }
    Ok(CusumOutcome::Truncated)
}

/// Boundaries `a <= 0 < b` of the SPRT.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SprtConfig {
    a: f64,
    b: f64,
}

impl SprtConfig {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a <= 0.0 && b > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "SPRT boundaries need -inf < a <= 0 < b < inf, got a={a}, b={b}"
            )));
        }
        Ok(Self { a, b })
    }

    /// Symmetric boundaries `(-b, b)`.
    pub fn symmetric(b: f64) -> Result<Self> {
        Self::new(-b, b)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Boundary {
    /// `S_T >= b`.
    Upper,
    /// `S_T <= a`.
    Lower,
}

/// One completed SPRT run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SprtOutcome {
    pub stopping_time: u64,
    pub terminal_sum: f64,
    pub hit: Boundary,
    /// `S_T - b` on an upper exit, `S_T - a` on a lower one.
    pub overshoot: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SprtRun {
    Stopped(SprtOutcome),
    Truncated,
}

impl SprtRun {
    pub fn outcome(self) -> Option<SprtOutcome> {
        match self {
            SprtRun::Stopped(o) => Some(o),
            SprtRun::Truncated => None,
        }
    }
}

/// Running SPRT sum `S_k`; exits as soon as `S_k` leaves the open interval `(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SprtState {
    config: SprtConfig,
    sum: f64,
    steps: u64,
}

impl SprtState {
    pub fn new(config: SprtConfig) -> Self {
        Self {
            config,
            sum: 0.0,
            steps: 0,
        }
    }

    pub fn sum(&self) -> f64 {
        self.sum
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn step(&mut self, y: f64) -> Option<SprtOutcome> {
        self.sum += y;
        self.steps += 1;
        let SprtConfig { a, b } = self.config;
        // Ties on either boundary count as exits.
        let hit = if self.sum >= b {
            Boundary::Upper
        } else if self.sum <= a {
            Boundary::Lower
        } else {
            return None;
        };
        let overshoot = match hit {
            Boundary::Upper => self.sum - b,
            Boundary::Lower => self.sum - a,
        };
        Some(SprtOutcome {
            stopping_time: self.steps,
            terminal_sum: self.sum,
            hit,
            overshoot,
        })
    }
}

pub fn run_sprt<S, R>(
    source: &S,
    hyp: Hypothesis,
    config: SprtConfig,
    rng: &mut R,
    cap: u64,
) -> Result<SprtRun>
where
    S: LlrSource + ?Sized,
    R: Rng + ?Sized,
{
    run_sprt_observed(source, hyp, config, rng, cap, |_| {})
}

pub fn run_sprt_observed<S, R, F>(
    source: &S,
    hyp: Hypothesis,
    config: SprtConfig,
    rng: &mut R,
    cap: u64,
    mut observe: F,
) -> Result<SprtRun>
where
    S: LlrSource + ?Sized,
    R: Rng + ?Sized,
    F: FnMut(TracePoint),
{
    check_cap(cap)?;
    let mut state = SprtState::new(config);
    while state.steps < cap {
        let y = source.sample_llr(hyp, rng);
        let exit = state.step(y);
        observe(TracePoint {
            step: state.steps,
            y,
            statistic: state.sum,
        });
        if let Some(outcome) = exit {
            return Ok(SprtRun::Stopped(outcome));
        }
    }
    Ok(SprtRun::Truncated)
}

/// One logged detector step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePoint {
    pub step: u64,
    pub y: f64,
    pub statistic: f64,
}

/// Write a trajectory as CSV with header `step,y,statistic`.
pub fn write_trajectory_csv<W: Write>(points: &[TracePoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["step", "y", "statistic"])?;
    for p in points {
        w.write_record([
            p.step.to_string(),
            format!("{:.16e}", p.y),
            format!("{:.16e}", p.statistic),
        ])?;
    }
    w.flush()?;
    Ok(())
}
