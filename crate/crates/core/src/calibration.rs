//! Monte Carlo threshold calibration: find `h` with `E_pre[tau_h] = gamma`.
//!
//! Every evaluation reuses the same replication streams, so the estimated
//! AT2FA is a nondecreasing step function of `h` and plain bisection applies.

use crate::asymptotics::h_star_asymptotic;
use crate::error::{Error, Result};
use crate::models::{AdversarySchedule, BaseParams, ChangeModel};
use crate::montecarlo::{estimate_at2fa, McConfig, McEstimate};

pub const DEFAULT_TOL_REL: f64 = 0.05;
const MAX_STEPS: u32 = 60;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub h: f64,
    pub achieved_at2fa: McEstimate,
    /// AT2FA evaluations spent, bracketing included.
    pub evaluations: u32,
}

fn accepted(est: &McEstimate, gamma: f64, tol_rel: f64) -> bool {
    (est.mean - gamma).abs() <= (tol_rel * gamma).max(3.0 * est.std_error)
}

/// Solve `AT2FA(h) = gamma` to within `max(tol_rel * gamma, 3 SE)`.
pub fn calibrate_threshold(
    model: &ChangeModel,
    gamma: f64,
    cfg: &McConfig,
    tol_rel: f64,
) -> Result<Calibration> {
    if !(gamma > 1.0 && gamma.is_finite()) {
        return Err(Error::domain("calibrate_threshold", gamma, "gamma > 1"));
    }
    if !(tol_rel > 0.0 && tol_rel < 0.5) {
        return Err(Error::domain(
            "calibrate_threshold",
            tol_rel,
            "0 < tol_rel < 0.5",
        ));
    }
    cfg.validate()?;
    let h0 = h_star_asymptotic(gamma, model.kl_divergences().pre_post)?;
    let mut evaluations = 0u32;
    let mut eval = |h: f64| -> Result<McEstimate> {
        evaluations += 1;
        let est = estimate_at2fa(model, h, cfg)?;
        log::debug!(
            "h = {h:.6}: AT2FA = {:.3} +/- {:.3}",
            est.mean,
            est.std_error
        );
        Ok(est)
    };

    let (mut lo, mut hi) = (0.5 * h0, 2.0 * h0);
    let mut lo_est = eval(lo)?;
    if accepted(&lo_est, gamma, tol_rel) {
        return Ok(Calibration {
            h: lo,
            achieved_at2fa: lo_est,
            evaluations: 1,
        });
    }
    let mut expansions = 0;
    while lo_est.mean > gamma {
        if expansions == MAX_STEPS {
            return Err(Error::BracketFailure { gamma, expansions });
        }
        expansions += 1;
        hi = lo;
        lo *= 0.5;
        lo_est = eval(lo)?;
        if accepted(&lo_est, gamma, tol_rel) {
            return Ok(Calibration {
                h: lo,
                achieved_at2fa: lo_est,
                evaluations,
            });
        }
    }
    let mut hi_est = eval(hi)?;
    if accepted(&hi_est, gamma, tol_rel) {
        return Ok(Calibration {
            h: hi,
            achieved_at2fa: hi_est,
            evaluations,
        });
    }
    while hi_est.mean < gamma {
        if expansions == MAX_STEPS {
            return Err(Error::BracketFailure { gamma, expansions });
        }
        expansions += 1;
        lo = hi;
        hi *= 2.0;
        hi_est = eval(hi)?;
        if accepted(&hi_est, gamma, tol_rel) {
            return Ok(Calibration {
                h: hi,
                achieved_at2fa: hi_est,
                evaluations,
            });
        }
    }

    let mut best = (hi, hi_est);
    for _ in 0..MAX_STEPS {
        let mid = 0.5 * (lo + hi);
        if (hi - lo) <= 1e-12 * hi {
            break;
        }
        let est = eval(mid)?;
        if accepted(&est, gamma, tol_rel) {
            return Ok(Calibration {
                h: mid,
                achieved_at2fa: est,
                evaluations,
            });
        }
        if (est.mean - gamma).abs() < (best.1.mean - gamma).abs() {
            best = (mid, est);
        }
        if est.mean < gamma {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NoiseFloor {
        gamma,
        h: best.0,
        achieved: best.1.mean,
        std_error: best.1.std_error,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapRow {
    pub gamma: f64,
    pub h_asymptotic: f64,
    pub h_calibrated: f64,
    /// `|h_asymptotic - h_calibrated| / h_calibrated`.
    pub gap_rel: f64,
    pub at2fa: McEstimate,
}

/// Asymptotic against calibrated thresholds along a schedule.
pub fn calibration_gap_report(
    schedule: &AdversarySchedule,
    base: &BaseParams,
    gammas: &[f64],
    cfg: &McConfig,
    tol_rel: f64,
) -> Result<Vec<GapRow>> {
    if gammas.is_empty() {
        return Err(Error::InvalidParameter("gammas must be non-empty".into()));
    }
    gammas
        .iter()
        .map(|&gamma| {
            let model = schedule.instantiate(gamma, base)?;
            let h_asymptotic = h_star_asymptotic(gamma, model.kl_divergences().pre_post)?;
            let cal = calibrate_threshold(&model, gamma, cfg, tol_rel)?;
            Ok(GapRow {
                gamma,
                h_asymptotic,
                h_calibrated: cal.h,
                gap_rel: (h_asymptotic - cal.h).abs() / cal.h,
                at2fa: cal.achieved_at2fa,
            })
        })
        .collect()
}
