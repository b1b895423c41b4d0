//! Calibrate CuSum thresholds by simulation and compare with the asymptotic
//! threshold.
//!
//! ```text
//! cargo run --release --example threshold_calibration -- [replications] [workers]
//! ```

use covert_qcd::calibration::{calibration_gap_report, DEFAULT_TOL_REL};
use covert_qcd::models::{AdversarySchedule, BaseParams};
use covert_qcd::montecarlo::McConfig;

fn main() -> covert_qcd::Result<()> {
    let mut args = std::env::args().skip(1);
    let reps = args.next().and_then(|s| s.parse().ok()).unwrap_or(2000);
    let workers = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let schedule = AdversarySchedule::GaussianMean { c: 1.0, delta: 0.5 };
    let cfg = McConfig::new(reps, 11, 1_000_000, workers)?;
    let rows = calibration_gap_report(
        &schedule,
        &BaseParams::default(),
        &[1e2, 1e3, 1e4],
        &cfg,
        DEFAULT_TOL_REL,
    )?;
    println!(
        "{:>8} {:>12} {:>12} {:>10} {:>22}",
        "gamma", "h asymptotic", "h calibrated", "gap", "AT2FA"
    );
    for r in rows {
        println!(
            "{:>8.0e} {:>12.6} {:>12.6} {:>10.4} {:>12.1} +/- {:<6.1}",
            r.gamma, r.h_asymptotic, r.h_calibrated, r.gap_rel, r.at2fa.mean, r.at2fa.std_error
        );
    }
    Ok(())
}
