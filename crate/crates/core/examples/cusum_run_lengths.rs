//! CuSum false-alarm time and detection delay at the asymptotic threshold,
//! simulated against the closed-form run lengths.
//!
//! ```text
//! cargo run --release --example cusum_run_lengths -- [replications] [workers]
//! ```

use covert_qcd::asymptotics::{h_star_asymptotic, khan_expected_run_lengths};
use covert_qcd::models::{AdversarySchedule, BaseParams};
use covert_qcd::montecarlo::{estimate_add, estimate_at2fa, McConfig};

fn main() -> covert_qcd::Result<()> {
    let mut args = std::env::args().skip(1);
    let reps = args.next().and_then(|s| s.parse().ok()).unwrap_or(2000);
    let workers = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let schedule = AdversarySchedule::ExponentialRate {
        c: 1.0,
        delta: 0.5,
        sign: 1,
    };

    println!(
        "{:>8} {:>9} {:>20} {:>20} {:>10}",
        "gamma", "h*", "AT2FA (mc)", "ADD (mc)", "ADD (cf)"
    );
    for gamma in [1e2, 1e3, 1e4] {
        let model = schedule.instantiate(gamma, &BaseParams::default())?;
        let d = model.kl_divergences();
        let h = h_star_asymptotic(gamma, d.pre_post)?;
        let (add_cf, _) = khan_expected_run_lengths(d.post_pre, d.pre_post, h)?;
        let cfg = McConfig::new(reps, 3, (100.0 * gamma) as u64, workers)?;
        let at2fa = estimate_at2fa(&model, h, &cfg)?;
        let add = estimate_add(&model, h, &cfg)?;
        println!(
            "{gamma:>8.0e} {h:>9.5} {:>11.1} +/- {:<6.1} {:>11.1} +/- {:<6.1} {add_cf:>10.1}",
            at2fa.mean, at2fa.std_error, add.mean, add.std_error
        );
    }
    Ok(())
}
