//! Simulated SPRT error rates, sample sizes and overshoots against Wald's
//! approximations.
//!
//! ```text
//! cargo run --release --example sprt_monte_carlo -- [replications] [workers]
//! ```

use covert_qcd::asymptotics::{sprt_error_asymptotes, sprt_expected_samples};
use covert_qcd::detectors::{Boundary, SprtConfig};
use covert_qcd::models::{ChangeModel, Hypothesis};
use covert_qcd::montecarlo::{simulate_sprt, McConfig};

fn main() -> covert_qcd::Result<()> {
    let mut args = std::env::args().skip(1);
    let reps = args.next().and_then(|s| s.parse().ok()).unwrap_or(20_000);
    let workers = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);

    let model = ChangeModel::exponential(1.0, 1.05)?;
    let (a, b) = (-2.0, 2.0);
    let config = SprtConfig::new(a, b)?;
    let cfg = McConfig::new(reps, 7, 10_000_000, workers)?;
    let d = model.kl_divergences();
    let (alpha, beta) = sprt_error_asymptotes(a, b)?;
    let (e_post, e_pre) = sprt_expected_samples(d.post_pre, d.pre_post, a, b)?;

    for (hyp, wrong, err, wald_t) in [
        (Hypothesis::Pre, Boundary::Upper, alpha, e_pre),
        (Hypothesis::Post, Boundary::Lower, beta, e_post),
    ] {
        let batch = simulate_sprt(&model, hyp, config, &cfg)?;
        let rate = batch.exit_rate(wrong);
        let t = batch.stopping_time();
        let up = batch.overshoot(Boundary::Upper).estimate;
        let lo = batch.overshoot(Boundary::Lower).estimate;
        let resid = batch.wald_residual(model.llr_mean(hyp));
        println!("under {}:", hyp.as_str());
        println!(
            "  error rate  {:.5} +/- {:.5}   limit {err:.5}",
            rate.mean, rate.std_error
        );
        println!(
            "  E[T]        {:.1} +/- {:.1}   Wald {wald_t:.1}",
            t.mean, t.std_error
        );
        println!("  overshoot   upper {:.5}  lower {:.5}", up.mean, lo.mean);
        println!(
            "  Wald residual {:.2e} +/- {:.2e}",
            resid.mean, resid.std_error
        );
    }
    Ok(())
}
