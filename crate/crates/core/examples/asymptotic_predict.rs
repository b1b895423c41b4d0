//! Threshold, detection delay and total damage across the three regimes of a
//! Gaussian mean schedule `mu = gamma^-delta`.
//!
//! ```text
//! cargo run --example asymptotic_predict
//! ```

use covert_qcd::asymptotics::predict;
use covert_qcd::models::{AdversarySchedule, BaseParams};

fn main() -> covert_qcd::Result<()> {
    let base = BaseParams::default();
    let rho = 0.5;
    for delta in [0.25, 0.5, 1.0] {
        let schedule = AdversarySchedule::GaussianMean { c: 1.0, delta };
        println!("delta = {delta}");
        println!(
            "{:>10} {:>12} {:>10} {:>14} {:>14} {:>14} {:>12}",
            "gamma", "regime", "h*", "n(gamma)", "n/gamma", "Lorden", "d/sqrt(g)"
        );
        for gamma in [1e2, 1e3, 1e4, 1e5, 1e6] {
            let p = predict(&schedule, &base, gamma, Some(rho))?;
            println!(
                "{gamma:>10.0e} {:>12} {:>10.5} {:>14.2} {:>14.6} {:>14.2} {:>12.6}",
                p.regime.label(),
                p.h_star,
                p.n_gamma,
                p.n_gamma / gamma,
                p.lorden_baseline,
                p.damage.unwrap_or(f64::NAN) / gamma.powf(1.0 - rho),
            );
        }
        println!();
    }
    Ok(())
}
