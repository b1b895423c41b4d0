//! Overshoot bounds for Gaussian and exponential changes, with the exact
//! conditional excesses at a few levels for comparison.
//!
//! ```text
//! cargo run --example overshoot_report
//! ```

use covert_qcd::models::{ChangeModel, Hypothesis};
use covert_qcd::overshoot::{conditional_excess_lower, conditional_excess_upper, overshoot_report};

fn show(label: &str, model: &ChangeModel) {
    for hyp in [Hypothesis::Pre, Hypothesis::Post] {
        let r = overshoot_report(model, hyp);
        println!(
            "{label:<28} {:<5} sup {:>12.6e} {:<19} inf {:>13.6e} ({})",
            hyp.as_str(),
            r.sup_upper,
            format!("({})", r.sup_method.as_str()),
            r.inf_lower,
            r.inf_method.as_str()
        );
        let levels = [-0.5, -0.1, 0.0, 0.1, 0.5];
        let ups: Vec<String> = levels
            .iter()
            .map(|&y| {
                conditional_excess_upper(model, hyp, y).map_or("-".into(), |e| format!("{e:.4}"))
            })
            .collect();
        let lows: Vec<String> = levels
            .iter()
            .map(|&y| {
                conditional_excess_lower(model, hyp, y).map_or("-".into(), |e| format!("{e:.4}"))
            })
            .collect();
        println!("{:<34} E[Y-y|Y>=y] at y={levels:?}: {}", "", ups.join(" "));
        println!("{:<34} E[Y-y|Y<=y] at y={levels:?}: {}", "", lows.join(" "));
    }
}

fn main() -> covert_qcd::Result<()> {
    show("gaussian mu=0.1", &ChangeModel::gaussian(0.1, 0.0)?);
    show(
        "gaussian mu=0.1 sigma2=0.05",
        &ChangeModel::gaussian(0.1, 0.05)?,
    );
    show("exponential 1 -> 1.1", &ChangeModel::exponential(1.0, 1.1)?);
    show("exponential 1 -> 0.9", &ChangeModel::exponential(1.0, 0.9)?);
    Ok(())
}
