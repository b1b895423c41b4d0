//! Run CuSum and a two-sided SPRT on one simulated Gaussian stream and write
//! both trajectories as CSV.
//!
//! ```text
//! cargo run --example detector_trace -- [mu] [h] [seed]
//! ```

use std::fs::File;

use covert_qcd::detectors::{
    run_cusum_observed, run_sprt_observed, write_trajectory_csv, SprtConfig,
};
use covert_qcd::models::{ChangeModel, Hypothesis};
use covert_qcd::rng::{Lane, StreamFactory};

fn arg(i: usize, default: f64) -> f64 {
    std::env::args()
        .nth(i)
        .and_then(|s| s.parse().ok())
        .unwrap_or(default)
}

fn main() -> covert_qcd::Result<()> {
    let (mu, h, seed) = (arg(1, 0.5), arg(2, 4.0), arg(3, 1.0) as u64);
    let model = ChangeModel::gaussian(mu, 0.0)?;
    let streams = StreamFactory::new(seed);

    let mut cusum = Vec::new();
    let out = run_cusum_observed(
        &model,
        Hypothesis::Post,
        h,
        &mut streams.stream(Lane::Post, 0),
        1_000_000,
        |p| cusum.push(p),
    )?;
    match out.alarm() {
        Some(a) => println!(
            "CuSum alarm after {} samples, overshoot {:.4}",
            a.tau, a.overshoot
        ),
        None => println!("CuSum truncated"),
    }

    let config = SprtConfig::symmetric(h)?;
    let mut sprt = Vec::new();
    let run = run_sprt_observed(
        &model,
        Hypothesis::Post,
        config,
        &mut streams.stream(Lane::Post, 1),
        1_000_000,
        |p| sprt.push(p),
    )?;
    if let Some(o) = run.outcome() {
        println!(
            "SPRT exit {:?} after {} samples, overshoot {:.4}",
            o.hit, o.stopping_time, o.overshoot
        );
    }

    std::fs::create_dir_all("out")?;
    write_trajectory_csv(&cusum, File::create("out/cusum_trace.csv")?)?;
    write_trajectory_csv(&sprt, File::create("out/sprt_trace.csv")?)?;
    println!("wrote out/cusum_trace.csv and out/sprt_trace.csv");
    Ok(())
}
