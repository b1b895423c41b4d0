//! Build an experiment spec in code, print its JSON, and run the prediction
//! and validation studies that the `covert-qcd` binary runs from a file.
//!
//! ```text
//! cargo run --release --example experiment_spec
//! ```

use covert_qcd::experiment::{cmd_predict, cmd_validate, ExperimentSpec};

const SPEC: &str = r#"{
  "name": "example",
  "schedule": {"family": "exponential_rate", "c": 1.0, "delta": 0.5, "sign": 1},
  "gammas": [100, 1000],
  "mc": {"replications": 500, "seed": 5},
  "outputs": "out/example",
  "rho": 0.5,
  "tolerances": {"at2fa_rel": 0.5}
}"#;

fn main() -> covert_qcd::Result<()> {
    let spec = ExperimentSpec::from_json(SPEC)?;
    println!("{}", spec.to_json());
    for outcome in [cmd_predict(&spec)?, cmd_validate(&spec)?] {
        for f in &outcome.files {
            println!("wrote {}", f.display());
        }
        for c in &outcome.checks {
            println!(
                "{} {} = {:.4} (limit {})",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.value,
                c.limit
            );
        }
    }
    Ok(())
}
