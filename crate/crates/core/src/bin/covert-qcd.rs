use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use covert_qcd::experiment::{
    cmd_overshoot, cmd_predict, cmd_validate, ExperimentSpec, Overrides, EXIT_USAGE,
};

#[derive(Parser)]
#[command(
    name = "covert-qcd",
    version,
    about = "CuSum/SPRT asymptotics against covert adversaries"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Asymptotic predictions only (no simulation).
    Predict(Common),
    /// Simulate AT2FA and ADD at each gamma and compare with the asymptotics.
    Validate(Common),
    /// Closed-form overshoot bounds against simulated SPRT overshoots.
    Overshoot(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment spec (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `outputs` in the spec.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `mc.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `mc.workers`.
    #[arg(long)]
    workers: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (common, run): (_, fn(&ExperimentSpec) -> covert_qcd::Result<_>) = match cli.command {
        Command::Predict(c) => (c, cmd_predict),
        Command::Validate(c) => (c, cmd_validate),
        Command::Overshoot(c) => (c, cmd_overshoot),
    };
    let overrides = Overrides {
        seed: common.seed,
        workers: common.workers,
        out: common.out,
    };
    let spec = ExperimentSpec::load(&common.config).and_then(|mut s| {
        overrides.apply(&mut s)?;
        Ok(s)
    });
    let spec = match spec {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE as u8);
        }
    };
    match run(&spec) {
        Ok(outcome) => {
            for c in &outcome.checks {
                eprintln!(
                    "{} {} (value {}, limit {})",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.value,
                    c.limit
                );
            }
            for f in &outcome.files {
                println!("{}", f.display());
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE as u8)
        }
    }
}
