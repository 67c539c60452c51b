//! `hkt`: run solves, identity checks, estimate sweeps and the self-test from the command line.

use clap::{Args, Parser, Subcommand};
use hkt::report::{execute, ExperimentConfig, Mode, Overrides};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "hkt", version, about = "Quaternionic Monge-Ampere experiments on flat hypercomplex tori")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the equation for the configured right-hand side.
    Solve(Common),
    /// Run the fiber and field identity checks.
    Verify(Common),
    /// Solve a family of right-hand sides and evaluate the integral estimates.
    Sweep(Common),
    /// Identity checks plus a manufactured solve.
    Selftest(Common),
}

#[derive(Args)]
struct Common {
    /// JSON experiment file; flags below override its values.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Quaternionic dimension.
    #[arg(long)]
    n: Option<usize>,
    /// Points per active axis (even).
    #[arg(long, value_name = "N")]
    grid: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Newton residual tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Recalibrate A at every iterate (`true` or `false`).
    #[arg(long, value_name = "BOOL", num_args = 0..=1, default_missing_value = "true")]
    calibrate_a: Option<bool>,
}

fn load(mode: Mode, args: &Common) -> hkt::Result<ExperimentConfig> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::from_path(path)?,
        None => ExperimentConfig::new(mode),
    };
    config.mode = mode;
    config.apply(&Overrides {
        n: args.n,
        grid: args.grid,
        seed: args.seed,
        tol: args.tol,
        output: args.out.clone(),
        calibrate_a: args.calibrate_a,
    })?;
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, args) = match &cli.command {
        Command::Solve(a) => (Mode::Solve, a),
        Command::Verify(a) => (Mode::VerifyIdentities, a),
        Command::Sweep(a) => (Mode::EstimateSweep, a),
        Command::Selftest(a) => (Mode::Selftest, a),
    };
    let config = match load(mode, args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let report = match execute(&config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    for c in &report.checks {
        println!(
            "{} {:<48} error {:>11.3e}  tol {:.1e}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.max_error,
            c.tolerance
        );
    }
    if let Some(s) = &report.solve {
        println!(
            "solved: residual {:.3e} after {} Newton steps, A = {:.12}, min margin {:.4}",
            s.residual_norm, s.newton_iter, s.a, s.min_positivity_margin
        );
    }
    if let Some(e) = &report.solve_error {
        println!("solve failed ({}): {}", e.kind, e.message);
    }
    for r in report.estimates.records.iter().filter(|r| r.flagged) {
        println!("flagged estimate: {} {} p={:?} slack {:.3e}", r.instance, r.inequality, r.p, r.slack);
    }
    println!("artifacts in {}", config.output.display());
    ExitCode::from(report.exit_code() as u8)
}
