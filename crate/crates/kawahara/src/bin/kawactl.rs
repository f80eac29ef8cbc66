//! Command-line driver for the control-synthesis toolkit.
//!
//! Exit codes: 0 success, 2 parse/configuration error, 3 validation error,
//! 4 hypothesis violation, 5 non-convergence, 1 internal error.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use kawahara::run::{run, Command, RunConfig};

#[derive(Parser)]
#[command(
    name = "kawactl",
    about = "Control synthesis for the Kawahara equation under an integral overdetermination condition",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Subcommand)]
enum CliCommand {
    /// Integrate the free (uncontrolled) evolution of the problem data
    Solve(CommonArgs),
    /// Synthesize the control for the linear equation
    ControlLinear(CommonArgs),
    /// Synthesize the control for the full nonlinear equation
    ControlNonlinear(CommonArgs),
    /// Compute the certified minimal horizon and verify it
    MinimalTime(CommonArgs),
    /// Dilation-symmetry residuals and observation equivalence
    ScalingCheck(CommonArgs),
    /// Well-posedness ensemble, restriction-norm and bilinear-probe diagnostics
    Diagnostics(CommonArgs),
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Problem file (JSON)
    #[arg(long)]
    problem: PathBuf,
    /// Output directory for report.json and CSV/binary artifacts
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Iteration tolerance
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Iteration budget
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
    /// Seed for ensemble diagnostics
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Overrides as key=value (c_t, gamma, nu_scaling_exponent,
    /// phi_scaling_exponent, delta, ensemble_size)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn parse_overrides(pairs: &[String]) -> Result<BTreeMap<String, f64>, String> {
    let mut map = BTreeMap::new();
    for pair in pairs {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| format!("override '{pair}' is not of the form key=value"))?;
        let value: f64 = value
            .parse()
            .map_err(|_| format!("override '{pair}' has a non-numeric value"))?;
        map.insert(key.to_string(), value);
    }
    Ok(map)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        CliCommand::Solve(a) => (Command::Solve, a),
        CliCommand::ControlLinear(a) => (Command::ControlLinear, a),
        CliCommand::ControlNonlinear(a) => (Command::ControlNonlinear, a),
        CliCommand::MinimalTime(a) => (Command::MinimalTime, a),
        CliCommand::ScalingCheck(a) => (Command::ScalingCheck, a),
        CliCommand::Diagnostics(a) => (Command::Diagnostics, a),
    };
    let overrides = match parse_overrides(&args.set) {
        Ok(map) => map,
        Err(msg) => {
            eprintln!("kawactl: {msg}");
            return ExitCode::from(2);
        }
    };
    let config = RunConfig {
        command,
        problem_path: args.problem,
        output_dir: args.out,
        tol: args.tol,
        max_iter: args.max_iter,
        seed: args.seed,
        overrides,
    };
    match run(&config) {
        Ok(report) => {
            println!(
                "{}: ok ({}); report at {}/report.json",
                command.name(),
                summarize(&report.results),
                config.output_dir.display()
            );
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("kawactl: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn summarize(results: &serde_json::Value) -> String {
    if let Some(v) = results
        .get("control_linear")
        .or_else(|| results.get("control_nonlinear"))
    {
        return format!(
            "residual {:.3e} in {} iterations",
            v["residual"].as_f64().unwrap_or(f64::NAN),
            v["iterations"]
        );
    }
    if let Some(v) = results.get("minimal_time") {
        return format!(
            "T0 = {:.6e}, certified: {}",
            v["T0"].as_f64().unwrap_or(f64::NAN),
            v["certified"]
        );
    }
    if let Some(v) = results.get("solve") {
        return format!("sup-L2 {:.6e}", v["sup_l2"].as_f64().unwrap_or(f64::NAN));
    }
    if let Some(list) = results.get("scaling_check").and_then(|v| v.as_array()) {
        return format!("{} dilation(s) checked", list.len());
    }
    if let Some(v) = results.get("diagnostics") {
        return format!(
            "wellposedness max ratio {:.4}",
            v["wellposedness"]["max_ratio"].as_f64().unwrap_or(f64::NAN)
        );
    }
    "done".into()
}
