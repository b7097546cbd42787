//! `se3pid` command line: run flight scenarios from config files, evaluate
//! gain certificates, and replay the built-in maneuvers.
//!
//! Exit codes: 0 success, 1 config error, 2 controller degeneracy abort,
//! 3 certificate failure under `--strict`.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use se3pid::certify::{check_attitude_conditions, check_position_conditions, Certificate};
use se3pid::scenarios;
use se3pid::sim::{run_scenario, ModeReference, Scenario, ScenarioOutcome, ScenarioRun};

use config::{build_scenario, ConfigError, RawConfig, ScenarioConfig};

#[derive(Parser)]
#[command(name = "se3pid", version, about = "Geometric nonlinear PID flight control simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario config, write the CSV log, print a summary
    Simulate {
        /// Path to the scenario config
        config: PathBuf,
        /// Override a config value (repeatable), e.g. --set gains.k_i=0
        #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
        set: Vec<String>,
        /// Output CSV path (overrides `[output] csv`)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the gain certificate for a scenario config
    Certify {
        /// Path to the scenario config
        config: PathBuf,
        /// Exit non-zero unless every condition passes
        #[arg(long)]
        strict: bool,
    },
    /// Run a built-in scenario: flip, flip-no-integral, euler-attitude
    Builtin {
        name: String,
        /// Output CSV path (default: `<name>.csv`)
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Simulate { config, set, out } => cmd_simulate(&config, &set, out),
        Command::Certify { config, strict } => cmd_certify(&config, strict),
        Command::Builtin { name, out } => cmd_builtin(&name, out),
    };
    ExitCode::from(code)
}

fn load_config(path: &Path, overrides: &[String]) -> Result<ScenarioConfig, ConfigError> {
    let text = fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read '{}': {e}", path.display())))?;
    let mut raw = RawConfig::parse(&text)?;
    for spec in overrides {
        raw.apply_override(spec)?;
    }
    build_scenario(raw)
}

fn cmd_simulate(path: &Path, overrides: &[String], out: Option<PathBuf>) -> u8 {
    let cfg = match load_config(path, overrides) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("{e}");
            return 1;
        }
    };
    let out_path = out
        .or_else(|| cfg.csv_path.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| default_csv_path(path));
    run_and_report(&cfg.scenario, &out_path)
}

fn cmd_certify(path: &Path, strict: bool) -> u8 {
    let cfg = match load_config(path, &[]) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("{e}");
            return 1;
        }
    };
    let scenario = &cfg.scenario;
    let Some(bounds) = scenario.bounds else {
        eprintln!("config error: certify requires a [bounds] section");
        return 1;
    };
    let cert = certificate_for(scenario, &bounds);
    print!("{}", cert.render());
    if strict && !cert.all_pass() {
        return 3;
    }
    0
}

fn cmd_builtin(name: &str, out: Option<PathBuf>) -> u8 {
    let scenario = match name {
        "flip" => scenarios::flip::<f64>(),
        "flip-no-integral" => scenarios::flip_no_integral::<f64>(),
        "euler-attitude" => scenarios::euler_attitude::<f64>(),
        other => {
            eprintln!("unknown built-in scenario '{other}' (expected flip, flip-no-integral, euler-attitude)");
            return 1;
        }
    };
    let out_path = out.unwrap_or_else(|| PathBuf::from(format!("{name}.csv")));
    run_and_report(&scenario, &out_path)
}

fn certificate_for(scenario: &Scenario<f64>, bounds: &se3pid::certify::GainBounds<f64>) -> Certificate<f64> {
    let has_position_mode = scenario
        .modes
        .iter()
        .any(|m| matches!(m.reference, ModeReference::Position(_)));
    if has_position_mode {
        check_position_conditions(&scenario.gains, &scenario.params, bounds)
    } else {
        check_attitude_conditions(&scenario.gains.attitude, scenario.params.inertia(), bounds)
    }
}

fn run_and_report(scenario: &Scenario<f64>, out_path: &Path) -> u8 {
    let run: ScenarioRun<f64> = match run_scenario(scenario) {
        Ok(run) => run,
        Err(e) => {
            eprintln!("{e}");
            return 1;
        }
    };
    if let Some(cert) = &run.certificate {
        if !cert.all_pass() {
            eprintln!(
                "warning: gain certificate FAIL ({})",
                cert.violations().join(", ")
            );
        }
    }
    let file = match fs::File::create(out_path) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("cannot write '{}': {e}", out_path.display());
            return 1;
        }
    };
    if let Err(e) = run.log.write_csv(std::io::BufWriter::new(file)) {
        eprintln!("cannot write '{}': {e}", out_path.display());
        return 1;
    }

    let infeasible = run.log.infeasible_rotor_records();
    if infeasible > 0 {
        eprintln!("warning: {infeasible} records with negative rotor thrust");
    }
    if let Some(last) = run.log.last() {
        println!("records: {}", run.log.records.len());
        println!("final |e_x|: {:.6e} m", last.position_error.norm());
        println!("final Psi: {:.6e}", last.psi);
        println!("max rotor thrust: {:.6e} N", run.log.max_rotor_thrust());
    }
    println!("log: {}", out_path.display());
    match run.outcome {
        ScenarioOutcome::Completed => 0,
        ScenarioOutcome::Aborted { time, reason } => {
            eprintln!("scenario aborted at t = {time}: {reason}");
            2
        }
    }
}

fn default_csv_path(config_path: &Path) -> PathBuf {
    let stem = config_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".to_string());
    PathBuf::from(format!("{stem}.csv"))
}
