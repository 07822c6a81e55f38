//! `qbsim` — scenario runner for the switchable coherent-state quantum
//! battery model.
//!
//! Every run resolves a JSON config (or built-in defaults) into SI units,
//! validates it, executes one scenario, and writes a data table plus a
//! manifest that can be fed back to `qbsim run` to reproduce the table
//! byte for byte.

mod config;
mod output;
mod scenarios;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::Scenario;

/// Failure classes, mapped onto process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Configuration problems: unreadable file, bad units, failed
    /// validation. Exit code 2.
    Config(String),
    /// The physics engine refused or failed mid-run (invariant violation,
    /// solver breakdown). Exit code 3.
    Runtime(String),
    /// The results could not be written. Exit code 1.
    Output(String),
}

impl CliError {
    fn message(&self) -> &str {
        match self {
            Self::Config(m) | Self::Runtime(m) | Self::Output(m) => m,
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 2,
            Self::Runtime(_) => 3,
            Self::Output(_) => 1,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "qbsim",
    version,
    about = "Simulator for a switchable coherent-state quantum battery"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run whatever scenario the config file (or manifest) names.
    Run(ScenarioArgs),
    /// Charging dynamics: photon number, energy, power, ergotropy vs time.
    Charge(ScenarioArgs),
    /// Free decay of the charged battery once the charger is switched off.
    Age(ScenarioArgs),
    /// Ergotropy report for the charged state, in both conventions.
    Ergotropy(ScenarioArgs),
    /// Steady-state extraction ratio versus drive amplitude.
    RatioSweep(ScenarioArgs),
    /// Probe transmission spectra for a family of stored photon numbers.
    Readout(ScenarioArgs),
    /// Bound levels of the biased readout junction, with derived couplings.
    SquidLevels(ScenarioArgs),
    /// Qubit transition frequency versus DC bias flux.
    FluxSweep(ScenarioArgs),
    /// Rebuild the bundled figure datasets with pinned settings.
    Reproduce(ReproduceArgs),
    /// Check a configuration and print a JSON report without running.
    Validate(ScenarioArgs),
}

#[derive(Args)]
struct ScenarioArgs {
    /// JSON configuration file; omit to use built-in defaults.
    config: Option<PathBuf>,

    /// Override one config entry, e.g. --set physics.beta_mag=0.6 or
    /// --set physics.omega_a='{"value":5,"unit":"GHz","convention":"ordinary"}'.
    #[arg(long = "set", value_name = "PATH=JSON")]
    set: Vec<String>,
}

#[derive(Args)]
struct ReproduceArgs {
    /// Dataset names (fig2a, fig2b, fig3, fig5a, fig5b) or "all".
    #[arg(required = true)]
    figures: Vec<String>,

    /// Directory that receives the tables and manifests.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_thread_pool() {
        eprintln!("error: {}", e.message());
        return ExitCode::from(e.exit_code());
    }
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

/// Honor `QBSIM_THREADS` as a hard cap on worker threads. Unset means
/// one worker per logical CPU.
fn init_thread_pool() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("QBSIM_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.parse().map_err(|_| {
        CliError::Config(format!(
            "QBSIM_THREADS must be a positive integer, got \"{raw}\""
        ))
    })?;
    if n == 0 {
        return Err(CliError::Config(
            "QBSIM_THREADS must be a positive integer, got \"0\"".into(),
        ));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("QBSIM_THREADS: {e}")))
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Run(a) => run_scenario(&a, None),
        Command::Charge(a) => run_scenario(&a, Some(Scenario::Charge)),
        Command::Age(a) => run_scenario(&a, Some(Scenario::Age)),
        Command::Ergotropy(a) => run_scenario(&a, Some(Scenario::Ergotropy)),
        Command::RatioSweep(a) => run_scenario(&a, Some(Scenario::RatioSweep)),
        Command::Readout(a) => run_scenario(&a, Some(Scenario::Readout)),
        Command::SquidLevels(a) => run_scenario(&a, Some(Scenario::SquidLevels)),
        Command::FluxSweep(a) => run_scenario(&a, Some(Scenario::FluxSweep)),
        Command::Reproduce(a) => reproduce(&a),
        Command::Validate(a) => validate_only(&a),
    }
}

fn run_scenario(args: &ScenarioArgs, forced: Option<Scenario>) -> Result<(), CliError> {
    let require_scenario = forced.is_none();
    let resolved = config::load(args.config.as_deref(), &args.set, forced, require_scenario)?;
    let report = config::validate(&resolved);
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    if !report.errors.is_empty() {
        for e in &report.errors {
            eprintln!("error: {e}");
        }
        return Err(CliError::Config("configuration failed validation".into()));
    }
    if resolved.scenario == Some(Scenario::Reproduce) {
        // The reproduce scenario is an envelope: rebuild every figure
        // dataset from this config, each into its own table + manifest
        // beside the configured output path.
        let out_path = PathBuf::from(&resolved.output.path);
        let out_dir = out_path.parent().filter(|p| !p.as_os_str().is_empty());
        for name in config::FIGURE_NAMES {
            let child = config::figure_child(&resolved, name, out_dir.unwrap_or(Path::new(".")))?;
            execute_and_write(&child)?;
        }
        return Ok(());
    }
    execute_and_write(&resolved)
}

fn execute_and_write(resolved: &config::ResolvedConfig) -> Result<(), CliError> {
    let run = scenarios::execute(resolved)?;
    for line in &run.stdout_lines {
        println!("{line}");
    }
    let out_path = PathBuf::from(&resolved.output.path);
    output::write_table(&out_path, resolved.output.format, &run.table)?;
    let manifest = config::manifest_for(resolved);
    let manifest_path = config::manifest_path(&out_path);
    output::write_json_file(&manifest_path, &manifest)?;
    println!(
        "wrote {} ({} rows) and {}",
        out_path.display(),
        run.table.rows.len(),
        manifest_path.display()
    );
    Ok(())
}

fn reproduce(args: &ReproduceArgs) -> Result<(), CliError> {
    let mut names: Vec<&'static str> = Vec::new();
    for requested in &args.figures {
        if requested == "all" {
            for f in config::FIGURE_NAMES {
                if !names.contains(&f) {
                    names.push(f);
                }
            }
            continue;
        }
        match config::FIGURE_NAMES
            .iter()
            .find(|f| **f == requested.as_str())
        {
            Some(f) => {
                if !names.contains(f) {
                    names.push(f);
                }
            }
            None => {
                return Err(CliError::Config(format!(
                    "unknown figure \"{requested}\" (expected one of {}, or all)",
                    config::FIGURE_NAMES.join(", ")
                )));
            }
        }
    }
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| CliError::Output(format!("cannot create {}: {e}", args.out_dir.display())))?;
    for name in names {
        let resolved = config::figure_preset(name, &args.out_dir)?;
        execute_and_write(&resolved)?;
    }
    Ok(())
}

/// `validate` resolves and checks the config, prints a machine-readable
/// report on stdout, and sets the exit code without running anything.
fn validate_only(args: &ScenarioArgs) -> Result<(), CliError> {
    match config::load(args.config.as_deref(), &args.set, None, false) {
        Ok(resolved) => {
            let report = config::validate(&resolved);
            println!("{}", config::render_validation(&resolved, &report));
            if report.errors.is_empty() {
                Ok(())
            } else {
                Err(CliError::Config("configuration failed validation".into()))
            }
        }
        Err(CliError::Config(msg)) => {
            let doc = serde_json::json!({
                "ok": false,
                "errors": [msg],
                "warnings": [],
            });
            println!(
                "{}",
                serde_json::to_string_pretty(&doc).expect("static JSON")
            );
            Err(CliError::Config(msg))
        }
        Err(other) => Err(other),
    }
}
