mod config;
mod error;
mod output;
mod report;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::ExperimentConfig;
use error::CliError;

/// Thread-count override for the library sweeps.
const THREADS_VAR: &str = "KMSLAB_THREADS";

#[derive(Parser)]
#[command(name = "kmslab", version, about = "Thermal Lindbladian experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config and write its report directory.
    Run { config: PathBuf },
    /// Summarize every report.json under a directory into summary.md and index.json.
    Report { dir: PathBuf },
    /// Run the invariant suite and print one line per check.
    Validate {
        /// Run only the named checks (repeatable).
        #[arg(long = "check")]
        checks: Vec<String>,
    },
}

fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| CliError::ConfigParse(format!("{THREADS_VAR}={v} is not a thread count")))?;
    if n == 0 {
        return Err(CliError::ConfigParse(format!("{THREADS_VAR} must be positive")));
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::ConfigParse(e.to_string()))
}

fn validate(checks: &[String]) -> Result<(), CliError> {
    let names: Vec<&str> = if checks.is_empty() { kmslab::suite::CHECK_NAMES.to_vec() } else { checks.iter().map(String::as_str).collect() };
    if let Some(bad) = names.iter().find(|n| !kmslab::suite::CHECK_NAMES.contains(n)) {
        return Err(CliError::ConfigParse(format!("unknown check {bad}; known: {}", kmslab::suite::CHECK_NAMES.join(", "))));
    }
    let models = kmslab::suite::suite_models();
    let mut failed = Vec::new();
    for n in names {
        let o = kmslab::suite::run_check(n, Some(&models)).expect("known check");
        println!("{} {} {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail);
        if !o.passed {
            failed.push(error::Violation::new(&o.name, o.detail));
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Invariant(failed))
    }
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    init_threads()?;
    match cmd {
        Command::Run { config } => {
            let (cfg, out) = ExperimentConfig::load(&config)?;
            let r = run::run(&cfg, &out)?;
            println!("{} ok: {} file(s) in {}", r.experiment, r.files.len() + 1, out.display());
            Ok(())
        }
        Command::Report { dir } => {
            let idx = report::report(&dir)?;
            println!("summarized {} run(s) into {}", idx.n_runs, dir.join("summary.md").display());
            Ok(())
        }
        Command::Validate { checks } => validate(&checks),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Invariant(v) = &e {
                eprint!("{}", output::to_json(v));
            }
            ExitCode::from(e.exit_code())
        }
    }
}
