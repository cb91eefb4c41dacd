use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use curvatura::cli::{self, Failure, RunOptions, BUILTIN};

/// Stability and rigidity audits for H2-surfaces in space forms.
#[derive(Parser)]
#[command(name = "curvatura", version)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file (or a bundled scenario by name).
    Run {
        config: String,
        /// Output directory; defaults to the scenario's, then `out/<name>`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Leave the timestamp out of report.json.
        #[arg(long)]
        no_timestamp: bool,
    },
    /// List the bundled scenarios.
    ListScenarios,
    /// Mesh a scenario's surface and write it as OFF.
    ExportMesh { config: String, file: PathBuf },
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Ok(n) = std::env::var("CURVATURA_THREADS") {
        match n.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("configuration error: CURVATURA_THREADS must be a positive integer, got {n:?}");
                return ExitCode::from(2);
            }
        }
    }
    match execute(args.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("{f}");
            ExitCode::from(f.exit_code())
        }
    }
}

fn execute(command: Command) -> Result<u8, Failure> {
    match command {
        Command::Run { config, out, no_timestamp } => {
            let s = cli::load_scenario(&config)?;
            let report = cli::run(&s, &RunOptions { out, timestamp: !no_timestamp })?;
            for c in report.checks.iter().filter(|c| !c.passed) {
                eprintln!("check failed: {} = {:e} (limit {:e})", c.name, c.value, c.limit);
            }
            println!("{}: {}", report.scenario, if report.passed { "all checks passed" } else { "checks failed" });
            Ok(if report.passed { 0 } else { 1 })
        }
        Command::ListScenarios => {
            for (name, _) in BUILTIN {
                let s = cli::builtin(name).expect("bundled scenario parses");
                println!("{name}\t{}", s.geometry.kind());
            }
            Ok(0)
        }
        Command::ExportMesh { config, file } => {
            let s = cli::load_scenario(&config)?;
            cli::export_mesh(&s, &file)?;
            Ok(0)
        }
    }
}
