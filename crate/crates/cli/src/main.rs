use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nlt_cli::batch::run_batch;
use nlt_cli::report::{output_root, run_to_dir, RunReport};
use nlt_cli::schema::schema;
use nlt_cli::{bundled, CliError};

/// Exit status when every requested check passes.
const EXIT_PASS: u8 = 0;
/// Exit status when at least one check fails.
const EXIT_FAIL: u8 = 1;
/// Exit status for unreadable or invalid scenarios.
const EXIT_INVALID: u8 = 2;

#[derive(Parser)]
#[command(name = "nlt", version, about = "Run non-local continuum scenarios and check their balance laws")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file (or bundled scenario name) and write its outputs.
    Run { config: String },
    /// Validate a scenario without running it.
    Validate { config: String },
    /// List the bundled scenarios.
    List,
    /// Run every `*.cfg` file of a directory.
    Batch {
        dir: PathBuf,
        /// Number of scenarios run concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Batch seed; each scenario's seed is derived from it and the scenario name.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn summary(r: &RunReport) {
    let failing: Vec<&str> = r.failing().map(|c| c.name.as_str()).collect();
    if failing.is_empty() {
        println!("{}: {} ({:.2} s)", r.scenario, r.verdict, r.elapsed.as_secs_f64());
    } else {
        println!("{}: {} [{}] ({:.2} s)", r.scenario, r.verdict, failing.join(", "), r.elapsed.as_secs_f64());
    }
}

fn invalid(e: &CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(EXIT_INVALID)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let root = output_root();
    match cli.command {
        Command::Run { config } => match bundled::load(&config).and_then(|sc| run_to_dir(&sc, &root)) {
            Ok(r) => {
                print!("{}", r.to_text());
                summary(&r);
                println!("outputs: {}", root.join(&r.scenario).display());
                ExitCode::from(if r.passed() { EXIT_PASS } else { EXIT_FAIL })
            }
            Err(e) => invalid(&e),
        },
        Command::Validate { config } => match bundled::load(&config) {
            Ok(sc) => {
                println!("{}: valid {} scenario", sc.name(), sc.model);
                let keys = schema(&sc.model);
                for (k, v) in sc.echo() {
                    let help = keys.iter().find(|s| s.key == k).map_or("", |s| s.help);
                    println!("  {k} = {v}    # {help}");
                }
                ExitCode::from(EXIT_PASS)
            }
            Err(e) => invalid(&e),
        },
        Command::List => {
            for b in bundled::all() {
                let description = b
                    .scenario()
                    .map(|sc| sc.text("scenario.description").to_string())
                    .unwrap_or_else(|e| format!("invalid: {e}"));
                let tag = if b.expect_fail { " (falsification: expected FAIL)" } else { "" };
                println!("{:<28} {description}{tag}", b.name);
            }
            ExitCode::from(EXIT_PASS)
        }
        Command::Batch { dir, jobs, seed } => match run_batch(&dir, jobs, seed, &root) {
            Ok(entries) => {
                let mut code = EXIT_PASS;
                for entry in &entries {
                    match &entry.result {
                        Ok(r) => {
                            summary(r);
                            if !r.passed() {
                                code = code.max(EXIT_FAIL);
                            }
                        }
                        Err(e) => {
                            eprintln!("{}: error: {e}", entry.path.display());
                            code = EXIT_INVALID;
                        }
                    }
                }
                println!("{} scenarios, outputs under {}", entries.len(), root.display());
                ExitCode::from(code)
            }
            Err(e) => invalid(&e),
        },
    }
}
