use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gkflow::scenario::{explain, list, run_scenario_file, OUT_ENV};

/// Scenario runner for generalized Kähler flows.
#[derive(Parser)]
#[command(name = "gkflow", version, about, after_help = format!("Artifacts are written under ${OUT_ENV}/<name>/ (default ./gkflow-out)."))]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a config file.
    Run { config: PathBuf },
    /// List or explain built-in recipes and scenarios.
    Describe(Describe),
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Describe {
    #[arg(long)]
    list: bool,
    #[arg(long, value_name = "NAME")]
    explain: Option<String>,
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match cli.command {
        Command::Describe(d) => {
            if d.list {
                print!("{}", list());
                return ExitCode::SUCCESS;
            }
            match explain(d.explain.as_deref().unwrap_or_default()) {
                Ok(s) => {
                    print!("{s}");
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
        Command::Run { config } => match run_scenario_file(&config) {
            Ok(r) => {
                for c in &r.checks {
                    println!(
                        "{:<40} {:>12.4e}  tol {:>9.2e}  {}",
                        c.name,
                        c.value,
                        c.tol,
                        if c.passed { "PASS" } else { "FAIL" }
                    );
                }
                for n in &r.notes {
                    println!("note: {n}");
                }
                println!("{}: {} ({})", r.scenario, r.outcome.name(), r.out_dir.display());
                ExitCode::from(r.outcome.exit_code() as u8)
            }
            Err(e @ gkflow::Error::Parse { .. }) => {
                eprintln!("error: {e}\nusage: gkflow run <config>; see `gkflow describe --list` and the config schema in README.md");
                ExitCode::from(2)
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(4)
            }
        },
    }
}
