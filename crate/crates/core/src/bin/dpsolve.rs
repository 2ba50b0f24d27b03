use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use double_phase::runner::{emit_report, run, verify};
use double_phase::suite::run_suite;

#[derive(Parser)]
#[command(name = "dpsolve", version, about = "Double phase problems with nonlinear boundary conditions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write a manifest, fields and tables.
    Run {
        config: PathBuf,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
    /// Recompute the certificates of a finished run from its stored fields.
    Verify { manifest: PathBuf },
    /// Run the nine acceptance criteria.
    Suite,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ok = match cli.command {
        Command::Run { config, out } => match run(&config, &out) {
            Ok((manifest, dir)) => {
                print!("{}", emit_report(&manifest));
                println!("written to {}", dir.display());
                manifest.passed
            }
            Err(e) => {
                eprintln!("error: {e}");
                false
            }
        },
        Command::Verify { manifest } => match verify(&manifest) {
            Ok(report) => {
                for c in &report.certificates {
                    println!("{}", c.line());
                }
                println!("overall: {}", if report.passed { "PASS" } else { "FAIL" });
                report.passed
            }
            Err(e) => {
                eprintln!("error: {e}");
                false
            }
        },
        Command::Suite => {
            let outcomes = run_suite();
            for o in &outcomes {
                println!("{}", o.line());
            }
            outcomes.iter().all(|o| o.passed)
        }
    };
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
