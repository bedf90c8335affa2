use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use viscolab::harness::{self, RunOptions, RunStatus};

/// Vanishing-viscosity experiments for scalar conservation laws.
#[derive(Parser, Debug)]
#[command(name = "viscolab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the epsilon ladder, the reference and all diagnostics.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to the config's `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Ladder members solved concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Replace a run made from a different config.
        #[arg(long)]
        overwrite: bool,
    },
    /// Re-check hashes and re-evaluate every estimate from disk.
    Verify {
        #[arg(long)]
        out: PathBuf,
    },
    /// Write plot/profiles.csv and plot/metrics.csv for a finished run.
    Plotdata {
        #[arg(long)]
        out: PathBuf,
    },
    /// List flux, viscosity, data and entropy presets.
    Presets,
}

fn execute(cli: Cli) -> anyhow::Result<RunStatus> {
    match cli.command {
        Command::Run {
            config,
            out,
            jobs,
            overwrite,
        } => {
            let text = std::fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let outcome = harness::run_ladder(
                &text,
                &RunOptions {
                    out,
                    jobs,
                    overwrite,
                },
            )?;
            if let Some(ev) = &outcome.evaluation {
                print!("{}", harness::render_reports(&ev.reports));
            }
            for stage in outcome.manifest.stages.iter().filter(|s| !s.ok) {
                eprintln!(
                    "stage {} failed: {}",
                    stage.name,
                    stage.message.as_deref().unwrap_or("unknown error")
                );
            }
            println!("run written to {}", outcome.dir.display());
            Ok(outcome.status)
        }
        Command::Verify { out } => {
            let v = harness::verify(&out)?;
            print!("{}", harness::render_reports(&v.reports));
            if !v.consistent {
                println!("note: verdicts differ from those stored in the manifest");
            }
            Ok(v.status)
        }
        Command::Plotdata { out } => {
            for f in harness::emit_plotdata(&out)? {
                println!("{}", f.display());
            }
            Ok(RunStatus::AllPass)
        }
        Command::Presets => {
            print!("{}", harness::presets_text());
            Ok(RunStatus::AllPass)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(status) => ExitCode::from(status.code() as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(RunStatus::ExecutionFailure.code() as u8)
        }
    }
}
