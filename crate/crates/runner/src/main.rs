use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use ethlab_runner::{ExperimentConfig, RunnerResult};

#[derive(Parser)]
#[command(name = "ethlab", version, about = "Eigenstate thermalization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Override the master seed of the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Size of the worker pool.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config.
    Run { config: PathBuf },
    /// Run a config once per value of a numeric field.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        axis: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
    /// Write whitespace-delimited plot files for a results directory.
    PlotData { dir: PathBuf },
}

fn dispatch(cli: Cli) -> RunnerResult<()> {
    let started = Instant::now();
    let out = cli.out.as_deref();
    match cli.command {
        Command::Run { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let (record, manifest) = ethlab_runner::with_workers(cli.workers, || ethlab_runner::run(&cfg, cli.seed, out))??;
            eprintln!(
                "{}: {} rows, {} files, {:.2?}",
                record.experiment,
                record.rows.len(),
                manifest.files.len() + 1,
                started.elapsed()
            );
        }
        Command::Sweep { config, axis, values } => {
            let cfg = ExperimentConfig::load(&config)?;
            let done = ethlab_runner::with_workers(cli.workers, || {
                ethlab_runner::sweep(&cfg, &axis, &values, cli.seed, out)
            })??;
            for (dir, _) in &done {
                eprintln!("wrote {}", dir.display());
            }
            eprintln!("{} points, {:.2?}", done.len(), started.elapsed());
        }
        Command::PlotData { dir } => {
            for p in ethlab_runner::plot_data(&dir)? {
                eprintln!("wrote {}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
