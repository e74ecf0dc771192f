//! Command-line front end: phantom generation, projection, level-set
//! reconstruction, SIRT baseline and mask evaluation.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use bintomo::config::ExperimentConfig;
use bintomo::experiment;
use bintomo::io::{self, METRICS_HEADER};
use bintomo::Error;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bintomo", version, about = "Binary limited-data tomography with a Gaussian-RBF level set")]
struct Cli {
    /// Experiment config (`key = value` lines). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output_dir` from the config.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Worker threads for system-matrix and dictionary assembly.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the ground-truth phantom (truth.pgm, truth_mask.csv).
    Phantom,
    /// Project truth.pgm into sinogram.csv, adding noise if configured.
    Project,
    /// Level-set reconstruction from sinogram.csv.
    Reconstruct,
    /// SIRT + Otsu reconstruction from sinogram.csv.
    Baseline,
    /// Compare two mask PGM files.
    Evaluate { estimate: PathBuf, truth: PathBuf },
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::InvalidArgument(_) | Error::Parse { .. } => 2,
        Error::Singular { .. } | Error::NumericalFailure(_) => 3,
        Error::Io(_) | Error::File { .. } => 1,
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|source| Error::File { path: path.clone(), source })?;
            ExperimentConfig::parse(&text).map_err(|e| match e {
                Error::Parse { line, message } => {
                    Error::Parse { line, message: format!("{}: {message}", path.display()) }
                }
                other => other,
            })?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(out) = &cli.output {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), Error> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Error::InvalidArgument("--jobs must be at least 1".into()));
        }
        // Only fails if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Phantom => {
            let mask = experiment::cmd_phantom(&cfg)?;
            eprintln!("phantom: {} foreground pixels -> {}", mask.count(), cfg.output_dir.display());
        }
        Command::Project => {
            let sino = experiment::cmd_project(&cfg)?;
            eprintln!("project: {}x{} sinogram -> {}", sino.n_angles(), sino.n_det(), cfg.output_dir.display());
        }
        Command::Reconstruct => {
            let run = experiment::cmd_reconstruct(&cfg)?;
            eprintln!(
                "reconstruct: {} iterations, stopped by {}",
                run.reconstruction.state.iter, run.reconstruction.stop
            );
            println!("{METRICS_HEADER}\n{}", run.row.to_csv_line());
        }
        Command::Baseline => {
            let run = experiment::cmd_baseline(&cfg)?;
            println!("{METRICS_HEADER}\n{}", run.row.to_csv_line());
        }
        Command::Evaluate { estimate, truth } => {
            let cfg = cli.config.as_ref().map(|_| &cfg);
            let (_, row) = experiment::cmd_evaluate(estimate, truth, cfg)?;
            if let Some(out) = &cli.output {
                fs::create_dir_all(out)?;
                fs::write(out.join("evaluate.csv"), io::encode_metrics_csv(std::slice::from_ref(&row)))?;
            }
            println!("{METRICS_HEADER}\n{}", row.to_csv_line());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
