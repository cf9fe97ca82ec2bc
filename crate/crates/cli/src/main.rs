mod commands;
mod config;
mod output;
mod plots;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use diffmourre::Error;

use crate::commands::Context;
use crate::config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "diffmourre", version, about = "Mourre estimates and resolvent probes for difference-operator conjugates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration; defaults apply to missing fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides outputs.dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for the parallel pool.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Print machine-readable results on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Also render SVG plots.
    #[arg(long, global = true)]
    plots: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the commutator identity corpus symbolically and numerically.
    Symcheck {
        /// Corpus file with one `name: lhs = rhs` per line.
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Free Mourre constant and pointwise symbol check.
    Freemourre,
    /// Projected Mourre estimate with an L-scan.
    Mourre,
    /// Weighted resolvent ε-sweeps.
    Lap,
    /// Eigenvalues below the window top with localization measures.
    Spectrum,
    /// Proxy report on the hypotheses for V.
    Assumptions,
}

const EXIT_FAILED_CHECK: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn exit_for(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(if e.is_validation() { EXIT_VALIDATION } else { EXIT_NUMERICAL })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(k) = cli.jobs {
        if k == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(EXIT_VALIDATION);
        }
        rayon::ThreadPoolBuilder::new().num_threads(k).build_global().expect("thread pool is configured once");
    }
    // sequential dense kernels keep floating-point results independent of the thread count
    faer::set_global_parallelism(faer::Par::Seq);

    let config = match &cli.config {
        Some(p) => match RunConfig::load(p) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: config {}: {e}", p.display());
                return ExitCode::from(EXIT_VALIDATION);
            }
        },
        None => RunConfig::default(),
    };
    let ctx = Context {
        hash: config.hash(),
        out: cli.out.clone().unwrap_or_else(|| config.outputs.dir.clone()),
        json: cli.json,
        plots: cli.plots || config.outputs.plots,
        config,
    };
    let outcome = match &cli.command {
        Command::Symcheck { corpus } => commands::symcheck(&ctx, corpus.as_deref()),
        Command::Freemourre => commands::freemourre(&ctx).map(|_| true),
        Command::Mourre => commands::mourre(&ctx).map(|_| true),
        Command::Lap => commands::lap(&ctx).map(|_| true),
        Command::Spectrum => commands::spectrum(&ctx).map(|_| true),
        Command::Assumptions => commands::assumptions(&ctx).map(|_| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAILED_CHECK),
        Err(e) => exit_for(&e),
    }
}
