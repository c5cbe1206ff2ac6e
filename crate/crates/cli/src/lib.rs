//! The `poachgrid` command line: stages from park data to risk maps and
//! evaluation metrics.

pub mod config;
pub mod error;
pub mod render;
pub mod stages;

use std::path::PathBuf;

use clap::{Parser, ValueEnum};

use crate::config::LoadedConfig;
use crate::error::{CliError, CliResult};

/// Environment variable fixing the worker thread count.
pub const THREADS_ENV: &str = "POACHGRID_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Stage {
    /// Generate a synthetic park and a config for it.
    Synth,
    /// Build the grid and feature layers.
    Featurize,
    /// Train one model per test year and condition.
    Train,
    /// Write risk maps at the given effort levels.
    Predict,
    /// Score the models on held-out years.
    Evaluate,
    /// Featurize, train, predict and evaluate.
    Run,
}

#[derive(Debug, Parser)]
#[command(name = "poachgrid", version, about = "Poaching risk prediction on park grids")]
pub struct Cli {
    #[arg(value_enum)]
    pub stage: Stage,
    /// Pipeline config (JSON). For `synth`, where to write it.
    #[arg(long)]
    pub config: PathBuf,
    /// Effort level for risk maps; repeat for several.
    #[arg(long = "effort")]
    pub efforts: Vec<f64>,
    /// Overrides the training seed (or the park seed for `synth`).
    #[arg(long)]
    pub seed: Option<u64>,
}

fn thread_count() -> CliResult<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::config("startup", format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
    }
}

pub fn execute(cli: &Cli) -> CliResult<()> {
    if cli.stage == Stage::Synth {
        return stages::synth(&cli.config, cli.seed);
    }
    let mut lc = LoadedConfig::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        lc.config.train.seed = seed;
    }
    match cli.stage {
        Stage::Synth => unreachable!(),
        Stage::Featurize => stages::featurize(&lc),
        Stage::Train => stages::train(&lc),
        Stage::Predict => stages::predict(&lc, &cli.efforts),
        Stage::Evaluate => stages::evaluate(&lc),
        Stage::Run => stages::run(&lc, &cli.efforts),
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = thread_count().and_then(|threads| {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = threads {
            builder = builder.num_threads(n);
        }
        let pool = builder.build().map_err(|e| CliError::internal("startup", e.to_string()))?;
        pool.install(|| execute(&cli))
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.report());
            e.exit_code()
        }
    }
}
