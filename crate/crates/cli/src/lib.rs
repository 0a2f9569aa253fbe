//! The `ugdp` pipeline: ingest categorical data, train and calibrate
//! classifiers, scan for the most biased subgroup, synthesize replacement
//! data with a categorical VAE, re-scan it and compare the subgroups.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod pipeline;
pub mod report;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use ugdp_core::biasscan::Direction;

pub use config::PipelineConfig;
pub use error::{CliError, CliResult};
pub use pipeline::{Overrides, Pipeline};
pub use report::RunReport;

#[derive(Debug, Parser)]
#[command(name = "ugdp", version, about = "Bias-scan and synthetic-data pipeline")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load, filter and store the dataset.
    Ingest(StageArgs),
    /// Cross-validate, fit and calibrate the classifiers.
    Train(StageArgs),
    /// Scan the original data for its most biased subgroup.
    Scan(StageArgs),
    /// Train VAEs and write synthetic datasets.
    Synthesize(StageArgs),
    /// Re-scan synthetic data and write the report.
    Evaluate(StageArgs),
    /// All stages, resuming from completed artifacts.
    RunAll(StageArgs),
    /// Print the default configuration.
    ConfigSchema,
}

#[derive(Debug, Args)]
pub struct StageArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub direction: Option<Direction>,
}

impl StageArgs {
    pub fn pipeline(&self) -> CliResult<Pipeline> {
        let mut cfg = PipelineConfig::load(&self.config)?;
        Overrides {
            seed: self.seed,
            out: self.out.clone(),
            direction: self.direction,
        }
        .apply(&mut cfg);
        Pipeline::new(cfg)
    }
}

/// Run one command, printing its summary on stdout.
pub fn execute(command: &Command) -> CliResult<()> {
    match command {
        Command::ConfigSchema => println!("{}", config::default_config_json()),
        Command::Ingest(a) => {
            let ds = a.pipeline()?.ingest()?;
            println!("{} records, {} attributes", ds.n_records(), ds.n_attributes());
        }
        Command::Train(a) => a.pipeline()?.train()?,
        Command::Scan(a) => a.pipeline()?.scan()?,
        Command::Synthesize(a) => a.pipeline()?.synthesize()?,
        Command::Evaluate(a) => print!("{}", a.pipeline()?.evaluate()?.render()),
        Command::RunAll(a) => print!("{}", a.pipeline()?.run_all()?.render()),
    }
    Ok(())
}
