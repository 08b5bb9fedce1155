//! Reproducible augmentation experiments: a config file names the data,
//! the arms (augmentation conditions), and the seeds; the runner trains
//! one model per (arm, seed), evaluates it, and emits a result table
//! plus per-replicate artifacts. A synthetic integer-language task
//! generator supplies self-checking data for tests and demos.

mod config;
mod runner;
mod table;
mod toy;

pub use config::{
    parse_arm, seed_plan, Arm, AugMethod, AugmentSettings, DataPaths, DecodeSettings,
    ExperimentConfig, ModelSettings, OovChoice, SeedPlan, TieChoice, TrainSettings,
};
pub use runner::{replicate_dir, run_experiment};
pub use table::{
    mean_of, parse_tsv, render_markdown, render_tsv, ArmReport, ArmResult, MeanRow, ReportTable,
    SeedRow, TSV_HEADER,
};
pub use toy::{block_reverse, generate_toy_task, write_toy_task, ToyTask, ToyTaskSpec};

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config error: {0}")]
    Config(String),
    #[error("report table: {0}")]
    Table(String),
    #[error(transparent)]
    Corpus(#[from] crate::corpus::CorpusError),
    #[error(transparent)]
    Lexicon(#[from] crate::lexicon::LexiconError),
    #[error(transparent)]
    Nmt(#[from] crate::nmt::NmtError),
    #[error(transparent)]
    Checkpoint(#[from] crate::nmt::CheckpointError),
    #[error(transparent)]
    Metrics(#[from] crate::metrics::MetricsError),
}
