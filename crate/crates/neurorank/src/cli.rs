use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use neurorank_core::features::BandMode;

use crate::commands;
use crate::config::{Overrides, RunConfig};
use crate::error::AppResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    PaperLiteral,
    ResolutionAware,
}

impl From<ModeArg> for BandMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::PaperLiteral => BandMode::PaperLiteral,
            ModeArg::ResolutionAware => BandMode::ResolutionAware,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "neurorank", version, about = "EEG relevance feedback pipeline")]
pub struct Cli {
    /// JSON run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Data directory holding recordings/, sessions/ and labels/.
    #[arg(long, global = true)]
    pub data: Option<PathBuf>,
    /// Band column assignment.
    #[arg(long, global = true, value_enum)]
    pub mode: Option<ModeArg>,
    /// Log progress (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic data directory.
    Synth,
    /// Slice and filter raw recordings into segments.
    Preprocess,
    /// Compute band-energy features for every segment.
    Extract,
    /// Train the paragraph classifier.
    Train,
    /// Score every feature row with the trained model.
    Predict,
    /// Rank one task's candidate pool, optionally applying feedback.
    Rerank {
        #[arg(long)]
        labels: PathBuf,
        /// JSONL of `{"judgment": ..., "satisfied": ...}` lines.
        #[arg(long)]
        feedback: Option<PathBuf>,
    },
    /// Replay sessions under every feedback strategy.
    Simulate,
    /// Render tables from training and simulation outputs.
    Report,
    /// Preprocess through report in one go.
    Run,
}

impl Cli {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            out_dir: self.out.clone(),
            data_dir: self.data.clone(),
            mode: self.mode.map(Into::into),
        }
    }

    pub fn execute(&self) -> AppResult<String> {
        let cfg = RunConfig::load(self.config.as_deref(), &self.overrides())?;
        match &self.command {
            Command::Synth => commands::cmd_synth(&cfg),
            Command::Preprocess => commands::cmd_preprocess(&cfg),
            Command::Extract => commands::cmd_extract(&cfg),
            Command::Train => commands::cmd_train(&cfg),
            Command::Predict => commands::cmd_predict(&cfg),
            Command::Rerank { labels, feedback } => commands::cmd_rerank(&cfg, labels, feedback.as_deref()),
            Command::Simulate => commands::cmd_simulate(&cfg),
            Command::Report => commands::cmd_report(&cfg),
            Command::Run => commands::cmd_run(&cfg),
        }
    }
}
