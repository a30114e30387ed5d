//! Run configuration: one JSON document with a `version` field.

use std::path::{Path, PathBuf};

use neurorank_core::features::{BandMode, BandTable, FeatureExtractor, StatConfig};
use neurorank_core::model::{BaselineConfig, RfeConfig, VotingConfig};
use neurorank_core::rerank::RerankConfig;
use neurorank_core::signal::PreprocessConfig;
use neurorank_core::sim::StrategySpec;
use neurorank_core::synth::SessionSpec;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};
use crate::jsonl;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Paths {
    /// Holds `recordings/`, `sessions/` and `labels/`.
    pub data_dir: PathBuf,
    pub out_dir: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            data_dir: PathBuf::from("data"),
            out_dir: PathBuf::from("out"),
        }
    }
}

/// Which sessions the simulator replays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionSelection {
    /// Only sessions of held-out tasks, so predictions are out of sample.
    #[default]
    Test,
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub seed: u64,
    pub mode: BandMode,
    pub paths: Paths,
    pub preprocess: PreprocessConfig,
    /// Re-emit inputs already marked preprocessed unchanged instead of failing.
    pub passthrough_preprocessed: bool,
    pub features: StatConfig,
    pub bands: BandTable,
    pub rfe: RfeConfig,
    pub voting: VotingConfig,
    pub rerank: RerankConfig,
    pub strategies: Vec<StrategySpec>,
    pub simulate_sessions: SessionSelection,
    /// Also fit the comparison models during `train`.
    pub baselines: Option<BaselineConfig>,
    pub synth: SessionSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            seed: 0,
            mode: BandMode::ResolutionAware,
            paths: Paths::default(),
            preprocess: PreprocessConfig::default(),
            passthrough_preprocessed: false,
            features: StatConfig::default(),
            bands: BandTable::default(),
            rfe: RfeConfig::default(),
            voting: VotingConfig::default(),
            rerank: RerankConfig::default(),
            strategies: vec![
                StrategySpec::None,
                StrategySpec::Click { threshold: 1 },
                StrategySpec::Click { threshold: 2 },
                StrategySpec::Click { threshold: 3 },
                StrategySpec::Eeg { threshold: 1 },
                StrategySpec::Eeg { threshold: 2 },
                StrategySpec::Eeg { threshold: 3 },
            ],
            simulate_sessions: SessionSelection::Test,
            baselines: None,
            synth: SessionSpec::default(),
        }
    }
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub data_dir: Option<PathBuf>,
    pub mode: Option<BandMode>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>, o: &Overrides) -> AppResult<Self> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| AppError::config(format!("{}: {e}", p.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| AppError::config(format!("{}: {e}", p.display())))?
            }
            None => Self::default(),
        };
        if let Some(s) = o.seed {
            cfg.seed = s;
        }
        if let Some(d) = &o.out_dir {
            cfg.paths.out_dir = d.clone();
        }
        if let Some(d) = &o.data_dir {
            cfg.paths.data_dir = d.clone();
        }
        if let Some(m) = o.mode {
            cfg.mode = m;
        }
        cfg.rfe.seed = cfg.seed;
        if let Some(b) = &mut cfg.baselines {
            b.seed = cfg.seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> AppResult<()> {
        if self.version != CONFIG_VERSION {
            return Err(AppError::config(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        self.preprocess.validate()?;
        self.extractor().validate()?;
        self.rfe.validate()?;
        self.voting.validate()?;
        self.rerank.validate()?;
        for s in &self.strategies {
            s.validate()?;
        }
        self.synth.validate()?;
        Ok(())
    }

    pub fn extractor(&self) -> FeatureExtractor {
        FeatureExtractor::new(self.features.clone(), self.bands.clone(), self.mode)
            .with_artifact_threshold(self.preprocess.artifact_threshold_v)
    }

    pub fn write(&self, path: &Path) -> AppResult<()> {
        crate::atomic::write_atomic(path, &jsonl::encode_json(self)?)
    }
}

/// Standard file locations.
pub struct Layout<'a>(pub &'a RunConfig);

impl Layout<'_> {
    pub fn recordings(&self) -> PathBuf {
        self.0.paths.data_dir.join("recordings")
    }
    pub fn sessions(&self) -> PathBuf {
        self.0.paths.data_dir.join("sessions")
    }
    pub fn labels(&self) -> PathBuf {
        self.0.paths.data_dir.join("labels")
    }
    pub fn segments(&self) -> PathBuf {
        self.0.paths.out_dir.join("segments")
    }
    pub fn features(&self) -> PathBuf {
        self.0.paths.out_dir.join("features.csv")
    }
    pub fn descriptor(&self) -> PathBuf {
        self.0.paths.out_dir.join("features.json")
    }
    pub fn model(&self) -> PathBuf {
        self.0.paths.out_dir.join("model.json")
    }
    pub fn train_report(&self) -> PathBuf {
        self.0.paths.out_dir.join("train_report.json")
    }
    pub fn predictions(&self) -> PathBuf {
        self.0.paths.out_dir.join("predictions.jsonl")
    }
    pub fn traces(&self) -> PathBuf {
        self.0.paths.out_dir.join("traces.jsonl")
    }
    pub fn simulation(&self) -> PathBuf {
        self.0.paths.out_dir.join("simulation.json")
    }
    pub fn report_json(&self) -> PathBuf {
        self.0.paths.out_dir.join("report.json")
    }
    pub fn report_txt(&self) -> PathBuf {
        self.0.paths.out_dir.join("report.txt")
    }
}
