//! Experiment configuration read by `train --config`.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use stancekit::features::{EncoderConfig, InputMode};
use stancekit::neural::TrainConfig;
use stancekit::Task;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusPaths {
    pub train: Option<PathBuf>,
    pub validation: Option<PathBuf>,
    pub test: Option<PathBuf>,
}

/// Widths of the classifier; the input width comes from the feature space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelShape {
    pub view_dim: usize,
    pub hidden_dim: usize,
    pub dropout: f64,
}

impl Default for ModelShape {
    fn default() -> Self {
        ModelShape { view_dim: 64, hidden_dim: 32, dropout: 0.15 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub corpus: CorpusPaths,
    pub task: Task,
    pub mode: InputMode,
    pub syntax: bool,
    pub encoder: EncoderConfig,
    pub model: ModelShape,
    pub train: TrainConfig,
    /// 1 trains a single model; k >= 2 trains a k-fold ensemble.
    pub folds: usize,
    pub output_dir: Option<PathBuf>,
    /// Overrides `train.seed`.
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            corpus: CorpusPaths::default(),
            task: Task::Stance,
            mode: InputMode::TweetOnly,
            syntax: false,
            encoder: EncoderConfig::default(),
            model: ModelShape::default(),
            train: TrainConfig::desk(),
            folds: 1,
            output_dir: None,
            seed: 0,
        }
    }
}

fn rebase(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

impl ExperimentConfig {
    /// Reads a config file; relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: ExperimentConfig =
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        rebase(base, &mut cfg.corpus.train);
        rebase(base, &mut cfg.corpus.validation);
        rebase(base, &mut cfg.corpus.test);
        rebase(base, &mut cfg.output_dir);
        Ok(cfg)
    }

    /// Checks ranges and that every referenced corpus exists.
    pub fn validate(&self) -> Result<()> {
        if self.folds == 0 {
            bail!("folds must be at least 1");
        }
        let Some(train) = &self.corpus.train else { bail!("no training corpus given") };
        for p in [Some(train), self.corpus.validation.as_ref(), self.corpus.test.as_ref()].into_iter().flatten() {
            if !p.exists() {
                bail!("corpus file {} does not exist", p.display());
            }
        }
        self.encoder.validate()?;
        self.train.validate()?;
        Ok(())
    }

    /// The training config with the experiment seed applied.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig { seed: self.seed, ..self.train.clone() }
    }
}
