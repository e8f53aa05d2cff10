use std::io::Write;

use ndarray::{Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::backward::backward;
use super::loss::Objective;
use super::model::{Dropout, FusionModel, Trace};
use super::optim::{adamw_step, AdamW, AdamWState};
use super::NeuralError;
use crate::corpus::{Task, TweetRecord};
use crate::features::{FeatureError, FeatureSpace};
use crate::hashing::derive_seed;

const SHUFFLE_STREAM: u64 = 0x5348;
const DROPOUT_STREAM: u64 = 0x4452;
const INIT_STREAM: u64 = 0x494e;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossSchedule {
    Ce,
    /// Contrastive-only epochs first, then cross-entropy for the rest.
    SupconPretrainThenCe,
    Weighted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub loss: LossSchedule,
    pub ce_weight: f64,
    pub contrastive_weight: f64,
    pub temperature: f64,
    /// Contrastive epochs for `SupconPretrainThenCe`; `None` means half of `epochs`.
    pub pretrain_epochs: Option<usize>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig::desk()
    }
}

impl TrainConfig {
    /// 50 epochs, batches of 16, AdamW at 1e-6 with 0.01 decay.
    pub fn paper() -> TrainConfig {
        TrainConfig {
            epochs: 50,
            batch_size: 16,
            learning_rate: 1e-6,
            weight_decay: 0.01,
            loss: LossSchedule::Ce,
            ce_weight: 0.7,
            contrastive_weight: 0.3,
            temperature: Objective::DEFAULT_TEMPERATURE,
            pretrain_epochs: None,
            seed: 0,
        }
    }

    /// Same schedule shape with a learning rate that makes progress on small encoders.
    pub fn desk() -> TrainConfig {
        TrainConfig { learning_rate: 1e-3, ..TrainConfig::paper() }
    }

    pub fn validate(&self) -> Result<(), NeuralError> {
        let bad = |m: String| Err(NeuralError::InvalidConfig(m));
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return bad(format!("weight_decay must be non-negative, got {}", self.weight_decay));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return bad(format!("temperature must be positive, got {}", self.temperature));
        }
        if self.loss == LossSchedule::Weighted {
            if self.ce_weight < 0.0 || self.contrastive_weight < 0.0 {
                return bad("loss weights must be non-negative".into());
            }
            if (self.ce_weight + self.contrastive_weight - 1.0).abs() > 1e-9 {
                return bad(format!(
                    "ce_weight + contrastive_weight must equal 1, got {}",
                    self.ce_weight + self.contrastive_weight
                ));
            }
        }
        if let Some(p) = self.pretrain_epochs {
            if p > self.epochs {
                return bad(format!("pretrain_epochs {p} exceeds epochs {}", self.epochs));
            }
        }
        Ok(())
    }

    /// Seed for parameter initialization, distinct from the shuffle and dropout streams.
    pub fn init_seed(&self) -> u64 {
        derive_seed(self.seed, INIT_STREAM)
    }

    /// Objective in force during `epoch` (1-based).
    pub fn objective_for_epoch(&self, epoch: usize) -> Objective {
        match self.loss {
            LossSchedule::Ce => Objective::cross_entropy(),
            LossSchedule::Weighted => Objective::weighted(self.ce_weight, self.contrastive_weight, self.temperature),
            LossSchedule::SupconPretrainThenCe => {
                let pretrain = self.pretrain_epochs.unwrap_or(self.epochs / 2);
                if epoch <= pretrain {
                    Objective::contrastive(self.temperature)
                } else {
                    Objective::cross_entropy()
                }
            }
        }
    }
}

/// Composed input vectors and their gold class indices.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub inputs: Array2<f64>,
    pub labels: Vec<usize>,
}

impl Dataset {
    pub fn new(inputs: Array2<f64>, labels: Vec<usize>) -> Result<Dataset, NeuralError> {
        if inputs.nrows() != labels.len() {
            return Err(NeuralError::Shape { what: "dataset labels", expected: inputs.nrows(), found: labels.len() });
        }
        Ok(Dataset { inputs, labels })
    }

    /// Composes every record that carries a gold label for `task`; unlabeled records are skipped.
    pub fn from_records(records: &[TweetRecord], space: &FeatureSpace, task: Task) -> Result<Dataset, FeatureError> {
        let dim = space.input_dim();
        let mut flat = Vec::new();
        let mut labels = Vec::new();
        for r in records {
            if let Some(y) = task.label_of(r) {
                flat.extend(space.compose(r)?);
                labels.push(y);
            }
        }
        let inputs = Array2::from_shape_vec((labels.len(), dim), flat).expect("composed widths agree");
        Ok(Dataset { inputs, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            inputs: self.inputs.select(Axis(0), indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.inputs.row(i)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean batch objective over the epoch.
    pub loss: f64,
    /// Eval-mode accuracy on the training data after the epoch.
    pub accuracy: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    pub model: FusionModel,
    pub history: Vec<EpochRecord>,
}

impl TrainOutcome {
    pub fn write_history<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for rec in &self.history {
            serde_json::to_writer(&mut w, rec)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

pub fn accuracy(model: &FusionModel, data: &Dataset) -> Result<f64, NeuralError> {
    if data.is_empty() {
        return Err(NeuralError::EmptyDataset);
    }
    let mut correct = 0usize;
    for (row, &y) in data.inputs.outer_iter().zip(&data.labels) {
        if model.predict(row)? == y {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}

/// Mini-batch AdamW over seeded shuffles. The same seed, data and config
/// always produce bit-identical parameters.
pub fn train(mut model: FusionModel, data: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome, NeuralError> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(NeuralError::EmptyDataset);
    }
    if data.input_dim() != model.config.input_dim {
        return Err(NeuralError::Shape { what: "dataset input", expected: model.config.input_dim, found: data.input_dim() });
    }
    let n_classes = model.config.n_classes();
    if let Some(&label) = data.labels.iter().find(|&&y| y >= n_classes) {
        return Err(NeuralError::LabelOutOfRange { label, n_classes });
    }

    let opt = AdamW::new(cfg.learning_rate, cfg.weight_decay);
    let mut state = AdamWState::new(&model.params);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, SHUFFLE_STREAM));
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, DROPOUT_STREAM));
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        let objective = cfg.objective_for_epoch(epoch);
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for (batch, idx) in order.chunks(cfg.batch_size).enumerate() {
            let inputs = data.inputs.select(Axis(0), idx);
            let labels: Vec<usize> = idx.iter().map(|&i| data.labels[i]).collect();
            let traces: Vec<Trace> = inputs
                .outer_iter()
                .map(|row| model.forward(row, Dropout::Sample(&mut dropout_rng)))
                .collect::<Result<_, _>>()?;
            let (loss, grads) = backward(&model, inputs.view(), &labels, &objective, &traces)?;
            if !loss.total.is_finite() {
                return Err(NeuralError::NonFiniteLoss { epoch, batch });
            }
            adamw_step(&mut model.params, &grads, &mut state, &opt);
            loss_sum += loss.total;
            batches += 1;
        }
        let rec = EpochRecord { epoch, loss: loss_sum / batches as f64, accuracy: accuracy(&model, data)? };
        log::debug!("epoch {epoch}: loss {:.6} accuracy {:.4}", rec.loss, rec.accuracy);
        history.push(rec);
    }
    Ok(TrainOutcome { model, history })
}

#[cfg(test)]
mod tests {
    use super::super::model::ModelConfig;
    use super::*;
    use rand::Rng;

    fn toy(n: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inputs = Array2::from_shape_fn((n, 4), |_| rng.gen_range(-1.0..1.0));
        let labels = inputs.outer_iter().map(|r| usize::from(r[0] + 0.5 * r[1] > 0.0)).collect();
        Dataset::new(inputs, labels).unwrap()
    }

    fn model(seed: u64) -> FusionModel {
        let cfg = ModelConfig { input_dim: 4, view_dim: 8, hidden_dim: 8, task: Task::Premise, dropout: 0.15 };
        FusionModel::new(cfg, seed).unwrap()
    }

    #[test]
    fn presets() {
        let p = TrainConfig::paper();
        assert_eq!((p.epochs, p.batch_size, p.learning_rate, p.weight_decay), (50, 16, 1e-6, 0.01));
        assert_eq!((p.ce_weight, p.contrastive_weight, p.temperature), (0.7, 0.3, 0.1));
        assert_eq!(TrainConfig::desk().learning_rate, 1e-3);
    }

    #[test]
    fn validation() {
        let mut c = TrainConfig { loss: LossSchedule::Weighted, ..TrainConfig::desk() };
        assert!(c.validate().is_ok());
        c.ce_weight = 0.8;
        assert!(c.validate().is_err());
        let c = TrainConfig { learning_rate: 0.0, ..TrainConfig::desk() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn schedule_switches_after_pretraining() {
        let c = TrainConfig { loss: LossSchedule::SupconPretrainThenCe, epochs: 10, pretrain_epochs: Some(3), ..TrainConfig::desk() };
        assert_eq!(c.objective_for_epoch(3).ce_weight, 0.0);
        assert_eq!(c.objective_for_epoch(4), Objective::cross_entropy());
    }

    #[test]
    fn history_has_one_entry_per_epoch_and_is_deterministic() {
        let data = toy(40, 1);
        let cfg = TrainConfig { epochs: 7, batch_size: 8, loss: LossSchedule::Weighted, ..TrainConfig::desk() };
        let a = train(model(3), &data, &cfg).unwrap();
        let b = train(model(3), &data, &cfg).unwrap();
        assert_eq!(a.history.len(), 7);
        assert_eq!(a.model.params, b.model.params);
        assert_eq!(a.history, b.history);
        let c = train(model(3), &data, &TrainConfig { seed: 1, ..cfg }).unwrap();
        assert_ne!(a.model.params, c.model.params);
    }

    #[test]
    fn loss_decreases_on_separable_toy() {
        let data = toy(80, 2);
        let cfg = TrainConfig { epochs: 40, batch_size: 8, ..TrainConfig::desk() };
        let out = train(model(0), &data, &cfg).unwrap();
        assert!(out.history.last().unwrap().loss < out.history[0].loss);
        assert!(out.history.last().unwrap().accuracy >= 0.9);
    }

    #[test]
    fn non_finite_input_aborts_with_location() {
        let mut data = toy(10, 3);
        data.inputs[[4, 0]] = f64::NAN;
        let cfg = TrainConfig { epochs: 2, batch_size: 4, ..TrainConfig::desk() };
        match train(model(0), &data, &cfg).unwrap_err() {
            NeuralError::NonFiniteLoss { epoch, batch } => {
                assert_eq!(epoch, 1);
                assert!(batch < 3);
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn out_of_range_label_is_rejected() {
        let mut data = toy(5, 4);
        data.labels[0] = 2;
        let err = train(model(0), &data, &TrainConfig::desk()).unwrap_err();
        assert_eq!(err, NeuralError::LabelOutOfRange { label: 2, n_classes: 2 });
    }
}
