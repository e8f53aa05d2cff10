use ndarray::{Array1, ArrayView1, ArrayView2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{argmax, FusionModel, ModelConfig};
use super::train::{train, Dataset, EpochRecord, TrainConfig};
use super::NeuralError;
use crate::hashing::derive_seed;

const FOLD_STREAM: u64 = 0x464f;

/// Seeded fold id for each of `n` records; fold sizes differ by at most one.
pub fn assign_folds(n: usize, k: usize, seed: u64) -> Result<Vec<usize>, NeuralError> {
    if k < 2 {
        return Err(NeuralError::InvalidConfig(format!("k must be at least 2, got {k}")));
    }
    if n < k {
        return Err(NeuralError::InvalidConfig(format!("{n} records cannot fill {k} folds")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(seed, FOLD_STREAM)));
    let mut folds = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        folds[i] = pos % k;
    }
    Ok(folds)
}

/// Most frequent vote; ties go to the highest mean probability, then the lowest class.
pub fn majority_vote(votes: &[usize], mean_proba: ArrayView1<f64>) -> usize {
    let mut counts = vec![0usize; mean_proba.len()];
    for &v in votes {
        counts[v] += 1;
    }
    let mut best = 0;
    for c in 1..counts.len() {
        let better = counts[c] > counts[best] || (counts[c] == counts[best] && mean_proba[c] > mean_proba[best]);
        if better {
            best = c;
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsemblePrediction {
    pub label: usize,
    pub votes: Vec<usize>,
    pub mean_proba: Vec<f64>,
}

/// One model per held-out fold.
#[derive(Clone, Debug, PartialEq)]
pub struct FoldEnsemble {
    pub models: Vec<FusionModel>,
    pub histories: Vec<Vec<EpochRecord>>,
    pub folds: Vec<usize>,
}

impl FoldEnsemble {
    pub fn predict(&self, input: ArrayView1<f64>) -> Result<EnsemblePrediction, NeuralError> {
        let mut votes = Vec::with_capacity(self.models.len());
        let mut sum: Option<Array1<f64>> = None;
        for m in &self.models {
            let p = m.predict_proba(input)?;
            votes.push(argmax(p.view()));
            sum = Some(match sum {
                Some(s) => s + &p,
                None => p,
            });
        }
        let mean = sum.expect("ensemble has models") / self.models.len() as f64;
        Ok(EnsemblePrediction { label: majority_vote(&votes, mean.view()), votes, mean_proba: mean.to_vec() })
    }

    pub fn predict_all(&self, inputs: ArrayView2<f64>) -> Result<Vec<EnsemblePrediction>, NeuralError> {
        inputs.outer_iter().map(|row| self.predict(row)).collect()
    }
}

/// Trains `k` fold-models, each on the other `k - 1` folds. Folds train in
/// parallel; results come back in fold order.
pub fn train_folds(model_config: &ModelConfig, data: &Dataset, k: usize, cfg: &TrainConfig) -> Result<FoldEnsemble, NeuralError> {
    cfg.validate()?;
    model_config.validate()?;
    let folds = assign_folds(data.len(), k, cfg.seed)?;
    let results: Vec<Result<_, NeuralError>> = (0..k)
        .into_par_iter()
        .map(|fold| {
            let idx: Vec<usize> = (0..data.len()).filter(|&i| folds[i] != fold).collect();
            let fold_cfg = TrainConfig { seed: derive_seed(cfg.seed, fold as u64), ..cfg.clone() };
            let model = FusionModel::new(model_config.clone(), fold_cfg.init_seed())?;
            let out = train(model, &data.subset(&idx), &fold_cfg)?;
            Ok((out.model, out.history))
        })
        .collect();
    let mut models = Vec::with_capacity(k);
    let mut histories = Vec::with_capacity(k);
    for r in results {
        let (m, h) = r?;
        models.push(m);
        histories.push(h);
    }
    Ok(FoldEnsemble { models, histories, folds })
}

/// k-fold training on `data`, then majority-vote predictions for `targets`.
pub fn kfold_predict(
    model_config: &ModelConfig,
    data: &Dataset,
    k: usize,
    cfg: &TrainConfig,
    targets: ArrayView2<f64>,
) -> Result<Vec<EnsemblePrediction>, NeuralError> {
    train_folds(model_config, data, k, cfg)?.predict_all(targets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Task;
    use ndarray::{array, Array2};

    /// Independent counting: sort candidates by (count desc, prob desc, index asc).
    fn vote_oracle(votes: &[usize], proba: &[f64]) -> usize {
        let mut cands: Vec<(usize, usize, f64)> = (0..proba.len())
            .map(|c| (c, votes.iter().filter(|&&v| v == c).count(), proba[c]))
            .collect();
        cands.sort_by(|a, b| b.1.cmp(&a.1).then(b.2.partial_cmp(&a.2).unwrap()).then(a.0.cmp(&b.0)));
        cands[0].0
    }

    #[test]
    fn examples() {
        assert_eq!(majority_vote(&[0, 0, 0, 1, 1], array![0.4, 0.5, 0.1].view()), 0);
        assert_eq!(majority_vote(&[0, 1], array![0.6, 0.4].view()), 0);
        assert_eq!(majority_vote(&[0, 1], array![0.4, 0.6].view()), 1);
        assert_eq!(majority_vote(&[1, 0], array![0.5, 0.5].view()), 0);
    }

    #[test]
    fn matches_enumeration_over_all_patterns() {
        let probas = [[0.2, 0.5, 0.3], [0.4, 0.4, 0.2], [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]];
        let mut checked = 0;
        for code in 0..243usize {
            let votes: Vec<usize> = (0..5).map(|i| (code / 3usize.pow(i)) % 3).collect();
            for p in &probas {
                assert_eq!(majority_vote(&votes, ndarray::aview1(p)), vote_oracle(&votes, p), "{votes:?} {p:?}");
                checked += 1;
            }
        }
        assert_eq!(checked, 243 * 3);
    }

    #[test]
    fn folds_are_balanced_and_seeded() {
        let f = assign_folds(23, 5, 9).unwrap();
        let mut sizes = [0; 5];
        f.iter().for_each(|&x| sizes[x] += 1);
        assert!(sizes.iter().all(|&s| s == 4 || s == 5));
        assert_eq!(f, assign_folds(23, 5, 9).unwrap());
        assert_ne!(f, assign_folds(23, 5, 10).unwrap());
        assert!(assign_folds(3, 5, 0).is_err());
        assert!(assign_folds(10, 1, 0).is_err());
    }

    #[test]
    fn ensemble_is_deterministic() {
        let inputs = Array2::from_shape_fn((30, 3), |(i, j)| ((i * 7 + j * 3) % 11) as f64 / 5.0 - 1.0);
        let labels = inputs.outer_iter().map(|r| usize::from(r[0] > 0.0)).collect();
        let data = Dataset::new(inputs.clone(), labels).unwrap();
        let mc = ModelConfig { input_dim: 3, view_dim: 4, hidden_dim: 4, task: Task::Premise, dropout: 0.1 };
        let cfg = TrainConfig { epochs: 3, batch_size: 8, ..TrainConfig::desk() };
        let a = kfold_predict(&mc, &data, 3, &cfg, inputs.view()).unwrap();
        let b = kfold_predict(&mc, &data, 3, &cfg, inputs.view()).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|p| p.votes.len() == 3));
    }
}
