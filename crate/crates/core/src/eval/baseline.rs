use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ConfusionMatrix, EvalError, Result};
use crate::corpus::{SplitStats, Task};
use crate::hashing::derive_seed;

/// Label distribution of the random predictor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineDistribution {
    /// Uniform over all three stance classes.
    Uniform3,
    /// Uniform over the two relevant classes.
    Uniform2,
}

impl FromStr for BaselineDistribution {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "uniform3" => Ok(BaselineDistribution::Uniform3),
            "uniform2" => Ok(BaselineDistribution::Uniform2),
            other => Err(format!("unknown baseline distribution '{other}' (expected uniform3 or uniform2)")),
        }
    }
}

impl BaselineDistribution {
    /// Classes the predictor draws from for `task`.
    pub fn support(self, task: Task) -> Result<Vec<usize>> {
        match (self, task) {
            (BaselineDistribution::Uniform3, Task::Stance) => Ok(vec![0, 1, 2]),
            (BaselineDistribution::Uniform2, _) => Ok(task.relevant_classes().to_vec()),
            (BaselineDistribution::Uniform3, Task::Premise) => {
                Err(EvalError::InvalidBaseline("uniform3 is undefined for the two-class premise task".into()))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineResult {
    pub task: Task,
    pub distribution: BaselineDistribution,
    pub trials: usize,
    pub seed: u64,
    pub monte_carlo_mean: f64,
    pub plug_in: f64,
    /// `(claim, plug-in F1_rel)` in claim order.
    pub per_claim_plug_in: Vec<(String, f64)>,
}

/// Plug-in F1 of a class with prevalence `p` under a predictor that emits it with probability `q`.
pub fn plug_in_f1(p: f64, q: f64) -> f64 {
    if p + q > 0.0 {
        2.0 * p * q / (p + q)
    } else {
        0.0
    }
}

/// Expected-value and simulated scores of a uniform random predictor on a split
/// described only by its label counts.
pub fn random_baseline(
    stats: &SplitStats,
    task: Task,
    distribution: BaselineDistribution,
    trials: usize,
    seed: u64,
) -> Result<BaselineResult> {
    if trials == 0 {
        return Err(EvalError::InvalidBaseline("trials must be at least 1".into()));
    }
    let support = distribution.support(task)?;
    let k = task.n_classes();
    let q = 1.0 / support.len() as f64;
    let claims: Vec<(&String, Vec<usize>)> = stats
        .claims
        .iter()
        .map(|(name, c)| (name, (0..k).map(|class| c.class_count(task, class)).collect::<Vec<_>>()))
        .filter(|(_, counts)| counts.iter().sum::<usize>() > 0)
        .collect();
    if claims.is_empty() {
        return Err(EvalError::Empty);
    }

    let per_claim_plug_in: Vec<(String, f64)> = claims
        .iter()
        .map(|(name, counts)| {
            let n = counts.iter().sum::<usize>() as f64;
            let rel = task.relevant_classes();
            let f = rel
                .iter()
                .map(|&r| {
                    let q_r = if support.contains(&r) { q } else { 0.0 };
                    plug_in_f1(counts[r] as f64 / n, q_r)
                })
                .sum::<f64>()
                / rel.len() as f64;
            (name.to_string(), f)
        })
        .collect();
    let plug_in = per_claim_plug_in.iter().map(|c| c.1).sum::<f64>() / claims.len() as f64;

    let scores: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, t as u64));
            let mut sum = 0.0;
            for (_, counts) in &claims {
                let mut m = ConfusionMatrix::new(k);
                for (gold, &n) in counts.iter().enumerate() {
                    for _ in 0..n {
                        let pred = support[rng.gen_range(0..support.len())];
                        m.add(gold, pred).expect("labels in range");
                    }
                }
                sum += m.relevant_macro_f1(task);
            }
            sum / claims.len() as f64
        })
        .collect();
    let monte_carlo_mean = scores.iter().sum::<f64>() / trials as f64;

    Ok(BaselineResult { task, distribution, trials, seed, monte_carlo_mean, plug_in, per_claim_plug_in })
}
