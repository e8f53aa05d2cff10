//! Confusion matrices and the claim-averaged relevant-macro-F1.

pub mod baseline;
pub mod predictions;
pub mod report;

pub use baseline::{random_baseline, BaselineDistribution, BaselineResult};
pub use predictions::{join_predictions, read_predictions, write_predictions, PredictionRecord, ScoredRow};
pub use report::{emit_report, ExperimentResults, ReportFormat, ResultEntry};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Task;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("gold has {gold} labels but predictions have {pred}")]
    LengthMismatch { gold: usize, pred: usize },
    #[error("nothing to score")]
    Empty,
    #[error("label {label} out of range for {n_classes} classes")]
    LabelOutOfRange { label: usize, n_classes: usize },
    #[error("prediction id '{0}' has no gold record")]
    UnmatchedId(String),
    #[error("gold record '{0}' has no prediction")]
    MissingPrediction(String),
    #[error("duplicate prediction id '{0}'")]
    DuplicatePrediction(String),
    #[error("prediction line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    InvalidBaseline(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, EvalError>;

/// Counts indexed `[gold][pred]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

/// One-vs-rest precision, recall and F1 of a single class.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl ConfusionMatrix {
    pub fn new(n_classes: usize) -> ConfusionMatrix {
        ConfusionMatrix { counts: vec![vec![0; n_classes]; n_classes] }
    }

    pub fn from_labels(gold: &[usize], pred: &[usize], n_classes: usize) -> Result<ConfusionMatrix> {
        if gold.len() != pred.len() {
            return Err(EvalError::LengthMismatch { gold: gold.len(), pred: pred.len() });
        }
        let mut m = ConfusionMatrix::new(n_classes);
        for (&g, &p) in gold.iter().zip(pred) {
            m.add(g, p)?;
        }
        Ok(m)
    }

    pub fn add(&mut self, gold: usize, pred: usize) -> Result<()> {
        let n_classes = self.n_classes();
        for label in [gold, pred] {
            if label >= n_classes {
                return Err(EvalError::LabelOutOfRange { label, n_classes });
            }
        }
        self.counts[gold][pred] += 1;
        Ok(())
    }

    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn get(&self, gold: usize, pred: usize) -> u64 {
        self.counts[gold][pred]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn gold_count(&self, class: usize) -> u64 {
        self.counts[class].iter().sum()
    }

    pub fn pred_count(&self, class: usize) -> u64 {
        self.counts.iter().map(|row| row[class]).sum()
    }

    /// P is 0 with no predictions of the class, R is 0 with no gold of it,
    /// and F1 is 0 whenever P + R is 0.
    pub fn prf(&self, class: usize) -> Prf {
        let tp = self.counts[class][class] as f64;
        let predicted = self.pred_count(class) as f64;
        let actual = self.gold_count(class) as f64;
        let precision = if predicted > 0.0 { tp / predicted } else { 0.0 };
        let recall = if actual > 0.0 { tp / actual } else { 0.0 };
        let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
        Prf { precision, recall, f1 }
    }

    /// Mean F1 over the task's relevant classes.
    pub fn relevant_macro_f1(&self, task: Task) -> f64 {
        let rel = task.relevant_classes();
        rel.iter().map(|&c| self.prf(c).f1).sum::<f64>() / rel.len() as f64
    }
}

pub fn per_class_prf(gold: &[usize], pred: &[usize], label: usize, n_classes: usize) -> Result<Prf> {
    Ok(ConfusionMatrix::from_labels(gold, pred, n_classes)?.prf(label))
}

pub fn relevant_macro_f1(gold: &[usize], pred: &[usize], task: Task) -> Result<f64> {
    if gold.is_empty() && pred.is_empty() {
        return Err(EvalError::Empty);
    }
    Ok(ConfusionMatrix::from_labels(gold, pred, task.n_classes())?.relevant_macro_f1(task))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassScore {
    pub class: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

/// Scores of one claim.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClaimScore {
    pub claim: String,
    pub n: u64,
    pub per_class: Vec<ClassScore>,
    pub f1_rel: f64,
}

impl ClaimScore {
    pub fn from_confusion(claim: impl Into<String>, task: Task, m: &ConfusionMatrix) -> ClaimScore {
        let per_class = (0..m.n_classes())
            .map(|c| {
                let prf = m.prf(c);
                ClassScore {
                    class: task.class_name(c),
                    precision: prf.precision,
                    recall: prf.recall,
                    f1: prf.f1,
                    support: m.gold_count(c),
                }
            })
            .collect();
        ClaimScore { claim: claim.into(), n: m.total(), per_class, f1_rel: m.relevant_macro_f1(task) }
    }
}

/// Per-claim detail and the unweighted mean over claims.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub task: Task,
    pub claims: Vec<ClaimScore>,
    pub f1: f64,
    pub n_claims: usize,
}

pub fn aggregate_over_claims(task: Task, claims: Vec<ClaimScore>) -> Result<AggregateReport> {
    if claims.is_empty() {
        return Err(EvalError::Empty);
    }
    let f1 = claims.iter().map(|c| c.f1_rel).sum::<f64>() / claims.len() as f64;
    Ok(AggregateReport { task, n_claims: claims.len(), claims, f1 })
}

/// Groups `(claim, gold, pred)` rows by claim (sorted by name) and aggregates.
pub fn score_by_claim<'a, I>(task: Task, rows: I) -> Result<AggregateReport>
where
    I: IntoIterator<Item = (&'a str, usize, usize)>,
{
    let mut by_claim: BTreeMap<&str, ConfusionMatrix> = BTreeMap::new();
    for (claim, gold, pred) in rows {
        by_claim
            .entry(claim)
            .or_insert_with(|| ConfusionMatrix::new(task.n_classes()))
            .add(gold, pred)?;
    }
    let claims = by_claim
        .into_iter()
        .map(|(claim, m)| ClaimScore::from_confusion(claim, task, &m))
        .collect();
    aggregate_over_claims(task, claims)
}
