use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{EvalError, Result};
use crate::corpus::{Premise, Stance, Task, TweetRecord};

/// One line of a prediction file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stance: Option<Stance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub premise: Option<Premise>,
}

impl PredictionRecord {
    pub fn label(&self, task: Task) -> Option<usize> {
        match task {
            Task::Stance => self.stance.map(Stance::index),
            Task::Premise => self.premise.map(Premise::index),
        }
    }
}

pub fn read_predictions<R: BufRead>(reader: R) -> Result<Vec<PredictionRecord>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| EvalError::Parse { line: i + 1, message: e.to_string() })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_predictions<W: Write>(mut w: W, preds: &[PredictionRecord]) -> std::io::Result<()> {
    for p in preds {
        serde_json::to_writer(&mut w, p)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// A gold record joined with its prediction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScoredRow {
    pub id: String,
    pub claim: String,
    pub gold: usize,
    pub pred: usize,
}

/// Joins predictions to gold on id. Every prediction must name a gold record,
/// and every gold record labeled for `task` must have a prediction for it.
pub fn join_predictions(gold: &[TweetRecord], preds: &[PredictionRecord], task: Task) -> Result<Vec<ScoredRow>> {
    let mut by_id: HashMap<&str, &PredictionRecord> = HashMap::with_capacity(preds.len());
    for p in preds {
        if by_id.insert(p.id.as_str(), p).is_some() {
            return Err(EvalError::DuplicatePrediction(p.id.clone()));
        }
    }
    let gold_ids: BTreeMap<&str, &TweetRecord> = gold.iter().map(|r| (r.id.as_str(), r)).collect();
    if let Some(p) = preds.iter().find(|p| !gold_ids.contains_key(p.id.as_str())) {
        return Err(EvalError::UnmatchedId(p.id.clone()));
    }
    let mut rows = Vec::new();
    for r in gold {
        let Some(g) = task.label_of(r) else { continue };
        let pred = by_id
            .get(r.id.as_str())
            .and_then(|p| p.label(task))
            .ok_or_else(|| EvalError::MissingPrediction(r.id.clone()))?;
        rows.push(ScoredRow { id: r.id.clone(), claim: r.claim.name().to_string(), gold: g, pred });
    }
    if rows.is_empty() {
        return Err(EvalError::Empty);
    }
    Ok(rows)
}
