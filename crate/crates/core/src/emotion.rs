//! Per-stance emotion distributions from externally produced emotion labels.

use std::collections::HashMap;
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chart::BarChart;
use crate::corpus::{Stance, TweetRecord};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emotion {
    Anger,
    Disgust,
    Fear,
    Joy,
    Sadness,
    Surprise,
    Neutral,
}

impl Emotion {
    pub const ALL: [Emotion; 7] = [
        Emotion::Anger,
        Emotion::Disgust,
        Emotion::Fear,
        Emotion::Joy,
        Emotion::Sadness,
        Emotion::Surprise,
        Emotion::Neutral,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Emotion::Anger => "anger",
            Emotion::Disgust => "disgust",
            Emotion::Fear => "fear",
            Emotion::Joy => "joy",
            Emotion::Sadness => "sadness",
            Emotion::Surprise => "surprise",
            Emotion::Neutral => "neutral",
        }
    }

    fn index(self) -> usize {
        Emotion::ALL.iter().position(|&e| e == self).expect("listed")
    }
}

impl fmt::Display for Emotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Emotion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Emotion::ALL
            .into_iter()
            .find(|e| e.as_str() == s.trim().to_lowercase())
            .ok_or_else(|| format!("unknown emotion '{s}'"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmotionRecord {
    #[serde(alias = "tweet_id")]
    pub id: String,
    pub emotion: Emotion,
}

#[derive(Debug, Error)]
pub enum EmotionError {
    #[error("emotion line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("emotion record '{0}' does not join to a stance-labeled corpus record")]
    Unjoinable(String),
    #[error("duplicate emotion record '{0}'")]
    Duplicate(String),
    #[error("no joinable records")]
    NoJoinableRecords,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn read_emotions<R: BufRead>(reader: R) -> Result<Vec<EmotionRecord>, EmotionError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| EmotionError::Parse { line: i + 1, message: e.to_string() })?);
    }
    Ok(out)
}

/// Emotion tallies and proportions for one stance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StanceEmotions {
    pub stance: Stance,
    pub total: usize,
    pub counts: Vec<(Emotion, usize)>,
    pub proportions: Vec<(Emotion, f64)>,
}

/// Rows in favor, against, neither order; stances with no records are omitted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmotionDistribution {
    pub rows: Vec<StanceEmotions>,
}

pub fn emotion_distribution(corpus: &[TweetRecord], emotions: &[EmotionRecord]) -> Result<EmotionDistribution, EmotionError> {
    if emotions.is_empty() {
        return Err(EmotionError::NoJoinableRecords);
    }
    let stance_of: HashMap<&str, Stance> = corpus.iter().filter_map(|r| r.stance.map(|s| (r.id.as_str(), s))).collect();
    let mut seen = std::collections::HashSet::new();
    let mut counts = [[0usize; 7]; 3];
    for e in emotions {
        if !seen.insert(e.id.as_str()) {
            return Err(EmotionError::Duplicate(e.id.clone()));
        }
        let stance = stance_of.get(e.id.as_str()).ok_or_else(|| EmotionError::Unjoinable(e.id.clone()))?;
        counts[stance.index()][e.emotion.index()] += 1;
    }
    let rows = Stance::ALL
        .into_iter()
        .filter_map(|s| {
            let row = counts[s.index()];
            let total: usize = row.iter().sum();
            (total > 0).then(|| StanceEmotions {
                stance: s,
                total,
                counts: Emotion::ALL.into_iter().zip(row).collect(),
                proportions: Emotion::ALL.into_iter().zip(row.iter().map(|&c| c as f64 / total as f64)).collect(),
            })
        })
        .collect();
    Ok(EmotionDistribution { rows })
}

impl EmotionDistribution {
    /// Markdown table, one row per stance, one column per emotion.
    pub fn to_markdown(&self) -> String {
        let mut out = String::from("| Stance |");
        for e in Emotion::ALL {
            out.push_str(&format!(" {e} |"));
        }
        out.push_str(" n |\n|---|");
        out.push_str(&"---|".repeat(Emotion::ALL.len() + 1));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!("| {} |", r.stance.as_str()));
            for (_, p) in &r.proportions {
                out.push_str(&format!(" {p:.3} |"));
            }
            out.push_str(&format!(" {} |\n", r.total));
        }
        out
    }

    /// Stacked bars, one per stance, one segment per emotion.
    pub fn chart(&self) -> BarChart {
        let mut c = BarChart::new(
            "Emotions per stance",
            "share of tweets",
            self.rows.iter().map(|r| r.stance.as_str().to_string()).collect(),
        );
        for (k, e) in Emotion::ALL.iter().enumerate() {
            c.push_series(e.as_str(), self.rows.iter().map(|r| r.proportions[k].1).collect());
        }
        c
    }
}
