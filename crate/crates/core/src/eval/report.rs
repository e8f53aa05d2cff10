use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{AggregateReport, Result};
use crate::corpus::Task;
use crate::features::InputMode;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(format!("unknown report format '{other}'")),
        }
    }
}

/// Score of one model on one task under one input mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultEntry {
    pub model: String,
    pub mode: InputMode,
    pub report: AggregateReport,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResults {
    pub entries: Vec<ResultEntry>,
}

const COLUMNS: [(InputMode, Task); 4] = [
    (InputMode::TweetOnly, Task::Stance),
    (InputMode::TweetOnly, Task::Premise),
    (InputMode::TweetPlusClaim, Task::Stance),
    (InputMode::TweetPlusClaim, Task::Premise),
];

impl ExperimentResults {
    pub fn from_json(text: &str) -> Result<ExperimentResults> {
        Ok(serde_json::from_str(text)?)
    }

    /// Model names in order of first appearance.
    pub fn models(&self) -> Vec<&str> {
        let mut seen: Vec<&str> = Vec::new();
        for e in &self.entries {
            if !seen.contains(&e.model.as_str()) {
                seen.push(&e.model);
            }
        }
        seen
    }

    pub fn score(&self, model: &str, mode: InputMode, task: Task) -> Option<f64> {
        self.entries
            .iter()
            .rev()
            .find(|e| e.model == model && e.mode == mode && e.report.task == task)
            .map(|e| e.report.f1)
    }
}

fn task_header(task: Task) -> &'static str {
    match task {
        Task::Stance => "F1 Stance",
        Task::Premise => "F1 Premise",
    }
}

fn markdown(results: &ExperimentResults) -> String {
    let mut out = String::new();
    let modes: Vec<&str> = COLUMNS.iter().map(|(m, _)| m.label()).collect();
    let tasks: Vec<&str> = COLUMNS.iter().map(|(_, t)| task_header(*t)).collect();
    writeln!(out, "| Model | {} |", modes.join(" | ")).unwrap();
    writeln!(out, "|---|{}", "---|".repeat(COLUMNS.len())).unwrap();
    writeln!(out, "|  | {} |", tasks.join(" | ")).unwrap();
    for model in results.models() {
        let cells: Vec<String> = COLUMNS
            .iter()
            .map(|&(mode, task)| results.score(model, mode, task).map_or("-".to_string(), |f| format!("{f:.3}")))
            .collect();
        writeln!(out, "| {model} | {} |", cells.join(" | ")).unwrap();
    }
    out
}

fn csv(results: &ExperimentResults) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["model", "mode", "task", "claim", "class", "precision", "recall", "f1", "support", "f1_rel", "aggregate_f1"])
        .map_err(std::io::Error::from)?;
    for e in &results.entries {
        for c in &e.report.claims {
            for k in &c.per_class {
                w.write_record([
                    e.model.as_str(),
                    e.mode.label(),
                    e.report.task.as_str(),
                    c.claim.as_str(),
                    k.class.as_str(),
                    &k.precision.to_string(),
                    &k.recall.to_string(),
                    &k.f1.to_string(),
                    &k.support.to_string(),
                    &c.f1_rel.to_string(),
                    &e.report.f1.to_string(),
                ])
                .map_err(std::io::Error::from)?;
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Renders `results`. Markdown holds the summary table; JSON and CSV carry
/// per-claim, per-class detail.
pub fn emit_report(results: &ExperimentResults, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => Ok(serde_json::to_string_pretty(results)? + "\n"),
        ReportFormat::Csv => csv(results),
        ReportFormat::Markdown => Ok(markdown(results)),
    }
}
