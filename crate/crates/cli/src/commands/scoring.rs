//! Evaluation, baselines, reports and emotion tables.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::BufReader;

use anyhow::{anyhow, Context, Result};

use stancekit::chart::BarChart;
use stancekit::emotion::{emotion_distribution, read_emotions};
use stancekit::eval::{
    emit_report, join_predictions, BaselineDistribution, random_baseline, read_predictions, score_by_claim, ExperimentResults, ReportFormat, ResultEntry,
};
use stancekit::fixture::{expected_split, SPLIT_NAMES};
use stancekit::corpus::SplitStats;
use stancekit::features::InputMode;
use stancekit::Task;

use crate::io::{json_bytes, load_records};
use crate::output::Outputs;
use crate::{BaselineArgs, EmotionsArgs, EvaluateArgs, ReportArgs};

pub fn evaluate(a: EvaluateArgs) -> Result<()> {
    let gold = load_records(&a.gold, false)?;
    let file = File::open(&a.predictions).with_context(|| format!("opening {}", a.predictions.display()))?;
    let preds = read_predictions(BufReader::new(file))?;
    let mut results = ExperimentResults::default();
    for task in [Task::Stance, Task::Premise] {
        if preds.iter().all(|p| p.label(task).is_none()) {
            continue;
        }
        let rows = join_predictions(&gold, &preds, task)?;
        let report = score_by_claim(task, rows.iter().map(|r| (r.claim.as_str(), r.gold, r.pred)))?;
        println!("{} relevant macro-F1 {:.4} over {} claims", task, report.f1, report.n_claims);
        for c in &report.claims {
            println!("  {:<22} {:.4} (n={})", c.claim, c.f1_rel, c.n);
        }
        results.entries.push(ResultEntry { model: a.model_name.clone(), mode: a.mode, report });
    }
    if results.entries.is_empty() {
        return Err(anyhow!("{} carries no stance or premise predictions", a.predictions.display()));
    }
    let mut out = Outputs::new("evaluate", Some(&a.out_dir))?;
    out.input(&a.gold)?;
    out.input(&a.predictions)?;
    out.write("evaluation.json", &json_bytes(&results)?)?;
    out.finish()?;
    Ok(())
}

pub fn baseline(a: BaselineArgs) -> Result<()> {
    let stats = match (&a.stats, &a.split) {
        (Some(p), _) => SplitStats::load(p).with_context(|| format!("reading {}", p.display()))?,
        (None, name) => {
            let name = name.as_deref().unwrap_or("test");
            expected_split(name).ok_or_else(|| anyhow!("unknown split '{name}' (expected one of {})", SPLIT_NAMES.join(", ")))?
        }
    };
    let result = random_baseline(&stats, a.task, a.distribution, a.trials, a.seed)?;
    println!(
        "{} {} baseline: plug-in {:.4}, Monte Carlo {:.4} over {} trials (seed {})",
        result.task,
        match result.distribution {
            BaselineDistribution::Uniform3 => "uniform3",
            BaselineDistribution::Uniform2 => "uniform2",
        }, result.plug_in, result.monte_carlo_mean, result.trials, result.seed
    );
    for (claim, f) in &result.per_claim_plug_in {
        println!("  {claim:<22} {f:.4}");
    }
    if let Some(dir) = &a.out_dir {
        let mut out = Outputs::new("baseline", Some(dir))?;
        out.set_seed(a.seed);
        if let Some(p) = &a.stats {
            out.input(p)?;
        }
        out.write("baseline.json", &json_bytes(&result)?)?;
        out.finish()?;
    }
    Ok(())
}

const CHART_COLUMNS: [(InputMode, Task); 4] = [
    (InputMode::TweetOnly, Task::Stance),
    (InputMode::TweetOnly, Task::Premise),
    (InputMode::TweetPlusClaim, Task::Stance),
    (InputMode::TweetPlusClaim, Task::Premise),
];

/// Grouped bars for one claim: a group per (input, task) column, a bar per model.
fn claim_chart(results: &ExperimentResults, claim: &str) -> BarChart {
    let columns: Vec<(InputMode, Task)> = CHART_COLUMNS
        .into_iter()
        .filter(|&(mode, task)| results.entries.iter().any(|e| e.mode == mode && e.report.task == task))
        .collect();
    let categories = columns.iter().map(|(m, t)| format!("{} / {}", m.label(), t.as_str())).collect();
    let mut chart = BarChart::new(format!("Relevant macro-F1: {claim}"), "F1", categories);
    for model in results.models() {
        let values = columns
            .iter()
            .map(|&(mode, task)| {
                results
                    .entries
                    .iter()
                    .rev()
                    .find(|e| e.model == model && e.mode == mode && e.report.task == task)
                    .and_then(|e| e.report.claims.iter().find(|c| c.claim == claim))
                    .map_or(0.0, |c| c.f1_rel)
            })
            .collect();
        chart.push_series(model, values);
    }
    chart
}

pub fn report(a: ReportArgs) -> Result<()> {
    let mut out = Outputs::new("report", Some(&a.out_dir))?;
    let mut merged = ExperimentResults::default();
    for p in &a.results {
        out.input(p)?;
        let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        let r = ExperimentResults::from_json(&text).with_context(|| format!("parsing {}", p.display()))?;
        merged.entries.extend(r.entries);
    }
    if merged.entries.is_empty() {
        return Err(anyhow!("no result entries to report"));
    }
    out.write("report.md", emit_report(&merged, ReportFormat::Markdown)?.as_bytes())?;
    out.write("report.json", emit_report(&merged, ReportFormat::Json)?.as_bytes())?;
    out.write("report.csv", emit_report(&merged, ReportFormat::Csv)?.as_bytes())?;
    let claims: BTreeSet<&str> =
        merged.entries.iter().flat_map(|e| e.report.claims.iter().map(|c| c.claim.as_str())).collect();
    for claim in &claims {
        let chart = claim_chart(&merged, claim);
        out.write(format!("charts/{claim}.svg"), chart.grouped_svg().as_bytes())?;
        out.write(format!("charts/{claim}.csv"), chart.to_csv().as_bytes())?;
    }
    out.finish()?;
    print!("{}", emit_report(&merged, ReportFormat::Markdown)?);
    println!("wrote {} per-claim charts to {}", claims.len(), a.out_dir.join("charts").display());
    Ok(())
}

pub fn emotions(a: EmotionsArgs) -> Result<()> {
    let corpus = load_records(&a.corpus, false)?;
    let file = File::open(&a.emotions).with_context(|| format!("opening {}", a.emotions.display()))?;
    let emotions = read_emotions(BufReader::new(file))?;
    let dist = emotion_distribution(&corpus, &emotions)?;
    let chart = dist.chart();
    let mut out = Outputs::new("emotions", Some(&a.out_dir))?;
    out.input(&a.corpus)?;
    out.input(&a.emotions)?;
    out.write("emotions.md", dist.to_markdown().as_bytes())?;
    out.write("emotions.json", &json_bytes(&dist)?)?;
    out.write("emotions.svg", chart.grouped_svg().as_bytes())?;
    out.write("emotions.csv", chart.to_csv().as_bytes())?;
    out.finish()?;
    print!("{}", dist.to_markdown());
    Ok(())
}
