//! Training and prediction.

use std::collections::BTreeMap;

use anyhow::{anyhow, bail, Context, Result};
use ndarray::Array1;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use stancekit::eval::{relevant_macro_f1, write_predictions, PredictionRecord};
use stancekit::features::{build_dep_rank_table, count_tags, FeatureSpace, FeatureSpec, DEFAULT_DEP_SLOTS};
use stancekit::neural::checkpoint::{config_hash, to_bytes};
use stancekit::neural::train::accuracy;
use stancekit::neural::{load_model, majority_vote, train as fit, train_folds, Dataset, FusionModel, ModelConfig, TrainConfig};
use stancekit::{Premise, Stance, Task, TweetRecord};

use crate::config::{CorpusPaths, ExperimentConfig};
use crate::io::{json_bytes, load_records};
use crate::output::Outputs;
use crate::{PredictArgs, Preset, TrainArgs};

fn experiment_from_args(a: &TrainArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &a.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    match a.preset {
        Some(Preset::Desk) => cfg.train = TrainConfig::desk(),
        Some(Preset::Paper) => cfg.train = TrainConfig::paper(),
        None => {}
    }
    if a.train.is_some() || a.validation.is_some() {
        let old = std::mem::take(&mut cfg.corpus);
        cfg.corpus = CorpusPaths {
            train: a.train.clone().or(old.train),
            validation: a.validation.clone().or(old.validation),
            test: old.test,
        };
    }
    if let Some(t) = a.task {
        cfg.task = t;
    }
    if let Some(m) = a.mode {
        cfg.mode = m;
    }
    cfg.syntax |= a.syntax;
    if let Some(e) = a.epochs {
        cfg.train.epochs = e;
    }
    if let Some(k) = a.folds {
        cfg.folds = k;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(d) = &a.out_dir {
        cfg.output_dir = Some(d.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn feature_space(cfg: &ExperimentConfig, train: &[TweetRecord]) -> Result<FeatureSpace> {
    let mut space = FeatureSpace::new(cfg.mode, cfg.encoder.clone())?;
    if cfg.syntax {
        let counts = count_tags(train.iter().filter_map(|r| r.dep_tags.as_deref()));
        let table = build_dep_rank_table(&counts, DEFAULT_DEP_SLOTS).context("syntax features need dep_tags on training records")?;
        space = space.with_syntax(table);
    }
    Ok(space)
}

#[derive(Serialize)]
struct Evaluation {
    accuracy: f64,
    f1_rel: f64,
    n: usize,
}

fn evaluate_models(models: &[FusionModel], data: &Dataset) -> Result<Evaluation> {
    let preds = (0..data.len())
        .map(|i| vote(models, data.row(i)))
        .collect::<Result<Vec<usize>>>()?;
    let correct = preds.iter().zip(&data.labels).filter(|(p, g)| p == g).count();
    let task = models[0].config.task;
    Ok(Evaluation {
        accuracy: correct as f64 / data.len() as f64,
        f1_rel: relevant_macro_f1(&data.labels, &preds, task)?,
        n: data.len(),
    })
}

fn vote(models: &[FusionModel], input: ndarray::ArrayView1<f64>) -> Result<usize> {
    if models.len() == 1 {
        return Ok(models[0].predict(input)?);
    }
    let mut votes = Vec::with_capacity(models.len());
    let mut sum: Option<Array1<f64>> = None;
    for m in models {
        let p = m.predict_proba(input)?;
        votes.push(argmax(&p));
        sum = Some(match sum {
            Some(s) => s + &p,
            None => p,
        });
    }
    let mean = sum.expect("at least one model") / models.len() as f64;
    Ok(majority_vote(&votes, mean.view()))
}

fn argmax(p: &Array1<f64>) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

#[derive(Serialize)]
struct TrainSummary<'a> {
    seed: u64,
    task: Task,
    mode: &'a str,
    syntax: bool,
    folds: usize,
    n_train: usize,
    input_dim: usize,
    config_hash: String,
    checkpoints: Vec<String>,
    final_train_accuracy: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    validation: Option<Evaluation>,
    experiment: &'a ExperimentConfig,
}

pub fn train(a: TrainArgs) -> Result<()> {
    let cfg = experiment_from_args(&a)?;
    let Some(out_dir) = cfg.output_dir.clone() else { bail!("no output directory: pass --out-dir or set output_dir") };
    let train_path = cfg.corpus.train.clone().expect("validated");
    let records = load_records(&train_path, false)?;
    let space = feature_space(&cfg, &records)?;
    let data = Dataset::from_records(&records, &space, cfg.task)?;
    if data.is_empty() {
        bail!("{} has no records labeled for {}", train_path.display(), cfg.task);
    }
    let model_config = ModelConfig {
        input_dim: space.input_dim(),
        view_dim: cfg.model.view_dim,
        hidden_dim: cfg.model.hidden_dim,
        task: cfg.task,
        dropout: cfg.model.dropout,
    };
    let tcfg = cfg.train_config();

    let (models, histories) = if cfg.folds == 1 {
        let model = FusionModel::new(model_config.clone(), tcfg.init_seed())?;
        let outcome = fit(model, &data, &tcfg)?;
        (vec![outcome.model], vec![outcome.history])
    } else {
        let ens = train_folds(&model_config, &data, cfg.folds, &tcfg)?;
        (ens.models, ens.histories)
    };

    let mut out = Outputs::new("train", Some(&out_dir))?;
    out.set_seed(cfg.seed);
    out.input(&train_path)?;
    let mut meta: BTreeMap<String, Value> = BTreeMap::new();
    meta.insert("features".into(), serde_json::to_value(space.spec())?);
    meta.insert("seed".into(), cfg.seed.into());
    meta.insert("train_config".into(), serde_json::to_value(&tcfg)?);
    meta.insert("folds".into(), cfg.folds.into());

    let mut checkpoints = Vec::new();
    for (i, (model, history)) in models.iter().zip(&histories).enumerate() {
        let (ckpt, hist) = if cfg.folds == 1 {
            ("model.ckpt".to_string(), "history.jsonl".to_string())
        } else {
            (format!("model-fold{i}.ckpt"), format!("history-fold{i}.jsonl"))
        };
        let mut m = meta.clone();
        if cfg.folds > 1 {
            m.insert("fold".into(), i.into());
        }
        out.write(&ckpt, &to_bytes(model, &m))?;
        let mut h = Vec::new();
        for rec in history {
            serde_json::to_writer(&mut h, rec)?;
            h.push(b'\n');
        }
        out.write(&hist, &h)?;
        checkpoints.push(ckpt);
    }

    let validation = match &cfg.corpus.validation {
        Some(p) => {
            out.input(p)?;
            let val = Dataset::from_records(&load_records(p, false)?, &space, cfg.task)?;
            (!val.is_empty()).then(|| evaluate_models(&models, &val)).transpose()?
        }
        None => None,
    };
    let final_train_accuracy = models.iter().map(|m| accuracy(m, &data)).collect::<Result<Vec<f64>, _>>()?;
    let summary = TrainSummary {
        seed: cfg.seed,
        task: cfg.task,
        mode: mode_name(&space),
        syntax: cfg.syntax,
        folds: cfg.folds,
        n_train: data.len(),
        input_dim: space.input_dim(),
        config_hash: config_hash(&model_config),
        checkpoints,
        final_train_accuracy,
        validation,
        experiment: &cfg,
    };
    out.write("train_summary.json", &json_bytes(&summary)?)?;
    out.finish()?;

    println!(
        "trained {} model(s) for {} on {} records; train accuracy {}",
        models.len(),
        cfg.task,
        data.len(),
        summary.final_train_accuracy.iter().map(|a| format!("{a:.3}")).collect::<Vec<_>>().join(" ")
    );
    if let Some(v) = &summary.validation {
        println!("validation accuracy {:.3}, relevant macro-F1 {:.3} ({} records)", v.accuracy, v.f1_rel, v.n);
    }
    Ok(())
}

fn mode_name(space: &FeatureSpace) -> &'static str {
    match space.mode {
        stancekit::features::InputMode::TweetOnly => "tweet_only",
        stancekit::features::InputMode::TweetPlusClaim => "tweet_plus_claim",
    }
}

struct Loaded {
    model: FusionModel,
    space: FeatureSpace,
}

#[derive(Deserialize)]
struct FeatureMeta {
    features: FeatureSpec,
}

fn load(path: &std::path::Path) -> Result<Loaded> {
    let ckpt = load_model(path).with_context(|| format!("loading {}", path.display()))?;
    let meta: FeatureMeta = serde_json::to_value(&ckpt.metadata)
        .and_then(serde_json::from_value)
        .map_err(|e| anyhow!("{}: checkpoint metadata lacks a feature spec ({e})", path.display()))?;
    let space = FeatureSpace::from_spec(&meta.features)?;
    if space.input_dim() != ckpt.model.config.input_dim {
        bail!("{}: feature width {} does not match model input {}", path.display(), space.input_dim(), ckpt.model.config.input_dim);
    }
    Ok(Loaded { model: ckpt.model, space })
}

pub fn predict(a: PredictArgs) -> Result<()> {
    let records = load_records(&a.input, false)?;
    let mut by_task: BTreeMap<Task, Vec<Loaded>> = BTreeMap::new();
    let mut out = Outputs::new("predict", Some(&a.out_dir))?;
    out.input(&a.input)?;
    for p in &a.models {
        out.input(p)?;
        let l = load(p)?;
        by_task.entry(l.model.config.task).or_default().push(l);
    }
    let mut preds: Vec<PredictionRecord> =
        records.iter().map(|r| PredictionRecord { id: r.id.clone(), stance: None, premise: None }).collect();
    for (task, loaded) in &by_task {
        for (r, pred) in records.iter().zip(preds.iter_mut()) {
            let mut votes = Vec::with_capacity(loaded.len());
            let mut sum = Array1::<f64>::zeros(task.n_classes());
            for l in loaded {
                let x = Array1::from(l.space.compose(r)?);
                let p = l.model.predict_proba(x.view())?;
                votes.push(argmax(&p));
                sum += &p;
            }
            let label = majority_vote(&votes, (sum / loaded.len() as f64).view());
            match task {
                Task::Stance => pred.stance = Stance::from_index(label),
                Task::Premise => pred.premise = Premise::from_int(label as u64),
            }
        }
    }
    let mut bytes = Vec::new();
    write_predictions(&mut bytes, &preds)?;
    out.write("predictions.jsonl", &bytes)?;
    out.finish()?;
    let tasks: Vec<&str> = by_task.keys().map(|t| t.as_str()).collect();
    println!("predicted {} for {} records", tasks.join(" and "), preds.len());
    Ok(())
}
