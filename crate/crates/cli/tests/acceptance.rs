//! Acceptance suite. One line per criterion goes to stderr (uncaptured), with
//! the tolerance used, the measured runtime and its limit. The test fails at
//! the end if any criterion failed.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stancekit::corpus::{load_corpus, summarize, write_jsonl, CorpusFormat, LoadOptions};
use stancekit::curation::{aggregate_ballot, weak_label, AggregationOutcome, AnnotationBallot, HashtagLexicon, Quorum};
use stancekit::eval::baseline::plug_in_f1;
use stancekit::eval::{random_baseline, score_by_claim, BaselineDistribution};
use stancekit::features::{EncoderConfig, FeatureSpace, InputMode};
use stancekit::fixture::{claim_dependent_corpus, expected_split, separable_dataset, SPLIT_NAMES};
use stancekit::neural::model::FusionGate;
use stancekit::neural::train::accuracy;
use stancekit::neural::{
    backward, batch_loss, fusion_combine, fusion_gate, majority_vote, train, Dataset, Dropout, FusionModel, ModelConfig, Objective,
    TrainConfig,
};
use stancekit::preprocess::{clean_text, filter_corpus, CleaningConfig};
use stancekit::{Premise, Stance, Task};

type Check = Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    tolerance: &'static str,
    limit: Option<Duration>,
    run: fn() -> Check,
}

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_stancekit"));
    c.env("RUST_LOG", "error");
    c
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("spawn stancekit")
}

fn text(o: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
}

fn core_dir(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core").join(rel)
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

// 1 -------------------------------------------------------------------------

fn dataset_integrity() -> Check {
    let cwd = tempfile::tempdir().map_err(|e| e.to_string())?;
    for name in SPLIT_NAMES {
        let corpus = core_dir(&format!("data/fixtures/{name}.jsonl"));
        let expect = core_dir(&format!("data/split_counts/{name}.json"));
        let o = run_in(cwd.path(), &["stats", "--in", corpus.to_str().unwrap(), "--expect", expect.to_str().unwrap(), "--strict"]);
        ensure!(o.status.code() == Some(0), "stats on {name} exited {:?}: {}", o.status.code(), text(&o));
    }
    let totals: Vec<usize> = SPLIT_NAMES.iter().map(|n| expected_split(n).unwrap().total).collect();
    ensure!(totals == [3556, 600, 2000, 2070], "split totals {totals:?}");

    let train = load_corpus(&core_dir("data/fixtures/train.jsonl"), CorpusFormat::Jsonl, LoadOptions { strict: true })
        .map_err(|e| e.to_string())?;
    let stats = summarize(&train.records).map_err(|e| e.to_string())?;
    let fm = &stats.claims["face_masks"];
    let got = (fm.stance(Stance::Favor), fm.stance(Stance::Against), fm.stance(Stance::Neither));
    ensure!(got == (652, 324, 343), "train face_masks stance counts {got:?}");
    let got = (fm.premise(Premise::Present), fm.premise(Premise::Absent));
    ensure!(got == (508, 811), "train face_masks premise counts {got:?}");
    let sc = &stats.claims["school_closures"];
    ensure!(sc.stance(Stance::Favor) == 526 && sc.premise(Premise::Present) == 535, "train school_closures counts");
    let sh = &stats.claims["stay_at_home_orders"];
    ensure!(sh.stance(Stance::Neither) == 686 && sh.premise(Premise::Absent) == 899, "train stay_at_home_orders counts");

    // a perturbed expectation must be rejected with exit code 2
    let mut wrong = expected_split("validation").unwrap();
    let first = wrong.claims.keys().next().unwrap().clone();
    wrong.claims.get_mut(&first).unwrap().favor += 1;
    let wrong_path = cwd.path().join("wrong.json");
    fs::write(&wrong_path, serde_json::to_string(&wrong).unwrap()).unwrap();
    let corpus = core_dir("data/fixtures/validation.jsonl");
    let o = run_in(cwd.path(), &["stats", "--in", corpus.to_str().unwrap(), "--expect", wrong_path.to_str().unwrap()]);
    ensure!(o.status.code() == Some(2), "mismatch exited {:?}", o.status.code());
    ensure!(text(&o).contains(&first), "mismatch report does not name {first}");
    Ok(format!("4 splits validated, totals {totals:?}, mismatch on {first} exits 2"))
}

// 2 -------------------------------------------------------------------------

/// Per-claim mean over relevant classes of per-class F1, then mean over claims,
/// written with plain loops and no shared code.
fn naive_score(rows: &[(String, usize, usize)]) -> f64 {
    let relevant = [0usize, 1];
    let mut claims: Vec<&str> = rows.iter().map(|r| r.0.as_str()).collect();
    claims.sort();
    claims.dedup();
    let mut sum = 0.0;
    for claim in &claims {
        let mut per_class = 0.0;
        for &c in &relevant {
            let (mut tp, mut pred_c, mut gold_c) = (0.0, 0.0, 0.0);
            for (cl, g, p) in rows {
                if cl != claim {
                    continue;
                }
                if *g == c && *p == c {
                    tp += 1.0;
                }
                if *p == c {
                    pred_c += 1.0;
                }
                if *g == c {
                    gold_c += 1.0;
                }
            }
            let precision = if pred_c > 0.0 { tp / pred_c } else { 0.0 };
            let recall = if gold_c > 0.0 { tp / gold_c } else { 0.0 };
            per_class += if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
        }
        sum += per_class / relevant.len() as f64;
    }
    sum / claims.len() as f64
}

fn metric_oracle() -> Check {
    let names = ["face_masks", "school_closures", "stay_at_home_orders"];
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for case in 0..1000 {
        let task = if rng.gen_bool(0.5) { Task::Stance } else { Task::Premise };
        let k = task.n_classes();
        let n_claims = rng.gen_range(1..=3);
        let n = rng.gen_range(1..=50);
        let rows: Vec<(String, usize, usize)> = (0..n)
            .map(|_| (names[rng.gen_range(0..n_claims)].to_string(), rng.gen_range(0..k), rng.gen_range(0..k)))
            .collect();
        let lib = score_by_claim(task, rows.iter().map(|(c, g, p)| (c.as_str(), *g, *p))).map_err(|e| e.to_string())?.f1;
        let oracle = naive_score(&rows);
        let diff = (lib - oracle).abs();
        worst = worst.max(diff);
        ensure!(diff <= 1e-9, "case {case}: library {lib} vs oracle {oracle}");
    }
    // favor, favor, against, neither scored against favor, against, against, neither
    let (f, a, n) = (Stance::Favor.index(), Stance::Against.index(), Stance::Neither.index());
    let gold = [f, f, a, n];
    let pred = [f, a, a, n];
    let hand = score_by_claim(Task::Stance, gold.iter().zip(&pred).map(|(&g, &p)| ("face_masks", g, p)))
        .map_err(|e| e.to_string())?
        .f1;
    ensure!((hand - 2.0 / 3.0).abs() <= 1e-15, "hand example scored {hand}");
    Ok(format!("1000 random cases, worst |diff| {worst:.1e}; hand example {hand:.6}"))
}

// 3 -------------------------------------------------------------------------

const REFERENCE_UNIFORM3: f64 = 0.268;

fn random_baseline_check() -> Check {
    let test = expected_split("test").unwrap();
    let r = random_baseline(&test, Task::Stance, BaselineDistribution::Uniform3, 1000, 0).map_err(|e| e.to_string())?;
    let gap = (r.monte_carlo_mean - r.plug_in).abs();
    ensure!(gap <= 0.01, "stance Monte Carlo {} vs plug-in {}", r.monte_carlo_mean, r.plug_in);

    // independent plug-in from raw counts
    let mut oracle = 0.0;
    for c in test.claims.values() {
        let n = c.stance_total() as f64;
        let f = |s: Stance| plug_in_f1(c.stance(s) as f64 / n, 1.0 / 3.0);
        oracle += (f(Stance::Favor) + f(Stance::Against)) / 2.0;
    }
    oracle /= test.claims.len() as f64;
    ensure!((oracle - r.plug_in).abs() <= 1e-12, "plug-in {} vs oracle {oracle}", r.plug_in);

    let p = random_baseline(&test, Task::Premise, BaselineDistribution::Uniform2, 1000, 0).map_err(|e| e.to_string())?;
    ensure!((p.monte_carlo_mean - p.plug_in).abs() <= 0.01, "premise Monte Carlo {} vs plug-in {}", p.monte_carlo_mean, p.plug_in);
    Ok(format!(
        "stance uniform3 plug-in {:.4}, Monte Carlo {:.4}; premise uniform2 plug-in {:.4}, Monte Carlo {:.4}; \
         stance gap to reference {REFERENCE_UNIFORM3} is {:+.4}",
        r.plug_in,
        r.monte_carlo_mean,
        p.plug_in,
        p.monte_carlo_mean,
        r.plug_in - REFERENCE_UNIFORM3
    ))
}

// 4 -------------------------------------------------------------------------

fn uniform_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Array1<f64> {
    Array1::from_shape_fn(n, |_| rng.gen_range(-scale..scale))
}

fn fusion_invariants() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut max_oracle_err = 0.0f64;
    for draw in 0..10_000 {
        let d = rng.gen_range(1..=8);
        // every tenth draw uses large weights to drive the sigmoid into saturation
        let scale = if draw % 10 == 0 { 50.0 } else { 2.0 };
        let s = uniform_vec(&mut rng, d, 1.0);
        let o = uniform_vec(&mut rng, d, 1.0);
        let gate = FusionGate {
            weight: Array2::from_shape_fn((d, 2 * d), |_| rng.gen_range(-scale..scale)),
            bias: uniform_vec(&mut rng, d, scale),
        };
        let alpha = fusion_gate(s.view(), o.view(), &gate).map_err(|e| e.to_string())?;
        for (i, &a) in alpha.iter().enumerate() {
            ensure!(a > 0.0 && a < 1.0, "draw {draw}: alpha[{i}] = {a}");
            if scale < 10.0 {
                let mut z = gate.bias[i];
                for j in 0..d {
                    z += gate.weight[[i, j]] * s[j] + gate.weight[[i, d + j]] * o[j];
                }
                max_oracle_err = max_oracle_err.max((a - 1.0 / (1.0 + (-z).exp())).abs());
            }
        }
        let dual = fusion_combine(s.view(), o.view(), alpha.view()).map_err(|e| e.to_string())?;
        for i in 0..d {
            let (lo, hi) = (s[i].min(o[i]), s[i].max(o[i]));
            ensure!(dual[i] >= lo && dual[i] <= hi, "draw {draw}: f_dual[{i}] = {} outside [{lo}, {hi}]", dual[i]);
        }
        let half = Array1::from_elem(d, 0.5);
        let mid = fusion_combine(s.view(), o.view(), half.view()).map_err(|e| e.to_string())?;
        for i in 0..d {
            ensure!(mid[i] == (s[i] + o[i]) / 2.0, "draw {draw}: alpha 0.5 gives {} not the midpoint", mid[i]);
        }
        let same = fusion_combine(s.view(), s.view(), alpha.view()).map_err(|e| e.to_string())?;
        ensure!(same == s, "draw {draw}: identical views not returned unchanged");
        let zero_gate = FusionGate { weight: Array2::zeros((d, 2 * d)), bias: Array1::zeros(d) };
        let a0 = fusion_gate(s.view(), o.view(), &zero_gate).map_err(|e| e.to_string())?;
        ensure!(a0.iter().all(|&a| a == 0.5), "draw {draw}: zero gate gave {a0}");
    }
    ensure!(max_oracle_err <= 1e-12, "gate differs from recomputation by {max_oracle_err}");
    Ok(format!("10000 draws, gate vs recomputation {max_oracle_err:.1e}"))
}

// 5 -------------------------------------------------------------------------

fn flat_grads(p: &stancekit::neural::Parameters) -> Vec<f64> {
    p.tensors().into_iter().flat_map(|(_, t)| t.iter().copied()).collect()
}

fn loss_at(model: &FusionModel, inputs: &Array2<f64>, labels: &[usize], obj: &Objective) -> Result<f64, String> {
    let traces = inputs
        .outer_iter()
        .map(|r| model.forward(r, Dropout::Off))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    Ok(batch_loss(&traces, labels, obj).map_err(|e| e.to_string())?.total)
}

fn gradient_checks() -> Check {
    const EPS: f64 = 1e-4;
    let cfg = ModelConfig { input_dim: 5, view_dim: 8, hidden_dim: 8, task: Task::Stance, dropout: 0.15 };
    let model = FusionModel::new(cfg, 13).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let inputs = Array2::from_shape_fn((6, 5), |_| rng.gen_range(-1.0..1.0));
    let labels = [0, 0, 1, 1, 2, 2];
    let objectives = [
        ("cross-entropy", Objective::cross_entropy()),
        ("contrastive tau 0.1", Objective::contrastive(0.1)),
        ("0.7/0.3 weighted", Objective::weighted(0.7, 0.3, 0.1)),
    ];
    let mut summary = Vec::new();
    for (name, obj) in &objectives {
        let traces = inputs
            .outer_iter()
            .map(|r| model.forward(r, Dropout::Off))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        let (_, grads) = backward(&model, inputs.view(), &labels, obj, &traces).map_err(|e| e.to_string())?;
        let analytic = flat_grads(&grads);
        let mut numeric = Vec::with_capacity(analytic.len());
        let n_tensors = model.params.tensors().len();
        for t in 0..n_tensors {
            let len = model.params.tensors()[t].1.len();
            for k in 0..len {
                let mut plus = model.clone();
                plus.params.tensors_mut()[t].1[k] += EPS;
                let mut minus = model.clone();
                minus.params.tensors_mut()[t].1[k] -= EPS;
                numeric.push((loss_at(&plus, &inputs, &labels, obj)? - loss_at(&minus, &inputs, &labels, obj)?) / (2.0 * EPS));
            }
        }
        let diff: f64 = analytic.iter().zip(&numeric).map(|(a, n)| (a - n).powi(2)).sum::<f64>().sqrt();
        let scale: f64 = (analytic.iter().map(|a| a * a).sum::<f64>() + numeric.iter().map(|n| n * n).sum::<f64>()).sqrt();
        let rel = diff / scale;
        ensure!(rel < 1e-4, "{name}: relative error {rel:.2e}");
        summary.push(format!("{name} {rel:.1e}"));
    }
    Ok(format!("{} parameters; {}", flat_grads(&model.params).len(), summary.join(", ")))
}

// 6 -------------------------------------------------------------------------

fn records_accuracy(model: &FusionModel, space: &FeatureSpace, records: &[stancekit::TweetRecord]) -> Result<f64, String> {
    let data = Dataset::from_records(records, space, Task::Stance).map_err(|e| e.to_string())?;
    accuracy(model, &data).map_err(|e| e.to_string())
}

fn learning_smoke() -> Check {
    let (data, _) = separable_dataset(200, 16, 0.1, 7);
    let cfg = TrainConfig { epochs: 200, seed: 7, ..TrainConfig::desk() };
    let fit = |cfg: &TrainConfig| -> Result<_, String> {
        let model = FusionModel::new(ModelConfig::desk(16, Task::Premise), cfg.init_seed()).map_err(|e| e.to_string())?;
        train(model, &data, cfg).map_err(|e| e.to_string())
    };
    let first = fit(&cfg)?;
    let reached = first.history.iter().find(|r| r.accuracy >= 0.95).map(|r| r.epoch);
    let final_acc = first.history.last().unwrap().accuracy;
    ensure!(reached.is_some() && final_acc >= 0.95, "separable corpus: final train accuracy {final_acc}");
    let second = fit(&cfg)?;
    ensure!(first.model == second.model, "same seed produced different parameters");
    let third = fit(&TrainConfig { seed: 8, ..cfg.clone() })?;
    ensure!(third.model != first.model, "different seeds produced identical parameters");

    let train_set = claim_dependent_corpus(200, 1);
    let held_out = claim_dependent_corpus(100, 2);
    let cd_cfg = TrainConfig { epochs: 30, seed: 3, ..TrainConfig::desk() };
    let mut accs = BTreeMap::new();
    for mode in [InputMode::TweetPlusClaim, InputMode::TweetOnly] {
        let space = FeatureSpace::new(mode, EncoderConfig::default()).map_err(|e| e.to_string())?;
        let data = Dataset::from_records(&train_set, &space, Task::Stance).map_err(|e| e.to_string())?;
        let model = FusionModel::new(ModelConfig::desk(space.input_dim(), Task::Stance), cd_cfg.init_seed()).map_err(|e| e.to_string())?;
        let out = train(model, &data, &cd_cfg).map_err(|e| e.to_string())?;
        accs.insert(mode.label(), records_accuracy(&out.model, &space, &held_out)?);
    }
    let with_claim = accs[InputMode::TweetPlusClaim.label()];
    let tweet_only = accs[InputMode::TweetOnly.label()];
    ensure!(with_claim >= 0.9, "tweet_plus_claim held-out accuracy {with_claim}");
    ensure!(tweet_only <= 0.55, "tweet_only held-out accuracy {tweet_only}");
    Ok(format!(
        "separable: 0.95 reached at epoch {}, final {final_acc:.3}, deterministic; claim-dependent held-out: \
         tweet_plus_claim {with_claim:.3}, tweet_only {tweet_only:.3}",
        reached.unwrap()
    ))
}

// 7 -------------------------------------------------------------------------

fn curation_oracles() -> Check {
    let quorum = Quorum::default();
    let mut kept = 0;
    for code in 0..7776u32 {
        let mut c = code;
        let mut stance = [Stance::Favor; 5];
        for v in stance.iter_mut() {
            *v = Stance::ALL[(c % 3) as usize];
            c /= 3;
        }
        let mut premise = [Premise::Absent; 5];
        for v in premise.iter_mut() {
            *v = Premise::ALL[(c % 2) as usize];
            c /= 2;
        }
        let top_s = Stance::ALL.iter().map(|s| stance.iter().filter(|v| *v == s).count()).max().unwrap();
        let top_p = Premise::ALL.iter().map(|p| premise.iter().filter(|v| *v == p).count()).max().unwrap();
        let ballot = AnnotationBallot { tweet_id: format!("b{code}"), stance_votes: stance, premise_votes: premise };
        let got = aggregate_ballot(&ballot, quorum);
        let expect_kept = top_s >= 4 && top_p >= 4;
        ensure!(got.is_kept() == expect_kept, "ballot {code}: {got:?}");
        if let AggregationOutcome::Kept { stance: s, premise: p } = got {
            kept += 1;
            ensure!(stance.iter().filter(|v| **v == s).count() >= 4, "ballot {code}: kept stance {s:?} lacks quorum");
            ensure!(premise.iter().filter(|v| **v == p).count() >= 4, "ballot {code}: kept premise {p:?} lacks quorum");
        }
    }
    // kept iff stance has a 4+ majority (3 * (1 + 10) patterns) and premise does (2 * (1 + 5))
    ensure!(kept == 33 * 12, "{kept} ballots kept");

    let lex = HashtagLexicon::bundled();
    let mut tags = 0;
    for (tag, stance) in lex.iter() {
        tags += 1;
        for text in [format!("some words #{tag}"), format!("#{} leading", tag.to_uppercase())] {
            let got = weak_label(&text, &lex);
            ensure!(got == stance, "#{tag} labeled {got:?}, lexicon says {stance:?}");
        }
    }
    let favor = lex.iter().find(|(_, s)| *s == Stance::Favor).map(|(t, _)| t.to_string());
    let against = lex.iter().find(|(_, s)| *s == Stance::Against).map(|(t, _)| t.to_string());
    if let (Some(f), Some(a)) = (favor, against) {
        ensure!(weak_label(&format!("#{f} #{a}"), &lex) == Stance::Neither, "mixed hashtags not neither");
    }
    ensure!(weak_label("no tags at all", &lex) == Stance::Neither, "untagged text not neither");

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for code in 0..243u32 {
        let mut c = code;
        let votes: Vec<usize> = (0..5)
            .map(|_| {
                let v = (c % 3) as usize;
                c /= 3;
                v
            })
            .collect();
        let proba = Array1::from_shape_fn(3, |_| rng.gen_range(0.0..1.0));
        let counts: Vec<usize> = (0..3).map(|k| votes.iter().filter(|&&v| v == k).count()).collect();
        let top = *counts.iter().max().unwrap();
        let mut tied: Vec<usize> = (0..3).filter(|&k| counts[k] == top).collect();
        tied.sort_by(|&a, &b| proba[b].partial_cmp(&proba[a]).unwrap().then(a.cmp(&b)));
        let got = majority_vote(&votes, proba.view());
        ensure!(got == tied[0], "votes {votes:?} proba {proba}: got {got}, expected {}", tied[0]);
    }
    Ok(format!("7776 ballots ({kept} kept), {tags} lexicon hashtags, 243 vote patterns"))
}

// 8 -------------------------------------------------------------------------

fn preprocessing_golden() -> Check {
    let dir = core_dir("tests/data/preprocess_golden");
    let input = load_corpus(&dir.join("input.jsonl"), CorpusFormat::Jsonl, LoadOptions::default()).map_err(|e| e.to_string())?.records;
    ensure!(input.len() == 50, "{} fixture tweets", input.len());
    let cfg = CleaningConfig::default();
    let out = filter_corpus(&input, &cfg);
    let mut kept = Vec::new();
    write_jsonl(&mut kept, &out.kept).map_err(|e| e.to_string())?;
    let expected = fs::read(dir.join("expected_clean.jsonl")).map_err(|e| e.to_string())?;
    ensure!(kept == expected, "cleaned output differs from golden file");
    let dropped: String = out.dropped.iter().map(|d| serde_json::to_string(d).unwrap() + "\n").collect();
    let expected = fs::read_to_string(dir.join("expected_dropped.jsonl")).map_err(|e| e.to_string())?;
    ensure!(dropped == expected, "drop reasons differ from golden file");
    for r in &input {
        let once = clean_text(&r.raw_text, &cfg);
        ensure!(clean_text(&once, &cfg) == once, "{} not idempotent", r.id);
    }
    Ok(format!("{} kept, {} dropped, idempotent on all 50", out.kept.len(), out.dropped.len()))
}

// 9 -------------------------------------------------------------------------

fn end_to_end() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = tmp.path();
    let mut steps: Vec<Vec<String>> = Vec::new();
    let mut add = |s: &str| steps.push(s.split_whitespace().map(String::from).collect());
    add("fixture --kind pipeline --n-raw 600 --n-test 150 --seed 9 --out-dir fx");
    add("preprocess --in fx/raw.jsonl --out-dir pre");
    add("weaklabel --in pre/clean.jsonl --out-dir wl");
    add("sample --in wl/weak_labeled.jsonl --n 300 --seed 9 --out-dir smp");
    add("aggregate --in smp/sample.jsonl --ballots fx/ballots.jsonl --out-dir agg");
    add("stats --in agg/annotated.jsonl --out-dir st");
    for mode in ["tweet_only", "tweet_plus_claim"] {
        for task in ["stance", "premise"] {
            add(&format!(
                "train --train agg/annotated.jsonl --validation fx/test.jsonl --task {task} --mode {mode} --epochs 15 --seed 9 --out-dir tr-{mode}-{task}"
            ));
        }
        add(&format!("predict --model tr-{mode}-stance/model.ckpt --model tr-{mode}-premise/model.ckpt --in fx/test.jsonl --out-dir pr-{mode}"));
        add(&format!(
            "evaluate --gold fx/test.jsonl --predictions pr-{mode}/predictions.jsonl --model-name dual-view --mode {mode} --out-dir ev-{mode}"
        ));
    }
    add("baseline --split test --task stance --out-dir bl");
    add("report --results ev-tweet_only/evaluation.json --results ev-tweet_plus_claim/evaluation.json --out-dir rep");
    add("emotions --corpus fx/test.jsonl --emotions fx/emotions.jsonl --out-dir emo");
    for args in &steps {
        let o = run_in(root, &args.iter().map(String::as_str).collect::<Vec<_>>());
        ensure!(o.status.code() == Some(0), "`{}` exited {:?}: {}", args.join(" "), o.status.code(), text(&o));
    }

    let report = fs::read_to_string(root.join("rep/report.md")).map_err(|e| e.to_string())?;
    let lines: Vec<&str> = report.lines().collect();
    ensure!(lines.len() == 4, "report.md has {} lines", lines.len());
    ensure!(lines[0] == "| Model | Tweets | Tweets | Tweets + Claims | Tweets + Claims |", "header row {:?}", lines[0]);
    ensure!(lines[2] == "|  | F1 Stance | F1 Premise | F1 Stance | F1 Premise |", "task row {:?}", lines[2]);
    let cells: Vec<&str> = lines[3].trim_matches('|').split('|').map(str::trim).collect();
    ensure!(cells.len() == 5 && cells[0] == "dual-view", "model row {:?}", lines[3]);
    for c in &cells[1..] {
        let v: f64 = c.parse().map_err(|_| format!("cell {c:?} is not a score"))?;
        ensure!((0.0..=1.0).contains(&v), "cell {v} outside [0, 1]");
    }
    let test = load_corpus(&root.join("fx/test.jsonl"), CorpusFormat::Jsonl, LoadOptions::default()).map_err(|e| e.to_string())?;
    let mut claims: Vec<String> = test.records.iter().map(|r| r.claim.name().to_string()).collect();
    claims.sort();
    claims.dedup();
    for claim in &claims {
        let svg = fs::read_to_string(root.join(format!("rep/charts/{claim}.svg"))).map_err(|e| format!("{claim}.svg: {e}"))?;
        ensure!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"), "{claim}.svg is not an svg document");
    }
    ensure!(root.join("emo/emotions.svg").exists(), "emotions chart missing");
    Ok(format!("{} commands exit 0; report row {:?}; {} per-claim charts", steps.len(), lines[3], claims.len()))
}

#[test]
fn acceptance() {
    let criteria = [
        Criterion { id: 1, name: "dataset integrity", tolerance: "exact counts", limit: Some(Duration::from_secs(5)), run: dataset_integrity },
        Criterion { id: 2, name: "metric oracle", tolerance: "1e-9 (hand example 1e-15)", limit: Some(Duration::from_secs(10)), run: metric_oracle },
        Criterion { id: 3, name: "random baseline", tolerance: "Monte Carlo within 0.01 of plug-in", limit: Some(Duration::from_secs(30)), run: random_baseline_check },
        Criterion { id: 4, name: "fusion gate invariants", tolerance: "exact; gate oracle 1e-12", limit: None, run: fusion_invariants },
        Criterion { id: 5, name: "gradient checks", tolerance: "eps 1e-4, relative error < 1e-4", limit: Some(Duration::from_secs(60)), run: gradient_checks },
        Criterion { id: 6, name: "learning smoke test", tolerance: ">= 0.95 train; >= 0.9 / <= 0.55 held-out", limit: Some(Duration::from_secs(120)), run: learning_smoke },
        Criterion { id: 7, name: "curation oracles", tolerance: "exact", limit: Some(Duration::from_secs(10)), run: curation_oracles },
        Criterion { id: 8, name: "preprocessing golden files", tolerance: "byte-identical", limit: None, run: preprocessing_golden },
        Criterion { id: 9, name: "end-to-end pipeline", tolerance: "exit 0, table shape", limit: Some(Duration::from_secs(180)), run: end_to_end },
    ];
    let mut err = std::io::stderr();
    let mut failed = Vec::new();
    let total = Instant::now();
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let over = c.limit.is_some_and(|l| elapsed > l);
        let limit = c.limit.map_or("none".to_string(), secs);
        let (tag, detail) = match (&outcome, over) {
            (Ok(d), false) => ("PASS", d.clone()),
            (Ok(d), true) => ("FAIL", format!("over time limit; {d}")),
            (Err(e), _) => ("FAIL", e.clone()),
        };
        writeln!(err, "[{tag}] {}. {} | tol {} | {} (limit {limit}) | {detail}", c.id, c.name, c.tolerance, secs(elapsed)).unwrap();
        if tag == "FAIL" {
            failed.push(c.id);
        }
    }
    writeln!(err, "acceptance: {}/{} passed in {}", criteria.len() - failed.len(), criteria.len(), secs(total.elapsed())).unwrap();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
