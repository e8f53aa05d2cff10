//! Corpus-side commands: cleaning, weak labeling, sampling, aggregation,
//! split statistics and synthetic fixtures.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;

use stancekit::corpus::{validate_split, SplitStats};
use stancekit::curation::{apply_ballots, stratified_sample, weak_label, AnnotationBallot, HashtagLexicon, Quorum};
use stancekit::fixture::{claim_dependent_corpus, expected_split, mirror_split, pipeline_fixture, synthetic_emotions, SPLIT_NAMES};
use stancekit::preprocess::{filter_corpus, CleaningConfig};
use stancekit::{Premise, Stance};

use crate::io::{json_bytes, jsonl_bytes, load_records, read_jsonl};
use crate::output::Outputs;
use crate::{AggregateArgs, FixtureArgs, FixtureKind, PreprocessArgs, SampleArgs, StatsArgs, ValidationFailed, WeaklabelArgs};

pub fn preprocess(a: PreprocessArgs) -> Result<()> {
    let records = load_records(&a.input, false)?;
    let config = CleaningConfig {
        strip_urls: !a.keep_urls,
        strip_mentions: !a.keep_mentions,
        strip_hashtags: !a.keep_hashtags,
        emoji_mode: a.emoji,
        min_length_chars: a.min_len,
        dedup: !a.no_dedup,
        ..CleaningConfig::default()
    };
    let outcome = filter_corpus(&records, &config);
    let mut out = Outputs::new("preprocess", a.out_dir.as_deref())?;
    out.input(&a.input)?;
    out.write(&a.out, &jsonl_bytes(&outcome.kept)?)?;
    out.write(&a.dropped, &jsonl_bytes(&outcome.dropped)?)?;
    out.finish()?;
    let mut reasons: BTreeMap<String, usize> = BTreeMap::new();
    for d in &outcome.dropped {
        *reasons.entry(d.reason.to_string()).or_default() += 1;
    }
    println!("kept {} of {} records", outcome.kept.len(), records.len());
    for (reason, n) in reasons {
        println!("dropped {n} {reason}");
    }
    Ok(())
}

pub fn weaklabel(a: WeaklabelArgs) -> Result<()> {
    let lexicon = match &a.lexicon {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading lexicon {}", p.display()))?;
            HashtagLexicon::from_json(&text)?
        }
        None => HashtagLexicon::bundled(),
    };
    let mut records = load_records(&a.input, false)?;
    let mut counts = [0usize; 3];
    for r in &mut records {
        let s = weak_label(&r.raw_text, &lexicon);
        counts[s.index()] += 1;
        r.stance = Some(s);
    }
    let mut out = Outputs::new("weaklabel", Some(&a.out_dir))?;
    out.input(&a.input)?;
    if let Some(p) = &a.lexicon {
        out.input(p)?;
    }
    out.write("weak_labeled.jsonl", &jsonl_bytes(&records)?)?;
    out.finish()?;
    for s in Stance::ALL {
        println!("{}: {}", s.as_str(), counts[s.index()]);
    }
    Ok(())
}

pub fn sample(a: SampleArgs) -> Result<()> {
    let records = load_records(&a.input, false)?;
    if let Some(r) = records.iter().find(|r| r.stance.is_none()) {
        bail!("record '{}' has no stance pre-label; run weaklabel first", r.id);
    }
    let picked = stratified_sample(&records, |r| r.stance.expect("checked above"), a.n, a.seed)?;
    let mut out = Outputs::new("sample", Some(&a.out_dir))?;
    out.set_seed(a.seed);
    out.input(&a.input)?;
    out.write("sample.jsonl", &jsonl_bytes(&picked)?)?;
    out.finish()?;
    println!("sampled {} records ({} per stratum)", picked.len(), a.n / 3);
    Ok(())
}

#[derive(Serialize)]
struct AggregationLine<'a> {
    id: &'a str,
    kept: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    stance: Option<Stance>,
    #[serde(skip_serializing_if = "Option::is_none")]
    premise: Option<Premise>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<&'a str>,
}

pub fn aggregate(a: AggregateArgs) -> Result<()> {
    let records = load_records(&a.input, false)?;
    let ballots: Vec<AnnotationBallot> = read_jsonl(&a.ballots)?;
    let applied = apply_ballots(&records, &ballots, Quorum::new(a.quorum)?)?;
    let kept: BTreeMap<&str, (Option<Stance>, Option<Premise>)> =
        applied.kept.iter().map(|r| (r.id.as_str(), (r.stance, r.premise))).collect();
    let dropped: BTreeMap<&str, &str> = applied.dropped.iter().map(|(id, why)| (id.as_str(), why.as_str())).collect();
    let lines: Vec<AggregationLine> = records
        .iter()
        .map(|r| match kept.get(r.id.as_str()) {
            Some(&(stance, premise)) => AggregationLine { id: &r.id, kept: true, stance, premise, reason: None },
            None => AggregationLine { id: &r.id, kept: false, stance: None, premise: None, reason: dropped.get(r.id.as_str()).copied() },
        })
        .collect();
    let mut out = Outputs::new("aggregate", Some(&a.out_dir))?;
    out.input(&a.input)?;
    out.input(&a.ballots)?;
    out.write("annotated.jsonl", &jsonl_bytes(&applied.kept)?)?;
    out.write("aggregation.jsonl", &jsonl_bytes(&lines)?)?;
    out.finish()?;
    println!("kept {} of {} records at quorum {}", applied.kept.len(), records.len(), a.quorum);
    if applied.orphan_ballots > 0 {
        log::warn!("{} ballots name no record in {}", applied.orphan_ballots, a.input.display());
    }
    Ok(())
}

fn counts_table(stats: &SplitStats) -> String {
    let mut s = String::new();
    writeln!(s, "{:<22} {:>7} {:>7} {:>7} {:>9} {:>9} {:>7}", "claim", "favor", "against", "neither", "premise_1", "premise_0", "total").unwrap();
    for (claim, c) in &stats.claims {
        writeln!(
            s,
            "{:<22} {:>7} {:>7} {:>7} {:>9} {:>9} {:>7}",
            claim,
            c.favor,
            c.against,
            c.neither,
            c.premise_present,
            c.premise_absent,
            c.stance_total()
        )
        .unwrap();
    }
    write!(s, "total: {}", stats.total).unwrap();
    s
}

fn load_expected(a: &StatsArgs) -> Result<Option<SplitStats>> {
    if let Some(p) = &a.expect {
        let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        return Ok(Some(SplitStats::from_json(&text).with_context(|| format!("parsing {}", p.display()))?));
    }
    match &a.expect_split {
        Some(name) => expected_split(name)
            .map(Some)
            .ok_or_else(|| anyhow!("unknown split '{name}' (expected one of {})", SPLIT_NAMES.join(", "))),
        None => Ok(None),
    }
}

pub fn stats(a: StatsArgs) -> Result<()> {
    let records = load_records(&a.input, a.strict)?;
    let expected = load_expected(&a)?;
    let mut out = Outputs::new("stats", a.out_dir.as_deref())?;
    out.input(&a.input)?;
    if let Some(p) = &a.expect {
        out.input(p)?;
    }
    let Some(expected) = expected else {
        let report = validate_split(&records, &SplitStats::default());
        println!("{}", counts_table(&report.actual));
        for id in &report.unlabeled {
            println!("UNLABELED {id}");
        }
        if a.out_dir.is_some() {
            out.write("stats.json", &json_bytes(&report.actual)?)?;
            out.finish()?;
        }
        return Ok(());
    };
    for p in expected.consistency_problems() {
        log::warn!("expected counts: {p}");
    }
    let report = validate_split(&records, &expected);
    println!("{report}");
    if a.out_dir.is_some() {
        out.write("stats.json", &json_bytes(&report.actual)?)?;
        out.write("validation.json", &json_bytes(&report)?)?;
        out.finish()?;
    }
    if report.passed() {
        Ok(())
    } else {
        let claims = report.mismatched_claims();
        let what = if claims.is_empty() { "split totals or labels".to_string() } else { claims.join(", ") };
        Err(ValidationFailed(format!("counts differ from expected for {what}")).into())
    }
}

pub fn fixture(a: FixtureArgs) -> Result<()> {
    let mut out = Outputs::new("fixture", Some(&a.out_dir))?;
    out.set_seed(a.seed);
    match a.kind {
        FixtureKind::Splits => {
            for name in SPLIT_NAMES {
                let stats = expected_split(name).expect("bundled split");
                out.write(format!("{name}.jsonl"), &jsonl_bytes(&mirror_split(&stats, name))?)?;
                out.write(format!("{name}.expected.json"), &json_bytes(&stats)?)?;
            }
        }
        FixtureKind::Pipeline => {
            let f = pipeline_fixture(a.n_raw, a.n_test, a.seed);
            out.write("raw.jsonl", &jsonl_bytes(&f.raw)?)?;
            out.write("ballots.jsonl", &jsonl_bytes(&f.ballots)?)?;
            out.write("test.jsonl", &jsonl_bytes(&f.test)?)?;
            out.write("emotions.jsonl", &jsonl_bytes(&synthetic_emotions(&f.test, a.seed))?)?;
        }
        FixtureKind::ClaimDependent => {
            out.write("claim_dependent.jsonl", &jsonl_bytes(&claim_dependent_corpus(a.n_raw / 2, a.seed))?)?;
        }
    }
    out.finish()?;
    println!("wrote fixture to {}", a.out_dir.display());
    Ok(())
}
