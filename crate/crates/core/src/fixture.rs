//! Deterministic synthetic corpora for tests, demos and the acceptance suite.

use ndarray::{Array1, Array2};
use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{ClaimTopic, Premise, SplitStats, Stance, TweetRecord};
use crate::curation::{AnnotationBallot, HashtagLexicon};
use crate::emotion::{Emotion, EmotionRecord};
use crate::neural::Dataset;
use crate::preprocess::{clean_text, CleaningConfig};

pub const SPLIT_NAMES: [&str; 4] = ["train", "validation", "test", "vaccines"];

/// Published per-claim label counts of a named split.
pub fn expected_split(name: &str) -> Option<SplitStats> {
    let text = match name {
        "train" => include_str!("../data/split_counts/train.json"),
        "validation" => include_str!("../data/split_counts/validation.json"),
        "test" => include_str!("../data/split_counts/test.json"),
        "vaccines" => include_str!("../data/split_counts/vaccines.json"),
        _ => return None,
    };
    Some(SplitStats::from_json(text).expect("bundled split counts parse"))
}

/// Labeled placeholder records whose per-claim counts equal `stats` exactly.
///
/// Premise-present labels go to favor records first, then against, then
/// neither, so no premise sits on a neutral record unless the counts force it.
pub fn mirror_split(stats: &SplitStats, prefix: &str) -> Vec<TweetRecord> {
    let mut out = Vec::with_capacity(stats.total);
    for (claim_name, c) in &stats.claims {
        let claim: ClaimTopic = claim_name.parse().expect("claim names parse");
        let mut premise_left = c.premise_present;
        let mut n = 0;
        for stance in Stance::ALL {
            for _ in 0..c.stance(stance) {
                let premise = if premise_left > 0 {
                    premise_left -= 1;
                    Premise::Present
                } else {
                    Premise::Absent
                };
                let id = format!("{prefix}-{claim_name}-{n:05}");
                let text = format!("synthetic {} tweet {n} about {}", stance.as_str(), claim.default_claim_text());
                out.push(TweetRecord::new(id, text, claim.clone()).with_labels(stance, premise));
                n += 1;
            }
        }
    }
    out
}

const FAVOR_PHRASES: [&str; 6] = [
    "this keeps our families and neighbours safe",
    "grateful to everyone who is doing their part",
    "glad the rule is finally here and working",
    "support this fully, it protects the vulnerable",
    "proud of our town for following the guidance",
    "the right call, we should keep it going",
];
const AGAINST_PHRASES: [&str; 6] = [
    "this is government overreach and must end",
    "they cannot force this on free people",
    "my freedom is not up for negotiation today",
    "refuse to comply with another pointless order",
    "this rule is destroying small businesses",
    "enough is enough, stop the mandates now",
];
const NEITHER_PHRASES: [&str; 6] = [
    "saw a news segment about the rules this morning",
    "wondering what the schedule looks like next week",
    "my cousin asked me about the new guidance",
    "the announcement is at noon, tuning in later",
    "reading the thread about the policy updates",
    "heard the mayor will speak on the radio",
];
const PREMISE_PHRASES: [&str; 4] = [
    "because hospital data clearly shows the effect",
    "since the study found strong evidence for it",
    "as the numbers from last month demonstrate",
    "given that experts measured the outcome",
];
const PLAIN_PHRASES: [&str; 4] = ["just saying", "thoughts anyone", "what a week", "anyway here we are"];
const FILLER: &str = "posted from the kitchen table on a grey afternoon while the kettle boils";
const SCENERY: [&str; 16] = [
    "rain", "tram", "garden", "bakery", "harbour", "bicycle", "library", "market",
    "sunset", "bridge", "coffee", "park", "river", "train", "porch", "hill",
];

fn stance_phrase(rng: &mut ChaCha8Rng, stance: Stance) -> &'static str {
    let list = match stance {
        Stance::Favor => &FAVOR_PHRASES,
        Stance::Against => &AGAINST_PHRASES,
        Stance::Neither => &NEITHER_PHRASES,
    };
    list.choose(rng).expect("non-empty")
}

fn tweet_body(rng: &mut ChaCha8Rng, stance: Stance, premise: Premise) -> String {
    let support = match premise {
        Premise::Present => PREMISE_PHRASES.choose(rng),
        Premise::Absent => PLAIN_PHRASES.choose(rng),
    }
    .expect("non-empty");
    let scenery: Vec<&str> = SCENERY.choose_multiple(rng, 4).copied().collect();
    format!("{} {} {FILLER} near the {}", stance_phrase(rng, stance), support, scenery.join(" and the "))
}

/// Raw tweets, annotator ballots and a held-out labeled test set for an
/// end-to-end pipeline run.
#[derive(Clone, Debug)]
pub struct PipelineFixture {
    pub raw: Vec<TweetRecord>,
    pub ballots: Vec<AnnotationBallot>,
    pub test: Vec<TweetRecord>,
}

fn noisy_votes<T: Copy + PartialEq>(rng: &mut ChaCha8Rng, truth: T, options: &[T], accuracy: f64) -> [T; 5] {
    std::array::from_fn(|_| {
        if rng.gen_bool(accuracy) {
            truth
        } else {
            let others: Vec<T> = options.iter().copied().filter(|o| *o != truth).collect();
            *others.choose(rng).expect("at least two options")
        }
    })
}

fn true_labels(rng: &mut ChaCha8Rng, i: usize) -> (ClaimTopic, Stance, Premise) {
    let claim = ClaimTopic::CANONICAL[i % 3].clone();
    let stance = Stance::ALL[(i / 3) % 3];
    let premise = if stance != Stance::Neither && rng.gen_bool(0.5) { Premise::Present } else { Premise::Absent };
    (claim, stance, premise)
}

/// `n_raw` raw tweets (with a few duplicates and short posts mixed in) whose
/// hashtags mostly agree with their hidden stance, five noisy ballots per
/// tweet, and `n_test` cleaned, labeled test tweets from the same generator.
pub fn pipeline_fixture(n_raw: usize, n_test: usize, seed: u64) -> PipelineFixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lexicon = HashtagLexicon::bundled();
    let favor_tags: Vec<&str> = lexicon.iter().filter(|(_, s)| *s == Stance::Favor).map(|(t, _)| t).collect();
    let against_tags: Vec<&str> = lexicon.iter().filter(|(_, s)| *s == Stance::Against).map(|(t, _)| t).collect();

    let mut raw = Vec::with_capacity(n_raw);
    let mut ballots = Vec::with_capacity(n_raw);
    for i in 0..n_raw {
        let id = format!("raw-{i:05}");
        let (claim, stance, premise) = true_labels(&mut rng, i);
        let mut text = format!("@user{} {}", rng.gen_range(0..500), tweet_body(&mut rng, stance, premise));
        match stance {
            Stance::Favor => text.push_str(&format!(" #{}", favor_tags.choose(&mut rng).unwrap())),
            Stance::Against => text.push_str(&format!(" #{}", against_tags.choose(&mut rng).unwrap())),
            Stance::Neither => {}
        }
        if stance != Stance::Neither && rng.gen_bool(0.05) {
            // mixed signals: the weak label falls back to neither
            let other = if stance == Stance::Favor { &against_tags } else { &favor_tags };
            text.push_str(&format!(" #{}", other.choose(&mut rng).unwrap()));
        }
        if rng.gen_bool(0.3) {
            text.push_str(" \u{1F637}");
        }
        text.push_str(&format!(" https://t.co/{i:x}"));
        if i % 50 == 49 {
            text = format!("short post {i} #masks");
        } else if i % 40 == 39 {
            text = raw.iter().map(|r: &TweetRecord| r.raw_text.clone()).nth(i - 1).unwrap_or(text);
        }
        raw.push(TweetRecord::new(id.clone(), text, claim));
        ballots.push(AnnotationBallot {
            tweet_id: id,
            stance_votes: noisy_votes(&mut rng, stance, &Stance::ALL, 0.92),
            premise_votes: noisy_votes(&mut rng, premise, &Premise::ALL, 0.95),
        });
    }

    let cleaning = CleaningConfig::default();
    let test = (0..n_test)
        .map(|i| {
            let (claim, stance, premise) = true_labels(&mut rng, i);
            let text = tweet_body(&mut rng, stance, premise);
            let mut r = TweetRecord::new(format!("test-{i:05}"), text, claim).with_labels(stance, premise);
            r.clean_text = Some(clean_text(&r.raw_text, &cleaning));
            r
        })
        .collect();
    PipelineFixture { raw, ballots, test }
}

/// `n` points in `[-1, 1]^dim` labeled by the side of a random hyperplane
/// through the origin, keeping only points at least `margin` from it.
pub fn separable_dataset(n: usize, dim: usize, margin: f64, seed: u64) -> (Dataset, Array1<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: Array1<f64> = Array1::from_shape_fn(dim, |_| rng.gen_range(-1.0..1.0));
    let w = &w / w.dot(&w).sqrt();
    let mut rows = Vec::with_capacity(n * dim);
    let mut labels = Vec::with_capacity(n);
    while labels.len() < n {
        let x: Array1<f64> = Array1::from_shape_fn(dim, |_| rng.gen_range(-1.0..1.0));
        let s = w.dot(&x);
        if s.abs() < margin {
            continue;
        }
        rows.extend(x.iter());
        labels.push(usize::from(s > 0.0));
    }
    let inputs = Array2::from_shape_vec((n, dim), rows).expect("n * dim values");
    (Dataset::new(inputs, labels).expect("aligned"), w)
}

const WARM_WORDS: [&str; 8] = ["great", "finally", "love", "thankful", "relieved", "happy", "hopeful", "yes"];
const COLD_WORDS: [&str; 8] = ["awful", "again", "hate", "tired", "angry", "fed", "sick", "no"];
const NEUTRAL_WORDS: [&str; 10] = ["today", "news", "city", "week", "people", "update", "morning", "street", "local", "folks"];

/// Every tweet text appears twice, under face masks and under stay-at-home
/// orders, with opposite stances: warm texts favor masks and oppose home
/// orders, cold texts the reverse. Text alone therefore predicts the label
/// at exactly chance.
pub fn claim_dependent_corpus(n_texts: usize, seed: u64) -> Vec<TweetRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(2 * n_texts);
    for i in 0..n_texts {
        let warm = i % 2 == 0;
        let family = if warm { &WARM_WORDS } else { &COLD_WORDS };
        let mut words: Vec<&str> = family.choose_multiple(&mut rng, 3).copied().collect();
        words.extend(NEUTRAL_WORDS.choose_multiple(&mut rng, 3).copied());
        words.shuffle(&mut rng);
        let text = words.join(" ");
        let (on_masks, on_home) = if warm { (Stance::Favor, Stance::Against) } else { (Stance::Against, Stance::Favor) };
        for (claim, stance) in [(ClaimTopic::FaceMasks, on_masks), (ClaimTopic::StayAtHomeOrders, on_home)] {
            let mut r = TweetRecord::new(format!("cd-{i:04}-{}", claim.name()), text.clone(), claim).with_labels(stance, Premise::Absent);
            r.clean_text = Some(text.clone());
            out.push(r);
        }
    }
    out
}

/// One emotion label per stance-labeled record, skewed by stance: favor leans
/// joy and neutral, against leans anger and disgust, neither leans neutral.
pub fn synthetic_emotions(records: &[TweetRecord], seed: u64) -> Vec<EmotionRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    records
        .iter()
        .filter_map(|r| {
            let weights: [u32; 7] = match r.stance? {
                Stance::Favor => [1, 1, 2, 5, 1, 1, 4],
                Stance::Against => [5, 4, 2, 1, 1, 1, 2],
                Stance::Neither => [1, 1, 1, 1, 1, 2, 8],
            };
            let dist = WeightedIndex::new(weights).expect("positive weights");
            Some(EmotionRecord { id: r.id.clone(), emotion: Emotion::ALL[dist.sample(&mut rng)] })
        })
        .collect()
}
