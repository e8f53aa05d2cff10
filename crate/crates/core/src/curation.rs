//! Hashtag weak labeling, stratified sampling and annotation aggregation.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::de::{MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

use crate::corpus::{Premise, Stance, TweetRecord};

const BUNDLED_LEXICON: &str = include_str!("../data/hashtag_lexicon.json");

#[derive(Debug, Error, PartialEq)]
pub enum CurationError {
    #[error("invalid lexicon: {0}")]
    Lexicon(String),
    #[error("hashtag '{0}' maps to both favor and against")]
    ConflictingHashtag(String),
    #[error("hashtag '{0}' maps to neither; lexicon entries must take a side")]
    NeutralHashtag(String),
    #[error("sample size {0} is not divisible by the 3 stance strata")]
    IndivisibleSample(usize),
    #[error("{stratum} stratum short by {shortfall} (has {available}, needs {needed})")]
    InsufficientStratum {
        stratum: Stance,
        available: usize,
        needed: usize,
        shortfall: usize,
    },
    #[error("quorum must lie in 3..=5, got {0}")]
    InvalidQuorum(usize),
    #[error("duplicate ballot for '{0}'")]
    DuplicateBallot(String),
}

/// Case-insensitive hashtag to stance mapping.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
#[serde(transparent)]
pub struct HashtagLexicon {
    entries: BTreeMap<String, Stance>,
}

struct OrderedEntries(Vec<(String, Stance)>);

impl<'de> Deserialize<'de> for OrderedEntries {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct EntriesVisitor;
        impl<'de> Visitor<'de> for EntriesVisitor {
            type Value = OrderedEntries;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object mapping hashtags to \"favor\" or \"against\"")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Self::Value, A::Error> {
                let mut out = Vec::new();
                while let Some((k, v)) = map.next_entry::<String, Stance>()? {
                    out.push((k, v));
                }
                Ok(OrderedEntries(out))
            }
        }
        d.deserialize_map(EntriesVisitor)
    }
}

impl HashtagLexicon {
    /// Builds a lexicon; entries that repeat after case-folding must agree.
    pub fn from_entries<I, S>(entries: I) -> Result<HashtagLexicon, CurationError>
    where
        I: IntoIterator<Item = (S, Stance)>,
        S: AsRef<str>,
    {
        let mut map = BTreeMap::new();
        for (tag, stance) in entries {
            let key = normalize_tag(tag.as_ref());
            if key.is_empty() {
                return Err(CurationError::Lexicon("empty hashtag".into()));
            }
            if stance == Stance::Neither {
                return Err(CurationError::NeutralHashtag(key));
            }
            match map.insert(key.clone(), stance) {
                Some(prev) if prev != stance => return Err(CurationError::ConflictingHashtag(key)),
                _ => {}
            }
        }
        Ok(HashtagLexicon { entries: map })
    }

    pub fn from_json(text: &str) -> Result<HashtagLexicon, CurationError> {
        let OrderedEntries(entries) =
            serde_json::from_str(text).map_err(|e| CurationError::Lexicon(e.to_string()))?;
        HashtagLexicon::from_entries(entries)
    }

    /// The vaccine-mandate hashtag list shipped with the crate.
    pub fn bundled() -> HashtagLexicon {
        HashtagLexicon::from_json(BUNDLED_LEXICON).expect("bundled lexicon is valid")
    }

    pub fn get(&self, tag: &str) -> Option<Stance> {
        self.entries.get(&normalize_tag(tag)).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Stance)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

fn normalize_tag(tag: &str) -> String {
    tag.trim().trim_start_matches('#').to_lowercase()
}

fn hashtag_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"#(\w+)").unwrap())
}

/// Hashtags (without '#', case-folded) found in `text`.
pub fn extract_hashtags(text: &str) -> Vec<String> {
    hashtag_pattern()
        .captures_iter(text)
        .map(|c| c[1].to_lowercase())
        .collect()
}

/// Pre-label from lexicon hashtags: unanimous side wins, none or mixed gives neither.
pub fn weak_label(raw_text: &str, lexicon: &HashtagLexicon) -> Stance {
    let mut favor = false;
    let mut against = false;
    for tag in extract_hashtags(raw_text) {
        match lexicon.get(&tag) {
            Some(Stance::Favor) => favor = true,
            Some(Stance::Against) => against = true,
            _ => {}
        }
    }
    match (favor, against) {
        (true, false) => Stance::Favor,
        (false, true) => Stance::Against,
        _ => Stance::Neither,
    }
}

/// Draws `n_total / 3` items from each stance stratum, deterministically per seed.
///
/// The returned items keep their input order.
pub fn stratified_sample<T: Clone>(
    items: &[T],
    stance_of: impl Fn(&T) -> Stance,
    n_total: usize,
    seed: u64,
) -> Result<Vec<T>, CurationError> {
    if !n_total.is_multiple_of(3) {
        return Err(CurationError::IndivisibleSample(n_total));
    }
    let per = n_total / 3;
    let mut strata: [Vec<usize>; 3] = Default::default();
    for (i, item) in items.iter().enumerate() {
        strata[stance_of(item).index()].push(i);
    }
    for stance in Stance::ALL {
        let available = strata[stance.index()].len();
        if available < per {
            return Err(CurationError::InsufficientStratum {
                stratum: stance,
                available,
                needed: per,
                shortfall: per - available,
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: Vec<usize> = Vec::with_capacity(n_total);
    for stratum in strata.iter_mut() {
        let (picked, _) = stratum.partial_shuffle(&mut rng, per);
        chosen.extend_from_slice(picked);
    }
    chosen.sort_unstable();
    Ok(chosen.into_iter().map(|i| items[i].clone()).collect())
}

/// Five annotators' votes for one tweet.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnotationBallot {
    pub tweet_id: String,
    pub stance_votes: [Stance; 5],
    pub premise_votes: [Premise; 5],
}

/// Minimum number of identical votes per subtask.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Quorum(usize);

impl Quorum {
    pub fn new(q: usize) -> Result<Quorum, CurationError> {
        if (3..=5).contains(&q) {
            Ok(Quorum(q))
        } else {
            Err(CurationError::InvalidQuorum(q))
        }
    }

    pub fn get(self) -> usize {
        self.0
    }
}

impl Default for Quorum {
    fn default() -> Self {
        Quorum(4)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "lowercase")]
pub enum AggregationOutcome {
    Kept { stance: Stance, premise: Premise },
    Dropped { reason: String },
}

impl AggregationOutcome {
    pub fn is_kept(&self) -> bool {
        matches!(self, AggregationOutcome::Kept { .. })
    }
}

/// Value holding at least `quorum` of `votes`. With five votes and a quorum of
/// three or more at most one value can qualify.
fn quorum_value<T: Copy + PartialEq>(votes: &[T], quorum: usize) -> Option<T> {
    votes
        .iter()
        .copied()
        .find(|v| votes.iter().filter(|w| *w == v).count() >= quorum)
}

pub fn aggregate_ballot(ballot: &AnnotationBallot, quorum: Quorum) -> AggregationOutcome {
    let stance = quorum_value(&ballot.stance_votes, quorum.get());
    let premise = quorum_value(&ballot.premise_votes, quorum.get());
    match (stance, premise) {
        (Some(stance), Some(premise)) => AggregationOutcome::Kept { stance, premise },
        (None, Some(_)) => AggregationOutcome::Dropped { reason: "stance quorum not met".into() },
        (Some(_), None) => AggregationOutcome::Dropped { reason: "premise quorum not met".into() },
        (None, None) => AggregationOutcome::Dropped {
            reason: "stance and premise quorum not met".into(),
        },
    }
}

/// Result of applying ballots to a corpus.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BallotApplication {
    /// Records that met quorum, relabeled with the aggregated labels, in corpus order.
    pub kept: Vec<TweetRecord>,
    /// `(id, reason)` for every record that was not kept, including those without a ballot.
    pub dropped: Vec<(String, String)>,
    /// Ballots naming no corpus record.
    pub orphan_ballots: usize,
}

/// Aggregates each record's ballot. Records without a ballot are dropped
/// with reason "no ballot".
pub fn apply_ballots(
    records: &[TweetRecord],
    ballots: &[AnnotationBallot],
    quorum: Quorum,
) -> Result<BallotApplication, CurationError> {
    let mut by_id: BTreeMap<&str, &AnnotationBallot> = BTreeMap::new();
    for b in ballots {
        if by_id.insert(b.tweet_id.as_str(), b).is_some() {
            return Err(CurationError::DuplicateBallot(b.tweet_id.clone()));
        }
    }
    let mut out = BallotApplication::default();
    let mut used = 0;
    for r in records {
        let Some(b) = by_id.get(r.id.as_str()) else {
            out.dropped.push((r.id.clone(), "no ballot".into()));
            continue;
        };
        used += 1;
        match aggregate_ballot(b, quorum) {
            AggregationOutcome::Kept { stance, premise } => {
                let mut kept = r.clone();
                kept.stance = Some(stance);
                kept.premise = Some(premise);
                out.kept.push(kept);
            }
            AggregationOutcome::Dropped { reason } => out.dropped.push((r.id.clone(), reason)),
        }
    }
    out.orphan_ballots = ballots.len() - used;
    Ok(out)
}
