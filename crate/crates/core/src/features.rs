//! Text to fixed-width feature vectors.
//!
//! Tweets (optionally prefixed by their claim sentence) are tokenized and
//! encoded with signed feature hashing over word n-grams. Dependency tags,
//! when present, are mapped to frequency ranks and appended as extra slots.

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{ClaimTexts, TweetRecord};
use crate::hashing::hash_parts;

/// Separator between claim and tweet tokens. The tokenizer lowercases and splits
/// brackets off, so it can never emit this token itself.
pub const SEP_TOKEN: &str = "[SEP]";

pub const DEFAULT_MAX_TOKENS: usize = 128;

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("encoder dimension must be at least 2, got {0}")]
    DimTooSmall(usize),
    #[error("n-gram orders must be non-empty and at least 1")]
    BadNgramOrders,
    #[error("max token length must be at least 1")]
    ZeroMaxTokens,
    #[error("claim has {claim_tokens} tokens; with the separator it does not fit in {max_tokens}")]
    ClaimTooLong { claim_tokens: usize, max_tokens: usize },
    #[error("dependency rank table needs at least one tag")]
    EmptyTagCounts,
    #[error("dependency slot count must be at least 1")]
    ZeroSlots,
    #[error("invalid dependency rank table: {0}")]
    BadRankTable(String),
    #[error("syntax features requested but no dependency rank table was provided")]
    MissingRankTable,
    #[error("record '{0}' has no cleaned text")]
    MissingCleanText(String),
}

/// Case-folded tokens, at most `max_tokens` long.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenSeq(Vec<String>);

impl TokenSeq {
    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<String> {
        self.0
    }
}

#[derive(Clone, Copy, PartialEq)]
enum CharClass {
    Space,
    Word,
    Punct,
}

fn class_of(c: char) -> CharClass {
    if c.is_whitespace() {
        CharClass::Space
    } else if c.is_alphanumeric() || c == '_' {
        CharClass::Word
    } else {
        CharClass::Punct
    }
}

fn split_tokens(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut current_class = CharClass::Space;
    for c in lower.chars() {
        let class = class_of(c);
        if class != current_class && !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
        if class != CharClass::Space {
            current.push(c);
        }
        current_class = class;
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// Lowercases, splits on whitespace and word/punctuation boundaries, and keeps
/// the first `max_tokens` tokens. Runs of punctuation stay together.
pub fn tokenize(text: &str, max_tokens: usize) -> TokenSeq {
    let mut tokens = split_tokens(text);
    tokens.truncate(max_tokens);
    TokenSeq(tokens)
}

/// `claim tokens + [SEP] + tweet tokens`; only the tweet part is truncated.
pub fn early_fuse(claim_text: &str, tweet_text: &str, max_tokens: usize) -> Result<TokenSeq, FeatureError> {
    let mut tokens = split_tokens(claim_text);
    if tokens.len() + 1 > max_tokens {
        return Err(FeatureError::ClaimTooLong { claim_tokens: tokens.len(), max_tokens });
    }
    tokens.push(SEP_TOKEN.to_string());
    let room = max_tokens - tokens.len();
    tokens.extend(split_tokens(tweet_text).into_iter().take(room));
    Ok(TokenSeq(tokens))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EncoderConfig {
    pub dim: usize,
    pub ngram_orders: Vec<usize>,
    pub hash_seed: u64,
    pub normalize: bool,
    pub max_tokens: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            dim: 256,
            ngram_orders: vec![1, 2],
            hash_seed: 0,
            normalize: true,
            max_tokens: DEFAULT_MAX_TOKENS,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<(), FeatureError> {
        if self.dim < 2 {
            return Err(FeatureError::DimTooSmall(self.dim));
        }
        if self.ngram_orders.is_empty() || self.ngram_orders.contains(&0) {
            return Err(FeatureError::BadNgramOrders);
        }
        if self.max_tokens == 0 {
            return Err(FeatureError::ZeroMaxTokens);
        }
        Ok(())
    }
}

/// Signed hashed n-gram counts, optionally scaled to unit length.
pub fn hash_ngram_encode(tokens: &TokenSeq, config: &EncoderConfig) -> Vec<f64> {
    let mut v = vec![0.0; config.dim];
    for &n in &config.ngram_orders {
        if n == 0 {
            continue;
        }
        for gram in tokens.tokens().windows(n) {
            let h = hash_parts(config.hash_seed, gram.iter().map(String::as_str));
            let idx = (h % config.dim as u64) as usize;
            let sign = if h >> 63 == 1 { -1.0 } else { 1.0 };
            v[idx] += sign;
        }
    }
    if config.normalize {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
    }
    v
}

/// Dependency tag to frequency rank (1 = most frequent).
#[derive(Clone, Debug, PartialEq)]
pub struct DepRankTable {
    ranks: BTreeMap<String, usize>,
    slots: usize,
}

pub const DEFAULT_DEP_SLOTS: usize = 16;

/// Tallies tags over a corpus of tag sequences.
pub fn count_tags<'a, I>(sequences: I) -> BTreeMap<String, usize>
where
    I: IntoIterator<Item = &'a [String]>,
{
    let mut counts = BTreeMap::new();
    for seq in sequences {
        for tag in seq {
            *counts.entry(tag.clone()).or_insert(0) += 1;
        }
    }
    counts
}

/// Ranks tags by descending count, ties broken by ascending tag.
pub fn build_dep_rank_table(counts: &BTreeMap<String, usize>, slots: usize) -> Result<DepRankTable, FeatureError> {
    if counts.is_empty() {
        return Err(FeatureError::EmptyTagCounts);
    }
    if slots == 0 {
        return Err(FeatureError::ZeroSlots);
    }
    let mut order: Vec<(&String, &usize)> = counts.iter().collect();
    order.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
    let ranks = order
        .into_iter()
        .enumerate()
        .map(|(i, (tag, _))| (tag.clone(), i + 1))
        .collect();
    Ok(DepRankTable { ranks, slots })
}

impl DepRankTable {
    pub fn rank(&self, tag: &str) -> Option<usize> {
        self.ranks.get(tag).copied()
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn ranks(&self) -> &BTreeMap<String, usize> {
        &self.ranks
    }

    /// `{tag: rank}`; the slot count travels in the encoder settings.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.ranks).expect("string map serializes")
    }

    pub fn from_ranks(ranks: BTreeMap<String, usize>, slots: usize) -> Result<DepRankTable, FeatureError> {
        if slots == 0 {
            return Err(FeatureError::ZeroSlots);
        }
        let mut seen = vec![false; ranks.len()];
        for (tag, &r) in &ranks {
            if r == 0 || r > ranks.len() || std::mem::replace(&mut seen[r - 1], true) {
                return Err(FeatureError::BadRankTable(format!(
                    "rank {r} of '{tag}' breaks the 1..={} bijection",
                    ranks.len()
                )));
            }
        }
        Ok(DepRankTable { ranks, slots })
    }

    pub fn from_json(text: &str, slots: usize) -> Result<DepRankTable, FeatureError> {
        let ranks: BTreeMap<String, usize> =
            serde_json::from_str(text).map_err(|e| FeatureError::BadRankTable(e.to_string()))?;
        DepRankTable::from_ranks(ranks, slots)
    }
}

/// First `slots` tag ranks scaled by `1 / (table size + 1)`; unknown or
/// missing tags encode as 0.
pub fn encode_dep_features(dep_tags: Option<&[String]>, table: &DepRankTable) -> Vec<f64> {
    let scale = 1.0 / (table.len() + 1) as f64;
    let mut v = vec![0.0; table.slots];
    if let Some(tags) = dep_tags {
        for (slot, tag) in v.iter_mut().zip(tags) {
            *slot = table.rank(tag).map_or(0.0, |r| r as f64 * scale);
        }
    }
    v
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputMode {
    TweetOnly,
    TweetPlusClaim,
}

impl InputMode {
    /// Column group label used in reports.
    pub fn label(self) -> &'static str {
        match self {
            InputMode::TweetOnly => "Tweets",
            InputMode::TweetPlusClaim => "Tweets + Claims",
        }
    }
}

impl FromStr for InputMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tweet_only" => Ok(InputMode::TweetOnly),
            "tweet_plus_claim" => Ok(InputMode::TweetPlusClaim),
            other => Err(format!("unknown input mode '{other}'")),
        }
    }
}

/// Everything needed to turn a record into a model input.
#[derive(Clone, Debug)]
pub struct FeatureSpace {
    pub mode: InputMode,
    pub encoder: EncoderConfig,
    pub claims: ClaimTexts,
    /// Present iff syntax features are on.
    pub dep_table: Option<DepRankTable>,
}

impl FeatureSpace {
    pub fn new(mode: InputMode, encoder: EncoderConfig) -> Result<FeatureSpace, FeatureError> {
        encoder.validate()?;
        Ok(FeatureSpace { mode, encoder, claims: ClaimTexts::default(), dep_table: None })
    }

    pub fn with_syntax(mut self, table: DepRankTable) -> FeatureSpace {
        self.dep_table = Some(table);
        self
    }

    pub fn with_claims(mut self, claims: ClaimTexts) -> FeatureSpace {
        self.claims = claims;
        self
    }

    pub fn input_dim(&self) -> usize {
        self.encoder.dim + self.dep_table.as_ref().map_or(0, DepRankTable::slots)
    }

    pub fn compose(&self, record: &TweetRecord) -> Result<Vec<f64>, FeatureError> {
        compose_input(record, self.mode, self.dep_table.as_ref(), &self.encoder, &self.claims)
    }

    pub fn spec(&self) -> FeatureSpec {
        FeatureSpec {
            mode: self.mode,
            encoder: self.encoder.clone(),
            claims: self.claims.clone(),
            dep_ranks: self.dep_table.as_ref().map(|t| t.ranks().clone()),
            dep_slots: self.dep_table.as_ref().map_or(0, DepRankTable::slots),
        }
    }

    pub fn from_spec(spec: &FeatureSpec) -> Result<FeatureSpace, FeatureError> {
        let mut space = FeatureSpace::new(spec.mode, spec.encoder.clone())?.with_claims(spec.claims.clone());
        if let Some(ranks) = &spec.dep_ranks {
            space = space.with_syntax(DepRankTable::from_ranks(ranks.clone(), spec.dep_slots)?);
        }
        Ok(space)
    }
}

/// Serializable form of a `FeatureSpace`, stored alongside trained models.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub mode: InputMode,
    pub encoder: EncoderConfig,
    pub claims: ClaimTexts,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dep_ranks: Option<BTreeMap<String, usize>>,
    #[serde(default)]
    pub dep_slots: usize,
}

/// Encodes one cleaned record; dependency features are appended when a rank table is given.
pub fn compose_input(
    record: &TweetRecord,
    mode: InputMode,
    syntax: Option<&DepRankTable>,
    encoder: &EncoderConfig,
    claims: &ClaimTexts,
) -> Result<Vec<f64>, FeatureError> {
    encoder.validate()?;
    let text = record
        .clean_text
        .as_deref()
        .ok_or_else(|| FeatureError::MissingCleanText(record.id.clone()))?;
    let tokens = match mode {
        InputMode::TweetOnly => tokenize(text, encoder.max_tokens),
        InputMode::TweetPlusClaim => {
            early_fuse(&claims.text_for(&record.claim), text, encoder.max_tokens)?
        }
    };
    let mut v = hash_ngram_encode(&tokens, encoder);
    if let Some(table) = syntax {
        v.extend(encode_dep_features(record.dep_tags.as_deref(), table));
    }
    Ok(v)
}
