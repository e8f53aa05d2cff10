//! Tweet cleaning and corpus filtering.
//!
//! Cleaning runs in a fixed order: emoji handling, URL removal, mention and
//! hashtag token removal, whitespace collapse. Emoji go first so that removing
//! one can never expose a `#`/`@` token that a later pass would strip, which
//! keeps `clean_text` idempotent.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::corpus::TweetRecord;

const EMOJI_TABLE: &str = include_str!("../data/emoji.tsv");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmojiMode {
    ToText,
    Remove,
    Keep,
}

impl FromStr for EmojiMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "to_text" => Ok(EmojiMode::ToText),
            "remove" => Ok(EmojiMode::Remove),
            "keep" => Ok(EmojiMode::Keep),
            other => Err(format!("unknown emoji mode '{other}'")),
        }
    }
}

/// Which text duplicate detection compares.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DedupKey {
    Cleaned,
    Raw,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CleaningConfig {
    pub strip_urls: bool,
    pub strip_mentions: bool,
    pub strip_hashtags: bool,
    pub emoji_mode: EmojiMode,
    pub min_length_chars: usize,
    pub dedup: bool,
    pub dedup_key: DedupKey,
}

impl Default for CleaningConfig {
    fn default() -> Self {
        CleaningConfig {
            strip_urls: true,
            strip_mentions: true,
            strip_hashtags: true,
            emoji_mode: EmojiMode::ToText,
            min_length_chars: 150,
            dedup: true,
            dedup_key: DedupKey::Cleaned,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    Duplicate,
    TooShort,
    EmptyAfterCleaning,
}

impl fmt::Display for DropReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DropReason::Duplicate => "duplicate",
            DropReason::TooShort => "too_short",
            DropReason::EmptyAfterCleaning => "empty_after_cleaning",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedRecord {
    pub id: String,
    pub reason: DropReason,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FilterOutcome {
    pub kept: Vec<TweetRecord>,
    pub dropped: Vec<DroppedRecord>,
}

/// Codepoint sequence to short name lookup.
pub struct EmojiTable {
    names: HashMap<String, String>,
    max_len: usize,
}

impl EmojiTable {
    pub fn parse(text: &str) -> Result<EmojiTable, String> {
        let mut names = HashMap::new();
        let mut max_len = 0;
        for (i, line) in text.lines().enumerate() {
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let (cps, name) = line
                .split_once('\t')
                .ok_or_else(|| format!("emoji table line {}: missing tab", i + 1))?;
            let seq = cps
                .split_whitespace()
                .map(|h| {
                    u32::from_str_radix(h, 16)
                        .ok()
                        .and_then(char::from_u32)
                        .ok_or_else(|| format!("emoji table line {}: bad codepoint '{h}'", i + 1))
                })
                .collect::<Result<String, _>>()?;
            max_len = max_len.max(seq.chars().count());
            names.insert(seq, name.trim().to_string());
        }
        Ok(EmojiTable { names, max_len })
    }

    /// The table shipped with the crate.
    pub fn bundled() -> &'static EmojiTable {
        static TABLE: OnceLock<EmojiTable> = OnceLock::new();
        TABLE.get_or_init(|| EmojiTable::parse(EMOJI_TABLE).expect("bundled emoji table is valid"))
    }

    pub fn name(&self, seq: &str) -> Option<&str> {
        self.names.get(seq).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Longest table entry starting at `chars[at]`, as (length in chars, name).
    fn longest_match(&self, chars: &[char], at: usize) -> Option<(usize, &str)> {
        let upper = self.max_len.min(chars.len() - at);
        (1..=upper).rev().find_map(|n| {
            let seq: String = chars[at..at + n].iter().collect();
            self.names.get(&seq).map(|name| (n, name.as_str()))
        })
    }
}

fn is_emoji_like(c: char) -> bool {
    matches!(c as u32,
        0x1F000..=0x1FAFF
        | 0x2300..=0x23FF
        | 0x2600..=0x27BF
        | 0x2B00..=0x2BFF
        | 0xFE0E..=0xFE0F
        | 0x200D
        | 0xE0020..=0xE007F)
}

fn is_presentation_selector(c: char) -> bool {
    c == '\u{FE0F}' || c == '\u{FE0E}'
}

fn apply_emoji(text: &str, mode: EmojiMode, table: &EmojiTable) -> String {
    if mode == EmojiMode::Keep {
        return text.to_string();
    }
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    while i < chars.len() {
        if let Some((n, name)) = table.longest_match(&chars, i) {
            i += n;
            while i < chars.len() && is_presentation_selector(chars[i]) {
                i += 1;
            }
            if mode == EmojiMode::ToText {
                out.push(':');
                out.push_str(name);
                out.push(':');
            }
            continue;
        }
        let c = chars[i];
        if !(mode == EmojiMode::Remove && is_emoji_like(c)) {
            out.push(c);
        }
        i += 1;
    }
    out
}

fn url_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\bhttps?://\S*|\bt\.co/\S*").unwrap())
}

pub fn clean_text(text: &str, config: &CleaningConfig) -> String {
    clean_text_with(text, config, EmojiTable::bundled())
}

pub fn clean_text_with(text: &str, config: &CleaningConfig, table: &EmojiTable) -> String {
    let mut s = apply_emoji(text, config.emoji_mode, table);
    if config.strip_urls {
        s = url_pattern().replace_all(&s, " ").into_owned();
    }
    s.split_whitespace()
        .filter(|tok| {
            !(config.strip_mentions && tok.starts_with('@')
                || config.strip_hashtags && tok.starts_with('#'))
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Cleans every record and partitions the corpus into kept and dropped.
///
/// Checks run per record in the order empty, too short, duplicate; only records
/// that survive the first two enter the duplicate set, so the first *kept*
/// occurrence of a text wins.
pub fn filter_corpus(records: &[TweetRecord], config: &CleaningConfig) -> FilterOutcome {
    let mut seen = HashSet::new();
    let mut out = FilterOutcome::default();
    for record in records {
        let cleaned = clean_text(&record.raw_text, config);
        let reason = if cleaned.is_empty() {
            Some(DropReason::EmptyAfterCleaning)
        } else if cleaned.chars().count() < config.min_length_chars {
            Some(DropReason::TooShort)
        } else if config.dedup {
            let key = match config.dedup_key {
                DedupKey::Cleaned => cleaned.to_lowercase(),
                DedupKey::Raw => record.raw_text.to_lowercase(),
            };
            (!seen.insert(key)).then_some(DropReason::Duplicate)
        } else {
            None
        };
        match reason {
            Some(reason) => out.dropped.push(DroppedRecord { id: record.id.clone(), reason }),
            None => {
                let mut kept = record.clone();
                kept.clean_text = Some(cleaned);
                out.kept.push(kept);
            }
        }
    }
    out
}
