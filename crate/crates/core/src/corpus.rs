//! Canonical data model, corpus I/O and split statistics.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: duplicate id '{id}'")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: record '{id}' has premise=1 with stance 'neither'")]
    PremiseWithoutSide { line: usize, id: String },
    #[error("record '{id}' is missing its {label} label")]
    MissingLabel { id: String, label: &'static str },
    #[error("tsv header is missing column '{0}'")]
    MissingColumn(&'static str),
}

pub type Result<T> = std::result::Result<T, CorpusError>;

/// The health-mandate proposition a tweet is scored against.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ClaimTopic {
    FaceMasks,
    SchoolClosures,
    StayAtHomeOrders,
    VaccineMandates,
    Other(String),
}

impl ClaimTopic {
    pub const CANONICAL: [ClaimTopic; 4] = [
        ClaimTopic::FaceMasks,
        ClaimTopic::SchoolClosures,
        ClaimTopic::StayAtHomeOrders,
        ClaimTopic::VaccineMandates,
    ];

    pub fn name(&self) -> &str {
        match self {
            ClaimTopic::FaceMasks => "face_masks",
            ClaimTopic::SchoolClosures => "school_closures",
            ClaimTopic::StayAtHomeOrders => "stay_at_home_orders",
            ClaimTopic::VaccineMandates => "vaccine_mandates",
            ClaimTopic::Other(name) => name,
        }
    }

    /// Default claim sentence used for early fusion.
    pub fn default_claim_text(&self) -> String {
        match self {
            ClaimTopic::FaceMasks => "face masks are necessary".into(),
            ClaimTopic::SchoolClosures => "schools should be closed".into(),
            ClaimTopic::StayAtHomeOrders => "stay-at-home orders are necessary".into(),
            ClaimTopic::VaccineMandates => "vaccination should be mandatory".into(),
            ClaimTopic::Other(name) => name.replace('_', " "),
        }
    }
}

impl FromStr for ClaimTopic {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let norm: String = s
            .trim()
            .to_lowercase()
            .chars()
            .map(|c| if c == ' ' || c == '-' { '_' } else { c })
            .collect();
        if norm.is_empty() {
            return Err("empty claim name".into());
        }
        Ok(match norm.as_str() {
            "face_masks" | "face_mask" | "masks" | "wearing_masks" => ClaimTopic::FaceMasks,
            "school_closures" | "school_closure" | "close_school" | "school_closings" => {
                ClaimTopic::SchoolClosures
            }
            "stay_at_home_orders" | "stay_at_home_order" | "home_orders" | "stay_at_home" => {
                ClaimTopic::StayAtHomeOrders
            }
            "vaccine_mandates" | "vaccine_mandate" | "vaccines" | "vaccination" => {
                ClaimTopic::VaccineMandates
            }
            _ => ClaimTopic::Other(norm),
        })
    }
}

impl fmt::Display for ClaimTopic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for ClaimTopic {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for ClaimTopic {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Claim sentences per topic, keyed by topic name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClaimTexts(pub BTreeMap<String, String>);

impl Default for ClaimTexts {
    fn default() -> Self {
        ClaimTexts(
            ClaimTopic::CANONICAL
                .iter()
                .map(|c| (c.name().to_string(), c.default_claim_text()))
                .collect(),
        )
    }
}

impl ClaimTexts {
    pub fn text_for(&self, claim: &ClaimTopic) -> String {
        self.0
            .get(claim.name())
            .cloned()
            .unwrap_or_else(|| claim.default_claim_text())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stance {
    Favor,
    Against,
    Neither,
}

impl Stance {
    pub const ALL: [Stance; 3] = [Stance::Favor, Stance::Against, Stance::Neither];

    pub fn as_str(self) -> &'static str {
        match self {
            Stance::Favor => "favor",
            Stance::Against => "against",
            Stance::Neither => "neither",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Stance> {
        Stance::ALL.get(i).copied()
    }
}

impl FromStr for Stance {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "favor" => Ok(Stance::Favor),
            "against" => Ok(Stance::Against),
            "neither" => Ok(Stance::Neither),
            other => Err(format!("unknown stance '{other}'")),
        }
    }
}

impl fmt::Display for Stance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Stance {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Stance {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Whether a tweet carries a premise; serialized as 1/0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Premise {
    Absent,
    Present,
}

impl Premise {
    pub const ALL: [Premise; 2] = [Premise::Absent, Premise::Present];

    pub fn as_int(self) -> u8 {
        match self {
            Premise::Absent => 0,
            Premise::Present => 1,
        }
    }

    pub fn from_int(v: u64) -> Option<Premise> {
        match v {
            0 => Some(Premise::Absent),
            1 => Some(Premise::Present),
            _ => None,
        }
    }

    pub fn index(self) -> usize {
        self.as_int() as usize
    }
}

impl Serialize for Premise {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u8(self.as_int())
    }
}

impl<'de> Deserialize<'de> for Premise {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = u64::deserialize(d)?;
        Premise::from_int(v)
            .ok_or_else(|| serde::de::Error::custom(format!("premise must be 0 or 1, got {v}")))
    }
}

/// Prediction target. Class indices follow `Stance::index` / `Premise::index`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Stance,
    Premise,
}

impl Task {
    pub fn n_classes(self) -> usize {
        match self {
            Task::Stance => 3,
            Task::Premise => 2,
        }
    }

    /// Classes that enter the relevant-macro-F1 average.
    pub fn relevant_classes(self) -> &'static [usize] {
        match self {
            Task::Stance => &[0, 1],
            Task::Premise => &[0, 1],
        }
    }

    pub fn class_name(self, class: usize) -> String {
        match self {
            Task::Stance => Stance::from_index(class)
                .map(|s| s.as_str().to_string())
                .unwrap_or_else(|| format!("class{class}")),
            Task::Premise => class.to_string(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Stance => "stance",
            Task::Premise => "premise",
        }
    }

    /// Gold class index of `record` for this task, if labeled.
    pub fn label_of(self, record: &TweetRecord) -> Option<usize> {
        match self {
            Task::Stance => record.stance.map(Stance::index),
            Task::Premise => record.premise.map(Premise::index),
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "stance" => Ok(Task::Stance),
            "premise" => Ok(Task::Premise),
            other => Err(format!("unknown task '{other}'")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TweetRecord {
    pub id: String,
    #[serde(rename = "text")]
    pub raw_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clean_text: Option<String>,
    pub claim: ClaimTopic,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stance: Option<Stance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub premise: Option<Premise>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dep_tags: Option<Vec<String>>,
}

impl TweetRecord {
    pub fn new(id: impl Into<String>, text: impl Into<String>, claim: ClaimTopic) -> Self {
        TweetRecord {
            id: id.into(),
            raw_text: text.into(),
            clean_text: None,
            claim,
            stance: None,
            premise: None,
            dep_tags: None,
        }
    }

    pub fn with_labels(mut self, stance: Stance, premise: Premise) -> Self {
        self.stance = Some(stance);
        self.premise = Some(premise);
        self
    }

    /// Cleaned text when available, raw text otherwise.
    pub fn text(&self) -> &str {
        self.clean_text.as_deref().unwrap_or(&self.raw_text)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Jsonl,
    Tsv,
}

impl FromStr for CorpusFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "jsonl" => Ok(CorpusFormat::Jsonl),
            "tsv" => Ok(CorpusFormat::Tsv),
            other => Err(format!("unknown corpus format '{other}'")),
        }
    }
}

impl CorpusFormat {
    pub fn from_path(path: &Path) -> CorpusFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("tsv") => CorpusFormat::Tsv,
            _ => CorpusFormat::Jsonl,
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct LoadOptions {
    /// Turn the premise-implies-side warning into an error.
    pub strict: bool,
}

#[derive(Clone, Debug, Default)]
pub struct LoadedCorpus {
    pub records: Vec<TweetRecord>,
    pub warnings: Vec<String>,
}

pub fn load_corpus(path: &Path, format: CorpusFormat, opts: LoadOptions) -> Result<LoadedCorpus> {
    let file = File::open(path)?;
    read_corpus(BufReader::new(file), format, opts)
}

pub fn read_corpus<R: BufRead>(
    reader: R,
    format: CorpusFormat,
    opts: LoadOptions,
) -> Result<LoadedCorpus> {
    let raw = match format {
        CorpusFormat::Jsonl => parse_jsonl(reader)?,
        CorpusFormat::Tsv => parse_tsv(reader)?,
    };
    let mut seen = HashSet::new();
    let mut out = LoadedCorpus::default();
    for (line, record) in raw {
        if record.id.is_empty() {
            return Err(CorpusError::Parse { line, message: "empty id".into() });
        }
        if record.raw_text.is_empty() {
            return Err(CorpusError::Parse {
                line,
                message: format!("record '{}' has empty text", record.id),
            });
        }
        if !seen.insert(record.id.clone()) {
            return Err(CorpusError::DuplicateId { line, id: record.id });
        }
        if record.premise == Some(Premise::Present) && record.stance == Some(Stance::Neither) {
            if opts.strict {
                return Err(CorpusError::PremiseWithoutSide { line, id: record.id });
            }
            let msg = format!(
                "line {line}: record '{}' has premise=1 with stance 'neither'",
                record.id
            );
            log::warn!("{msg}");
            out.warnings.push(msg);
        }
        out.records.push(record);
    }
    Ok(out)
}

fn parse_jsonl<R: BufRead>(reader: R) -> Result<Vec<(usize, TweetRecord)>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: TweetRecord = serde_json::from_str(&line).map_err(|e| CorpusError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        out.push((line_no, record));
    }
    Ok(out)
}

fn tsv_column(header: &[String], names: &[&str]) -> Option<usize> {
    header.iter().position(|h| names.contains(&h.as_str()))
}

fn parse_tsv<R: BufRead>(reader: R) -> Result<Vec<(usize, TweetRecord)>> {
    let mut lines = reader.lines();
    let header: Vec<String> = match lines.next() {
        Some(h) => h?.split('\t').map(|c| c.trim().to_lowercase()).collect(),
        None => return Ok(Vec::new()),
    };
    let id_col = tsv_column(&header, &["id", "tweet_id", "tweet id"]).ok_or(CorpusError::MissingColumn("id"))?;
    let text_col = tsv_column(&header, &["text", "tweet", "tweet_text"])
        .ok_or(CorpusError::MissingColumn("text"))?;
    let claim_col = tsv_column(&header, &["claim", "target", "topic"])
        .ok_or(CorpusError::MissingColumn("claim"))?;
    let stance_col = tsv_column(&header, &["stance"]);
    let premise_col = tsv_column(&header, &["premise"]);

    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split('\t').collect();
        let cell = |col: usize| -> Result<&str> {
            cells.get(col).copied().ok_or_else(|| CorpusError::Parse {
                line: line_no,
                message: format!("expected at least {} columns, found {}", col + 1, cells.len()),
            })
        };
        let err = |message: String| CorpusError::Parse { line: line_no, message };
        let claim: ClaimTopic = cell(claim_col)?.parse().map_err(err)?;
        let mut record = TweetRecord::new(cell(id_col)?.trim(), cell(text_col)?, claim);
        if let Some(col) = stance_col {
            let raw = cell(col)?.trim().to_lowercase();
            if !raw.is_empty() {
                // shared-task files spell the third class NONE
                let raw = if raw == "none" { "neither".to_string() } else { raw };
                record.stance = Some(raw.parse().map_err(err)?);
            }
        }
        if let Some(col) = premise_col {
            let raw = cell(col)?.trim();
            if !raw.is_empty() {
                let v: u64 = raw
                    .parse()
                    .map_err(|_| err(format!("premise must be 0 or 1, got '{raw}'")))?;
                record.premise = Some(
                    Premise::from_int(v)
                        .ok_or_else(|| err(format!("premise must be 0 or 1, got {v}")))?,
                );
            }
        }
        out.push((line_no, record));
    }
    Ok(out)
}

pub fn write_jsonl<W: Write>(mut writer: W, records: &[TweetRecord]) -> io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut writer, r)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

pub fn save_jsonl(path: &Path, records: &[TweetRecord]) -> io::Result<()> {
    write_jsonl(io::BufWriter::new(File::create(path)?), records)
}

/// Stance and premise tallies for one claim.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimCounts {
    pub favor: usize,
    pub against: usize,
    pub neither: usize,
    #[serde(rename = "premise_1")]
    pub premise_present: usize,
    #[serde(rename = "premise_0")]
    pub premise_absent: usize,
}

impl ClaimCounts {
    pub fn stance_total(&self) -> usize {
        self.favor + self.against + self.neither
    }

    pub fn premise_total(&self) -> usize {
        self.premise_present + self.premise_absent
    }

    pub fn stance(&self, s: Stance) -> usize {
        match s {
            Stance::Favor => self.favor,
            Stance::Against => self.against,
            Stance::Neither => self.neither,
        }
    }

    pub fn premise(&self, p: Premise) -> usize {
        match p {
            Premise::Present => self.premise_present,
            Premise::Absent => self.premise_absent,
        }
    }

    /// Gold count of `class` under `task`.
    pub fn class_count(&self, task: Task, class: usize) -> usize {
        match task {
            Task::Stance => Stance::from_index(class).map_or(0, |s| self.stance(s)),
            Task::Premise => Premise::from_int(class as u64).map_or(0, |p| self.premise(p)),
        }
    }

    fn cells(&self) -> [(&'static str, usize); 5] {
        [
            ("favor", self.favor),
            ("against", self.against),
            ("neither", self.neither),
            ("premise_1", self.premise_present),
            ("premise_0", self.premise_absent),
        ]
    }
}

/// Per-claim label counts of one split.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitStats {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<String>,
    pub total: usize,
    /// Total as stated by the data's documentation, when it disagrees with the row sums.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reported_total: Option<usize>,
    pub claims: BTreeMap<String, ClaimCounts>,
}

impl SplitStats {
    pub fn from_json(s: &str) -> serde_json::Result<SplitStats> {
        serde_json::from_str(s)
    }

    pub fn load(path: &Path) -> io::Result<SplitStats> {
        let text = std::fs::read_to_string(path)?;
        SplitStats::from_json(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }

    /// Claims whose stance and premise sums disagree, or whose totals do not add up.
    pub fn consistency_problems(&self) -> Vec<String> {
        let mut problems = Vec::new();
        let mut sum = 0;
        for (claim, c) in &self.claims {
            if c.stance_total() != c.premise_total() {
                problems.push(format!(
                    "{claim}: stance sum {} != premise sum {}",
                    c.stance_total(),
                    c.premise_total()
                ));
            }
            sum += c.stance_total();
        }
        if sum != self.total {
            problems.push(format!("claim totals sum to {sum}, split total is {}", self.total));
        }
        problems
    }
}

fn tally(stats: &mut SplitStats, r: &TweetRecord, stance: Stance, premise: Premise) {
    let c = stats.claims.entry(r.claim.name().to_string()).or_default();
    match stance {
        Stance::Favor => c.favor += 1,
        Stance::Against => c.against += 1,
        Stance::Neither => c.neither += 1,
    }
    match premise {
        Premise::Present => c.premise_present += 1,
        Premise::Absent => c.premise_absent += 1,
    }
    stats.total += 1;
}

pub fn summarize(records: &[TweetRecord]) -> Result<SplitStats> {
    let mut stats = SplitStats::default();
    for r in records {
        let stance = r.stance.ok_or_else(|| CorpusError::MissingLabel {
            id: r.id.clone(),
            label: "stance",
        })?;
        let premise = r.premise.ok_or_else(|| CorpusError::MissingLabel {
            id: r.id.clone(),
            label: "premise",
        })?;
        tally(&mut stats, r, stance, premise);
    }
    Ok(stats)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellMismatch {
    pub claim: String,
    pub cell: String,
    pub expected: usize,
    pub actual: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub actual: SplitStats,
    pub mismatches: Vec<CellMismatch>,
    /// `(expected, actual)` when the split totals differ.
    pub total_mismatch: Option<(usize, usize)>,
    pub unlabeled: Vec<String>,
    pub notes: Vec<String>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty() && self.total_mismatch.is_none() && self.unlabeled.is_empty()
    }

    /// Claims with at least one mismatching cell.
    pub fn mismatched_claims(&self) -> Vec<&str> {
        let mut claims: Vec<&str> = self.mismatches.iter().map(|m| m.claim.as_str()).collect();
        claims.dedup();
        claims
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<22} {:>7} {:>7} {:>7} {:>9} {:>9} {:>7}", "claim", "favor", "against", "neither", "premise_1", "premise_0", "total")?;
        for (claim, c) in &self.actual.claims {
            writeln!(
                f,
                "{:<22} {:>7} {:>7} {:>7} {:>9} {:>9} {:>7}",
                claim,
                c.favor,
                c.against,
                c.neither,
                c.premise_present,
                c.premise_absent,
                c.stance_total()
            )?;
        }
        writeln!(f, "total: {}", self.actual.total)?;
        for m in &self.mismatches {
            writeln!(f, "MISMATCH {} {}: expected {}, found {}", m.claim, m.cell, m.expected, m.actual)?;
        }
        if let Some((e, a)) = self.total_mismatch {
            writeln!(f, "MISMATCH total: expected {e}, found {a}")?;
        }
        for id in &self.unlabeled {
            writeln!(f, "UNLABELED {id}")?;
        }
        for n in &self.notes {
            writeln!(f, "note: {n}")?;
        }
        write!(f, "validation: {}", if self.passed() { "PASS" } else { "FAIL" })
    }
}

/// Compares the tallies of `records` against `expected`, cell by cell.
pub fn validate_split(records: &[TweetRecord], expected: &SplitStats) -> ValidationReport {
    let mut report = ValidationReport::default();
    for r in records {
        match (r.stance, r.premise) {
            (Some(s), Some(p)) => tally(&mut report.actual, r, s, p),
            _ => report.unlabeled.push(r.id.clone()),
        }
    }
    report.actual.split = expected.split.clone();

    let zero = ClaimCounts::default();
    let claims: std::collections::BTreeSet<&String> =
        expected.claims.keys().chain(report.actual.claims.keys()).collect();
    for claim in claims {
        let e = expected.claims.get(claim).unwrap_or(&zero);
        let a = report.actual.claims.get(claim).unwrap_or(&zero);
        for ((cell, ev), (_, av)) in e.cells().into_iter().zip(a.cells()) {
            if ev != av {
                report.mismatches.push(CellMismatch {
                    claim: claim.clone(),
                    cell: cell.to_string(),
                    expected: ev,
                    actual: av,
                });
            }
        }
    }
    if expected.total != report.actual.total {
        report.total_mismatch = Some((expected.total, report.actual.total));
    }
    for p in expected.consistency_problems() {
        report.notes.push(format!("expected stats inconsistent: {p}"));
    }
    if let Some(stated) = expected.reported_total {
        if stated != expected.total {
            report.notes.push(format!(
                "documented total {stated} differs from the row sum {}; validated against the row sum",
                expected.total
            ));
        }
    }
    report
}
