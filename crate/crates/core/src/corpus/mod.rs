//! Claim/evidence data model, canonical JSONL I/O, and corpus statistics.

mod ingest;
mod stats;

pub use ingest::{ingest_jsonl, ingest_str, IngestMapping, IngestOutcome, Reject};
pub use stats::{corpus_stats, StatsReport};

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid mapping: {0}")]
    Mapping(String),
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
    #[error("duplicate record id {0:?}")]
    DuplicateId(String),
    #[error("record {id}: {reason}")]
    InvalidRecord { id: String, reason: String },
    #[error("line {line_no}: {reason}")]
    Rejected { line_no: usize, reason: String },
    #[error("corpus is empty")]
    Empty,
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Veracity label. Declaration order is the canonical class order used for
/// tie-breaking everywhere (SUPPORTED < REFUTED < NEI).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "SUPPORTED")]
    Supported,
    #[serde(rename = "REFUTED")]
    Refuted,
    #[serde(rename = "NEI")]
    Nei,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::Supported, Label::Refuted, Label::Nei];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Supported => "SUPPORTED",
            Label::Refuted => "REFUTED",
            Label::Nei => "NEI",
        }
    }

    /// The opposite binary label. NEI has no opposite.
    pub fn flipped(self) -> Option<Label> {
        match self {
            Label::Supported => Some(Label::Refuted),
            Label::Refuted => Some(Label::Supported),
            Label::Nei => None,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "SUPPORTED" => Ok(Label::Supported),
            "REFUTED" => Ok(Label::Refuted),
            "NEI" => Ok(Label::Nei),
            other => Err(CorpusError::UnknownLabel(other.to_string())),
        }
    }
}

/// Provenance of a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    #[default]
    Original,
    Generated,
    Cross,
}

impl FromStr for Source {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "original" => Ok(Source::Original),
            "generated" => Ok(Source::Generated),
            "cross" => Ok(Source::Cross),
            other => Err(format!("unknown source tag {other:?}")),
        }
    }
}

/// A sentence of an evidence document. `start`/`end` are character (not byte)
/// offsets into the document text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub index: usize,
    pub text: String,
    pub start: usize,
    pub end: usize,
}

impl Sentence {
    pub fn char_len(&self) -> usize {
        self.end - self.start
    }
}

const SENTENCE_DELIMITERS: [char; 5] = ['。', '！', '？', '；', '\n'];

pub fn is_sentence_delimiter(c: char) -> bool {
    SENTENCE_DELIMITERS.contains(&c)
}

/// Splits on 。！？；and newline. The delimiter stays with the preceding
/// sentence; segments made only of whitespace and delimiters are dropped.
pub fn split_sentences(raw_text: &str) -> Vec<Sentence> {
    let mut sentences = Vec::new();
    let mut current = String::new();
    let mut start = 0;
    let mut pos = 0;

    let mut flush = |current: &mut String, start: usize, end: usize| {
        if current
            .chars()
            .any(|c| !c.is_whitespace() && !is_sentence_delimiter(c))
        {
            sentences.push(Sentence {
                index: sentences.len(),
                text: std::mem::take(current),
                start,
                end,
            });
        } else {
            current.clear();
        }
    };

    for c in raw_text.chars() {
        current.push(c);
        pos += 1;
        if is_sentence_delimiter(c) {
            flush(&mut current, start, pos);
            start = pos;
        }
    }
    if !current.is_empty() {
        flush(&mut current, start, pos);
    }
    sentences
}

/// Normalised form used to match literal gold evidence against sentences.
pub(crate) fn normalize_sentence(text: &str) -> &str {
    text.trim()
        .trim_end_matches(|c: char| is_sentence_delimiter(c) || c.is_whitespace())
        .trim()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvidenceDocument {
    pub doc_id: String,
    pub raw_text: String,
    pub sentences: Vec<Sentence>,
}

impl EvidenceDocument {
    pub fn new(doc_id: impl Into<String>, raw_text: impl Into<String>) -> Self {
        let raw_text = raw_text.into();
        let sentences = split_sentences(&raw_text);
        EvidenceDocument {
            doc_id: doc_id.into(),
            raw_text,
            sentences,
        }
    }

    pub fn char_len(&self) -> usize {
        self.raw_text.chars().count()
    }

    pub fn sentence(&self, index: usize) -> Option<&Sentence> {
        self.sentences.get(index)
    }
}

/// Stable reference to one sentence of one document.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SentenceRef {
    pub doc_id: String,
    pub sent_index: usize,
}

impl fmt::Display for SentenceRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.doc_id, self.sent_index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GoldEvidence {
    Indexed { doc_id: String, sent_index: usize },
    Literal(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClaimRecord {
    pub id: String,
    pub text: String,
    pub label: Label,
    pub domain: String,
    pub gold_evidence: Vec<GoldEvidence>,
    pub documents: Vec<EvidenceDocument>,
    pub source: Source,
}

impl ClaimRecord {
    /// Resolves gold evidence to sentence references. Literal strings that
    /// match no sentence are returned separately.
    pub fn resolve_gold(&self) -> (Vec<SentenceRef>, Vec<String>) {
        let mut refs = Vec::new();
        let mut unmatched = Vec::new();
        for gold in &self.gold_evidence {
            match gold {
                GoldEvidence::Indexed { doc_id, sent_index } => {
                    let found = self
                        .documents
                        .iter()
                        .any(|d| &d.doc_id == doc_id && *sent_index < d.sentences.len());
                    if found {
                        refs.push(SentenceRef {
                            doc_id: doc_id.clone(),
                            sent_index: *sent_index,
                        });
                    }
                }
                GoldEvidence::Literal(text) => {
                    let wanted = normalize_sentence(text);
                    let mut hit = false;
                    for doc in &self.documents {
                        for s in &doc.sentences {
                            if !wanted.is_empty() && normalize_sentence(&s.text) == wanted {
                                refs.push(SentenceRef {
                                    doc_id: doc.doc_id.clone(),
                                    sent_index: s.index,
                                });
                                hit = true;
                            }
                        }
                    }
                    if !hit {
                        unmatched.push(text.clone());
                    }
                }
            }
        }
        let mut seen = HashSet::new();
        refs.retain(|r| seen.insert(r.clone()));
        (refs, unmatched)
    }

    /// Gold evidence as text, in annotation order. Unmatched literals are
    /// kept verbatim so no annotated evidence is lost.
    pub fn gold_texts(&self) -> Vec<String> {
        let mut out = Vec::new();
        for gold in &self.gold_evidence {
            match gold {
                GoldEvidence::Indexed { doc_id, sent_index } => {
                    if let Some(s) = self
                        .documents
                        .iter()
                        .find(|d| &d.doc_id == doc_id)
                        .and_then(|d| d.sentence(*sent_index))
                    {
                        out.push(s.text.trim().to_string());
                    }
                }
                GoldEvidence::Literal(text) => out.push(text.trim().to_string()),
            }
        }
        out
    }

    pub fn sentence_text(&self, r: &SentenceRef) -> Option<&str> {
        self.documents
            .iter()
            .find(|d| d.doc_id == r.doc_id)
            .and_then(|d| d.sentence(r.sent_index))
            .map(|s| s.text.as_str())
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.id.trim().is_empty() {
            return Err("empty id".into());
        }
        if self.text.trim().is_empty() {
            return Err("claim text is empty".into());
        }
        let mut doc_ids = HashSet::new();
        for doc in &self.documents {
            if !doc_ids.insert(doc.doc_id.as_str()) {
                return Err(format!("duplicate doc_id {:?}", doc.doc_id));
            }
        }
        for gold in &self.gold_evidence {
            if let GoldEvidence::Indexed { doc_id, sent_index } = gold {
                let doc = self
                    .documents
                    .iter()
                    .find(|d| &d.doc_id == doc_id)
                    .ok_or_else(|| format!("gold evidence references unknown doc {doc_id:?}"))?;
                if *sent_index >= doc.sentences.len() {
                    return Err(format!(
                        "gold evidence {doc_id}#{sent_index} out of range ({} sentences)",
                        doc.sentences.len()
                    ));
                }
            }
        }
        Ok(())
    }

    fn to_canonical(&self) -> CanonicalRecord {
        CanonicalRecord {
            id: self.id.clone(),
            claim: self.text.clone(),
            label: self.label,
            domain: self.domain.clone(),
            gold_evidence: self.gold_evidence.clone(),
            documents: self
                .documents
                .iter()
                .map(|d| CanonicalDocument {
                    doc_id: d.doc_id.clone(),
                    text: d.raw_text.clone(),
                })
                .collect(),
            source: self.source,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CanonicalDocument {
    doc_id: String,
    text: String,
}

/// On-disk record shape.
#[derive(Debug, Serialize, Deserialize)]
struct CanonicalRecord {
    id: String,
    claim: String,
    label: Label,
    domain: String,
    #[serde(default)]
    gold_evidence: Vec<GoldEvidence>,
    #[serde(default)]
    documents: Vec<CanonicalDocument>,
    #[serde(default)]
    source: Source,
}

impl From<CanonicalRecord> for ClaimRecord {
    fn from(c: CanonicalRecord) -> Self {
        ClaimRecord {
            id: c.id,
            text: c.claim,
            label: c.label,
            domain: c.domain,
            gold_evidence: c.gold_evidence,
            documents: c
                .documents
                .into_iter()
                .map(|d| EvidenceDocument::new(d.doc_id, d.text))
                .collect(),
            source: c.source,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    records: Vec<ClaimRecord>,
}

impl Corpus {
    pub fn new(records: Vec<ClaimRecord>) -> Result<Self, CorpusError> {
        let mut ids = HashSet::new();
        for r in &records {
            r.validate().map_err(|reason| CorpusError::InvalidRecord {
                id: r.id.clone(),
                reason,
            })?;
            if !ids.insert(r.id.as_str()) {
                return Err(CorpusError::DuplicateId(r.id.clone()));
            }
        }
        Ok(Corpus { records })
    }

    pub fn records(&self) -> &[ClaimRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<ClaimRecord> {
        self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&ClaimRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ClaimRecord> {
        self.records.iter()
    }

    pub fn label_index(&self) -> HashMap<&str, Label> {
        self.records.iter().map(|r| (r.id.as_str(), r.label)).collect()
    }

    /// Canonical JSONL, one record per line, newline-terminated.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&record_to_json_line(r));
            out.push('\n');
        }
        out
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<(), crate::io::WriteError> {
        crate::io::write_atomic(path, self.to_jsonl().as_bytes())
    }

    /// Reads a canonical corpus; any rejected line is an error.
    pub fn load(path: &Path) -> Result<Corpus, CorpusError> {
        let outcome = ingest_jsonl(path, &IngestMapping::canonical())?;
        if let Some(r) = outcome.rejects.first() {
            return Err(CorpusError::Rejected {
                line_no: r.line_no,
                reason: r.reason.clone(),
            });
        }
        Ok(outcome.corpus)
    }

    pub fn parse_jsonl(text: &str) -> Result<Corpus, CorpusError> {
        let outcome = ingest_str(text, &IngestMapping::canonical())?;
        if let Some(r) = outcome.rejects.first() {
            return Err(CorpusError::Rejected {
                line_no: r.line_no,
                reason: r.reason.clone(),
            });
        }
        Ok(outcome.corpus)
    }
}

impl<'a> IntoIterator for &'a Corpus {
    type Item = &'a ClaimRecord;
    type IntoIter = std::slice::Iter<'a, ClaimRecord>;

    fn into_iter(self) -> Self::IntoIter {
        self.records.iter()
    }
}

pub fn record_to_json_line(r: &ClaimRecord) -> String {
    serde_json::to_string(&r.to_canonical()).expect("canonical record serializes")
}
