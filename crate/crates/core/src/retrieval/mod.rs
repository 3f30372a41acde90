//! Document-level evidence retrieval.
//!
//! A token scorer assigns a score in [0, 1] to every character of an evidence
//! document. Scores are averaged per sentence; a sentence is selected as
//! evidence when its mean strictly exceeds the threshold. The pairwise
//! semantic ranker baseline scores sentences independently instead.

mod eval;
mod lexical;
mod remote;
mod semantic;

pub use eval::{bootstrap_interval, recall_at_k, Interval, RecallReport, RecallVariant};
pub use lexical::{lexical_token_scorer, LexicalTokenScorer};
pub use remote::{RemotePairScorer, RemoteTokenScorer};
pub use semantic::{semantic_ranker, BigramIdf, SemanticRanker};

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{ClaimRecord, EvidenceDocument, SentenceRef};

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("document {doc_id}: {got} scores for {expected} characters")]
    Alignment {
        doc_id: String,
        expected: usize,
        got: usize,
    },
    #[error("document {doc_id}: score {value} at position {position} is outside [0, 1]")]
    Range {
        doc_id: String,
        position: usize,
        value: f64,
    },
    #[error("invalid retrieval config: {0}")]
    Config(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("scorer returned HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("malformed scorer response: {0}")]
    Malformed(String),
    #[error("k must be at least 1")]
    InvalidK,
    #[error("need at least {needed} values, got {got}")]
    TooFewValues { needed: usize, got: usize },
}

/// One score per character of a document.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenScoreVector {
    doc_id: String,
    scores: Vec<f64>,
}

impl TokenScoreVector {
    /// Rejects non-finite or out-of-range scores; never clamps.
    pub fn new(doc_id: impl Into<String>, scores: Vec<f64>) -> Result<Self, RetrievalError> {
        let doc_id = doc_id.into();
        check_range(&doc_id, &scores)?;
        Ok(TokenScoreVector { doc_id, scores })
    }

    pub fn doc_id(&self) -> &str {
        &self.doc_id
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

fn check_range(doc_id: &str, scores: &[f64]) -> Result<(), RetrievalError> {
    match scores
        .iter()
        .position(|s| !s.is_finite() || !(0.0..=1.0).contains(s))
    {
        Some(position) => Err(RetrievalError::Range {
            doc_id: doc_id.to_string(),
            position,
            value: scores[position],
        }),
        None => Ok(()),
    }
}

/// Which sentences are handed to the verifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RetrievalMode {
    /// Sentences whose mean exceeds the threshold.
    Select,
    /// The top-k ranked sentences.
    Rank,
    /// Selected sentences that also rank within the top k.
    #[default]
    Both,
}

impl std::str::FromStr for RetrievalMode {
    type Err = RetrievalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "select" => Ok(RetrievalMode::Select),
            "rank" => Ok(RetrievalMode::Rank),
            "both" => Ok(RetrievalMode::Both),
            other => Err(RetrievalError::Config(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetrievalConfig {
    pub threshold: f64,
    pub k: usize,
    pub mode: RetrievalMode,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        RetrievalConfig {
            threshold: 0.5,
            k: 5,
            mode: RetrievalMode::Both,
        }
    }
}

impl RetrievalConfig {
    pub fn validate(&self) -> Result<(), RetrievalError> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(RetrievalError::Config(format!(
                "threshold {} outside [0, 1]",
                self.threshold
            )));
        }
        if self.k == 0 {
            return Err(RetrievalError::InvalidK);
        }
        Ok(())
    }
}

/// Per-document aggregation outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalResult {
    pub doc_id: String,
    /// Mean token score of each sentence, by sentence index.
    pub sentence_scores: Vec<f64>,
    /// All sentence indices, best first; ties go to the earlier sentence.
    pub ranking: Vec<usize>,
    /// Indices of sentences whose mean exceeds the threshold, ascending.
    pub selected: Vec<usize>,
}

impl RetrievalResult {
    fn from_sentence_scores(doc_id: &str, sentence_scores: Vec<f64>, threshold: f64) -> Self {
        let mut ranking: Vec<usize> = (0..sentence_scores.len()).collect();
        ranking.sort_by(|&a, &b| by_score_desc(sentence_scores[a], sentence_scores[b]).then(a.cmp(&b)));
        let selected = sentence_scores
            .iter()
            .enumerate()
            .filter(|(_, &s)| s > threshold)
            .map(|(i, _)| i)
            .collect();
        RetrievalResult {
            doc_id: doc_id.to_string(),
            sentence_scores,
            ranking,
            selected,
        }
    }
}

fn by_score_desc(a: f64, b: f64) -> Ordering {
    b.total_cmp(&a)
}

/// Averages token scores within each sentence's character span.
pub fn aggregate(
    doc: &EvidenceDocument,
    scores: &TokenScoreVector,
    cfg: &RetrievalConfig,
) -> Result<RetrievalResult, RetrievalError> {
    cfg.validate()?;
    let expected = doc.char_len();
    if scores.len() != expected {
        return Err(RetrievalError::Alignment {
            doc_id: doc.doc_id.clone(),
            expected,
            got: scores.len(),
        });
    }
    check_range(&doc.doc_id, scores.scores())?;
    let means = doc
        .sentences
        .iter()
        .map(|s| {
            let span = &scores.scores()[s.start..s.end];
            span.iter().sum::<f64>() / span.len() as f64
        })
        .collect();
    Ok(RetrievalResult::from_sentence_scores(&doc.doc_id, means, cfg.threshold))
}

/// Produces one score per character of a document.
pub trait TokenScorer: Send + Sync {
    fn score_tokens(&self, claim: &str, doc: &EvidenceDocument) -> Result<TokenScoreVector, RetrievalError>;
}

/// Produces one score per sentence of a document.
pub trait SentenceScorer: Send + Sync {
    fn score_sentences(&self, claim: &str, doc: &EvidenceDocument) -> Result<Vec<f64>, RetrievalError>;
}

/// Adapts a token scorer to sentence scores by mean aggregation.
pub struct Aggregated<T>(pub T);

impl<T: TokenScorer> SentenceScorer for Aggregated<T> {
    fn score_sentences(&self, claim: &str, doc: &EvidenceDocument) -> Result<Vec<f64>, RetrievalError> {
        let scores = self.0.score_tokens(claim, doc)?;
        let cfg = RetrievalConfig::default();
        Ok(aggregate(doc, &scores, &cfg)?.sentence_scores)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredSentence {
    pub sentence: SentenceRef,
    pub score: f64,
}

/// Retrieval over all documents attached to one claim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimRetrieval {
    pub claim_id: String,
    /// Every sentence of every document, best first. Ties keep document
    /// order, then sentence order.
    pub ranked: Vec<ScoredSentence>,
    pub selected: Vec<SentenceRef>,
}

impl ClaimRetrieval {
    pub fn top_k(&self, k: usize) -> Vec<SentenceRef> {
        self.ranked.iter().take(k).map(|s| s.sentence.clone()).collect()
    }

    /// Evidence sentences for the verifier, in rank order. Falls back to the
    /// top-ranked sentence when the mode yields nothing.
    pub fn evidence_refs(&self, cfg: &RetrievalConfig) -> Vec<SentenceRef> {
        let picked: Vec<SentenceRef> = match cfg.mode {
            RetrievalMode::Rank => self.top_k(cfg.k),
            RetrievalMode::Select => self
                .ranked
                .iter()
                .filter(|s| self.selected.contains(&s.sentence))
                .map(|s| s.sentence.clone())
                .collect(),
            RetrievalMode::Both => self
                .ranked
                .iter()
                .take(cfg.k)
                .filter(|s| self.selected.contains(&s.sentence))
                .map(|s| s.sentence.clone())
                .collect(),
        };
        if picked.is_empty() {
            self.top_k(1)
        } else {
            picked
        }
    }

    pub fn evidence_texts(&self, record: &ClaimRecord, cfg: &RetrievalConfig) -> Vec<String> {
        self.evidence_refs(cfg)
            .iter()
            .filter_map(|r| record.sentence_text(r))
            .map(|t| t.trim().to_string())
            .collect()
    }
}

/// Scores each document of the claim independently and merges the results.
pub fn retrieve_claim(
    record: &ClaimRecord,
    scorer: &dyn SentenceScorer,
    cfg: &RetrievalConfig,
) -> Result<ClaimRetrieval, RetrievalError> {
    cfg.validate()?;
    let mut ranked = Vec::new();
    let mut selected = Vec::new();
    for doc in &record.documents {
        let scores = scorer.score_sentences(&record.text, doc)?;
        if scores.len() != doc.sentences.len() {
            return Err(RetrievalError::Alignment {
                doc_id: doc.doc_id.clone(),
                expected: doc.sentences.len(),
                got: scores.len(),
            });
        }
        let result = RetrievalResult::from_sentence_scores(&doc.doc_id, scores, cfg.threshold);
        for &i in &result.selected {
            selected.push(SentenceRef {
                doc_id: doc.doc_id.clone(),
                sent_index: i,
            });
        }
        for (i, &score) in result.sentence_scores.iter().enumerate() {
            ranked.push(ScoredSentence {
                sentence: SentenceRef {
                    doc_id: doc.doc_id.clone(),
                    sent_index: i,
                },
                score,
            });
        }
    }
    // stable sort keeps document then sentence order among ties
    ranked.sort_by(|a, b| by_score_desc(a.score, b.score));
    Ok(ClaimRetrieval {
        claim_id: record.id.clone(),
        ranked,
        selected,
    })
}

/// Retrieves for every record with at most `max_in_flight` claims scored
/// concurrently. Output order follows input order.
pub fn retrieve_all(
    records: &[ClaimRecord],
    scorer: &dyn SentenceScorer,
    cfg: &RetrievalConfig,
    max_in_flight: usize,
) -> Result<Vec<ClaimRetrieval>, RetrievalError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(max_in_flight.max(1))
        .build()
        .map_err(|e| RetrievalError::Config(e.to_string()))?;
    pool.install(|| {
        records
            .par_iter()
            .map(|r| retrieve_claim(r, scorer, cfg))
            .collect()
    })
}
