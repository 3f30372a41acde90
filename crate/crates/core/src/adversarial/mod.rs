//! Symmetric adversarial dataset construction and its quality control.

mod llm;
mod prompt;
mod qc;
mod rules;
mod symmetric;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{ClaimRecord, Label};
use crate::segmenter::{jaccard, word_set, Lexicon};

pub use llm::{rewrite_all_via_llm, rewrite_via_llm, ChatClient, ChatMessage, HttpChatClient, LlmOptions};
pub use prompt::{build_prompt, parse_completion, RewriteExemplar, PromptTemplate, PLACEHOLDERS};
pub use qc::{
    agreement_report, cohen_kappa, sample_for_qc, AgreementReport, AnnotationRecord, AnnotationStore, AnnotatorVsDataset,
    KappaReport, PairwiseAgreement, QcItem,
};
pub use rules::{rewrite_rule_based, RuleSet};
pub use symmetric::build_symmetric;

pub const DEFAULT_OVERLAP_THRESHOLD: f64 = 0.6;
pub const DEFAULT_RETRIES: usize = 3;

#[derive(Debug, Error)]
pub enum AdversarialError {
    #[error("{id}: no rewrite rule applies")]
    NotRewritable { id: String },
    #[error("{id}: {reason}")]
    Invariant { id: String, reason: String },
    #[error("{id}: NEI instances have no opposite label")]
    NeiInstance { id: String },
    #[error("{id}: no gold evidence to rewrite")]
    NoEvidence { id: String },
    #[error("cannot parse completion: {0}")]
    Parse(String),
    #[error("{id}: gave up after {attempts} attempts, last failure: {last}")]
    RetriesExhausted { id: String, attempts: usize, last: String },
    #[error("prompt template: {0}")]
    Template(String),
    #[error("claim text {0:?} occurs in more than one pair")]
    DuplicateClaim(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("fraction must be in (0, 1], got {0}")]
    InvalidFraction(f64),
    #[error("raters have {a} and {b} items")]
    LengthMismatch { a: usize, b: usize },
    #[error("agreement needs at least 2 items, got {0}")]
    TooFewItems(usize),
    #[error("environment variable {0} is not set")]
    MissingEnv(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("LLM endpoint returned HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("malformed LLM response: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// A labeled claim/evidence pair to be rewritten.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewriteInstance {
    pub id: String,
    pub claim: String,
    pub evidence: String,
    pub label: Label,
    #[serde(default = "unknown_domain")]
    pub domain: String,
}

fn unknown_domain() -> String {
    "unknown".into()
}

impl RewriteInstance {
    /// Takes the gold evidence sentences of `record`, concatenated in order.
    pub fn from_record(record: &ClaimRecord) -> Result<Self, AdversarialError> {
        if record.label == Label::Nei {
            return Err(AdversarialError::NeiInstance { id: record.id.clone() });
        }
        let evidence = record.gold_texts().concat();
        if evidence.trim().is_empty() {
            return Err(AdversarialError::NoEvidence { id: record.id.clone() });
        }
        Ok(RewriteInstance {
            id: record.id.clone(),
            claim: record.text.clone(),
            evidence,
            label: record.label,
            domain: record.domain.clone(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewriteSource {
    Llm,
    Rule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewritePair {
    pub original: RewriteInstance,
    pub generated_claim: String,
    pub generated_evidence: String,
    pub rewrite_log: Vec<String>,
    pub source: RewriteSource,
}

impl RewritePair {
    pub fn id(&self) -> &str {
        &self.original.id
    }

    /// Checks the pair invariants: binary label, non-empty generated texts
    /// distinct from the originals, and claim overlap at or above `threshold`.
    pub fn validate(&self, lexicon: &Lexicon, threshold: f64) -> Result<(), AdversarialError> {
        let fail = |reason: String| AdversarialError::Invariant {
            id: self.original.id.clone(),
            reason,
        };
        if self.original.label == Label::Nei {
            return Err(AdversarialError::NeiInstance {
                id: self.original.id.clone(),
            });
        }
        let gc = self.generated_claim.trim();
        let ge = self.generated_evidence.trim();
        if gc.is_empty() || ge.is_empty() {
            return Err(fail("generated claim or evidence is empty".into()));
        }
        if gc == self.original.claim.trim() {
            return Err(fail("generated claim is identical to the original".into()));
        }
        if ge == self.original.evidence.trim() {
            return Err(fail("generated evidence is identical to the original".into()));
        }
        let overlap = word_overlap(&self.original.claim, &self.generated_claim, lexicon);
        if overlap < threshold {
            return Err(fail(format!("claim word overlap {overlap:.3} is below {threshold}")));
        }
        Ok(())
    }
}

/// Jaccard similarity of the segmented word sets; 1.0 when both are empty.
pub fn word_overlap(a: &str, b: &str, lexicon: &Lexicon) -> f64 {
    jaccard(&word_set(a, lexicon), &word_set(b, lexicon))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlap_examples() {
        let lex = Lexicon::new();
        assert_eq!(word_overlap("甲乙丙", "甲乙丙", &lex), 1.0);
        assert_eq!(word_overlap("甲乙", "丙丁", &lex), 0.0);
        assert_eq!(word_overlap("甲乙丙", "甲乙丁", &lex), 0.5);
        assert_eq!(word_overlap("", "，", &lex), 1.0);
    }

    fn pair(gc: &str, ge: &str) -> RewritePair {
        RewritePair {
            original: RewriteInstance {
                id: "p".into(),
                claim: "央行上调利率二十个基点".into(),
                evidence: "央行宣布上调利率。".into(),
                label: Label::Supported,
                domain: "finance".into(),
            },
            generated_claim: gc.into(),
            generated_evidence: ge.into(),
            rewrite_log: vec![],
            source: RewriteSource::Rule,
        }
    }

    #[test]
    fn validate_rejects_identity_and_low_overlap() {
        let lex = Lexicon::from_words(["央行", "上调", "下调", "利率", "基点", "二十"]);
        assert!(pair("央行下调利率二十个基点", "央行宣布下调利率。").validate(&lex, 0.6).is_ok());
        assert!(pair("央行上调利率二十个基点", "央行宣布下调利率。").validate(&lex, 0.6).is_err());
        assert!(pair("天气晴朗", "央行宣布下调利率。").validate(&lex, 0.6).is_err());
        assert!(pair("央行下调利率二十个基点", "").validate(&lex, 0.6).is_err());
    }
}
