//! Workbench for Chinese evidence-based fact checking.
//!
//! The pipeline scores every character of an evidence document, averages the
//! scores per sentence and keeps sentences whose mean exceeds a threshold;
//! a verifier then labels the claim from the selected evidence. Around that
//! pipeline sit the forensic tools: label/phrase bias audits, symmetric
//! adversarial dataset construction with human quality control, and
//! inoculation sweeps.

pub mod adversarial;
pub mod bias_audit;
pub mod corpus;
pub mod inoculation;
pub mod io;
mod http;
pub mod retrieval;
pub mod report;
pub mod segmenter;
pub mod verification;

pub use corpus::{ClaimRecord, Corpus, EvidenceDocument, Label, Sentence, SentenceRef, Source};
pub use segmenter::Lexicon;
