//! Claim verification over selected evidence.

mod features;
mod linear;
mod metrics;
mod remote;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Label;

pub use features::{featurize, named_features, overlap_bin, FeatureConfig, FeatureMode, SparseVector, OVERLAP_BINS};
pub use linear::{loss_and_grad, train, train_warm, Example, Gradient, Hyperparams, LinearVerifierModel, TrainOutcome};
pub use metrics::{evaluate, ClassMetrics, MetricsReport};
pub use remote::{RemoteVerifier, Shot};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("claim text is empty")]
    EmptyClaim,
    #[error("training data has a single class ({0}); need at least two")]
    SingleClass(Label),
    #[error("training data is empty")]
    EmptyDataset,
    #[error("invalid hyperparameters: {0}")]
    Hyperparams(String),
    #[error("batch is empty")]
    EmptyBatch,
    #[error("{preds} predictions but {golds} gold labels")]
    LengthMismatch { preds: usize, golds: usize },
    #[error("nothing to evaluate")]
    EmptyEval,
    #[error("label {0} is not a class of the warm-start model")]
    UnknownClass(Label),
    #[error("model was trained with lexicon {expected}, got {got}")]
    LexiconMismatch { expected: String, got: String },
    #[error("bad model file: {0}")]
    ModelFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Write(#[from] crate::io::WriteError),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("verifier returned HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("malformed verifier response: {0}")]
    Malformed(String),
    #[error("verifier returned unknown label {0:?}")]
    UnknownLabel(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifierInput {
    pub claim: String,
    /// In retrieval-rank order.
    pub evidence: Vec<String>,
}

impl VerifierInput {
    pub fn new(claim: impl Into<String>, evidence: Vec<String>) -> Self {
        VerifierInput {
            claim: claim.into(),
            evidence,
        }
    }

    pub fn validate(&self) -> Result<(), VerifyError> {
        if self.claim.trim().is_empty() {
            return Err(VerifyError::EmptyClaim);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probs: Option<BTreeMap<Label, f64>>,
}

pub trait Verifier: Send + Sync {
    fn verify(&self, input: &VerifierInput) -> Result<Prediction, VerifyError>;
}

/// Runs `verifier` over `inputs` with at most `max_in_flight` concurrent calls.
/// Output order follows input order.
pub fn verify_all(
    verifier: &dyn Verifier,
    inputs: &[VerifierInput],
    max_in_flight: usize,
) -> Result<Vec<Prediction>, VerifyError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(max_in_flight.max(1))
        .build()
        .expect("thread pool builds");
    pool.install(|| inputs.par_iter().map(|i| verifier.verify(i)).collect())
}

/// A verifier that always answers `label`.
#[derive(Debug, Clone, Copy)]
pub struct ConstantVerifier(pub Label);

impl Verifier for ConstantVerifier {
    fn verify(&self, _input: &VerifierInput) -> Result<Prediction, VerifyError> {
        Ok(Prediction {
            label: self.0,
            probs: None,
        })
    }
}
