use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{Prediction, Verifier, VerifierInput, VerifyError};
use crate::corpus::Label;
use crate::http::{self, HttpFailure};

impl From<HttpFailure> for VerifyError {
    fn from(f: HttpFailure) -> Self {
        match f {
            HttpFailure::Transport(m) => VerifyError::Transport(m),
            HttpFailure::Status { status, body } => VerifyError::Http { status, body },
            HttpFailure::Malformed(m) => VerifyError::Malformed(m),
        }
    }
}

/// In-context exemplar sent with every request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shot {
    pub claim: String,
    pub evidence: Vec<String>,
    pub label: Label,
}

#[derive(Serialize)]
struct VerifyRequest<'a> {
    claim: &'a str,
    evidence: &'a [String],
    shots: &'a [Shot],
}

#[derive(Deserialize)]
struct VerifyResponse {
    label: String,
    #[serde(default)]
    probs: Option<BTreeMap<String, f64>>,
}

/// Client for an external verifier at `POST {endpoint}/verify`.
#[derive(Debug, Clone)]
pub struct RemoteVerifier {
    url: String,
    client: reqwest::blocking::Client,
    shots: Vec<Shot>,
}

impl RemoteVerifier {
    pub fn new(endpoint: &str) -> Self {
        Self::with_timeout(endpoint, Duration::from_secs(120))
    }

    pub fn with_timeout(endpoint: &str, timeout: Duration) -> Self {
        RemoteVerifier {
            url: http::join(endpoint, "verify"),
            client: http::client(timeout),
            shots: Vec::new(),
        }
    }

    /// Keeps the first `max` exemplars, in the given order.
    pub fn with_shots(mut self, shots: impl IntoIterator<Item = Shot>, max: usize) -> Self {
        self.shots = shots.into_iter().take(max).collect();
        self
    }

    pub fn shots(&self) -> &[Shot] {
        &self.shots
    }
}

fn parse_label(s: &str) -> Result<Label, VerifyError> {
    s.parse().map_err(|_| VerifyError::UnknownLabel(s.to_string()))
}

impl Verifier for RemoteVerifier {
    fn verify(&self, input: &VerifierInput) -> Result<Prediction, VerifyError> {
        input.validate()?;
        let req = VerifyRequest {
            claim: &input.claim,
            evidence: &input.evidence,
            shots: &self.shots,
        };
        let resp: VerifyResponse = http::post_json(&self.client, &self.url, &req, None)?;
        let label = parse_label(&resp.label)?;
        let probs = match resp.probs {
            None => None,
            Some(raw) => {
                let mut out = BTreeMap::new();
                for (k, v) in raw {
                    if !v.is_finite() {
                        return Err(VerifyError::Malformed(format!("probability for {k} is {v}")));
                    }
                    out.insert(parse_label(&k)?, v);
                }
                Some(out)
            }
        };
        Ok(Prediction { label, probs })
    }
}
