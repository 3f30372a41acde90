use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{check_range, RetrievalError, SentenceScorer, TokenScoreVector, TokenScorer};
use crate::corpus::EvidenceDocument;
use crate::http::{self, HttpFailure};

impl From<HttpFailure> for RetrievalError {
    fn from(f: HttpFailure) -> Self {
        match f {
            HttpFailure::Transport(m) => RetrievalError::Transport(m),
            HttpFailure::Status { status, body } => RetrievalError::Http { status, body },
            HttpFailure::Malformed(m) => RetrievalError::Malformed(m),
        }
    }
}

#[derive(Serialize)]
struct ScoreTokensRequest<'a> {
    claim: &'a str,
    doc_id: &'a str,
    text: &'a str,
}

#[derive(Deserialize)]
struct ScoreTokensResponse {
    scores: Vec<f64>,
}

/// Client for a trained token scorer served at `POST {endpoint}/score_tokens`.
#[derive(Debug, Clone)]
pub struct RemoteTokenScorer {
    url: String,
    client: reqwest::blocking::Client,
}

impl RemoteTokenScorer {
    pub fn new(endpoint: &str) -> Self {
        Self::with_timeout(endpoint, Duration::from_secs(60))
    }

    pub fn with_timeout(endpoint: &str, timeout: Duration) -> Self {
        RemoteTokenScorer {
            url: http::join(endpoint, "score_tokens"),
            client: http::client(timeout),
        }
    }
}

impl TokenScorer for RemoteTokenScorer {
    fn score_tokens(&self, claim: &str, doc: &EvidenceDocument) -> Result<TokenScoreVector, RetrievalError> {
        let req = ScoreTokensRequest {
            claim,
            doc_id: &doc.doc_id,
            text: &doc.raw_text,
        };
        let resp: ScoreTokensResponse = http::post_json(&self.client, &self.url, &req, None)?;
        let expected = doc.char_len();
        if resp.scores.len() != expected {
            return Err(RetrievalError::Alignment {
                doc_id: doc.doc_id.clone(),
                expected,
                got: resp.scores.len(),
            });
        }
        TokenScoreVector::new(doc.doc_id.clone(), resp.scores)
    }
}

#[derive(Serialize)]
struct ScorePairRequest<'a> {
    claim: &'a str,
    sentence: &'a str,
}

#[derive(Deserialize)]
struct ScorePairResponse {
    score: f64,
}

/// Client for a pairwise (claim, sentence) scorer at `POST {endpoint}/score_pair`.
#[derive(Debug, Clone)]
pub struct RemotePairScorer {
    url: String,
    client: reqwest::blocking::Client,
}

impl RemotePairScorer {
    pub fn new(endpoint: &str) -> Self {
        RemotePairScorer {
            url: http::join(endpoint, "score_pair"),
            client: http::client(Duration::from_secs(60)),
        }
    }

    pub fn score_pair(&self, claim: &str, sentence: &str) -> Result<f64, RetrievalError> {
        let resp: ScorePairResponse =
            http::post_json(&self.client, &self.url, &ScorePairRequest { claim, sentence }, None)?;
        Ok(resp.score)
    }
}

impl SentenceScorer for RemotePairScorer {
    fn score_sentences(&self, claim: &str, doc: &EvidenceDocument) -> Result<Vec<f64>, RetrievalError> {
        let scores = doc
            .sentences
            .iter()
            .map(|s| self.score_pair(claim, &s.text))
            .collect::<Result<Vec<_>, _>>()?;
        check_range(&doc.doc_id, &scores)?;
        Ok(scores)
    }
}
