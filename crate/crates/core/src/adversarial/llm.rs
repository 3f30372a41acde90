use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::prompt::{build_prompt, parse_completion, PromptTemplate, RewriteExemplar};
use super::{AdversarialError, RewriteInstance, RewritePair, RewriteSource, DEFAULT_OVERLAP_THRESHOLD, DEFAULT_RETRIES};
use crate::http::{self, HttpFailure};
use crate::segmenter::Lexicon;

impl From<HttpFailure> for AdversarialError {
    fn from(f: HttpFailure) -> Self {
        match f {
            HttpFailure::Transport(m) => AdversarialError::Transport(m),
            HttpFailure::Status { status, body } => AdversarialError::Http { status, body },
            HttpFailure::Malformed(m) => AdversarialError::Malformed(m),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage {
            role: "user".into(),
            content: content.into(),
        }
    }
}

pub trait ChatClient: Send + Sync {
    fn complete(&self, messages: &[ChatMessage]) -> Result<String, AdversarialError>;
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    temperature: f64,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChatMessage,
}

/// Chat-completion client for any endpoint speaking the common
/// `{"model", "messages", "temperature"}` → `{"choices": [...]}` shape.
#[derive(Debug, Clone)]
pub struct HttpChatClient {
    url: String,
    model: String,
    temperature: f64,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

impl HttpChatClient {
    /// `endpoint` is the full completion URL.
    pub fn new(endpoint: &str, model: &str, temperature: f64, api_key: Option<String>) -> Self {
        HttpChatClient {
            url: endpoint.to_string(),
            model: model.to_string(),
            temperature,
            api_key,
            client: http::client(Duration::from_secs(180)),
        }
    }

    /// Reads the bearer token from environment variable `key_var`.
    pub fn from_env(endpoint: &str, model: &str, temperature: f64, key_var: &str) -> Result<Self, AdversarialError> {
        let key = std::env::var(key_var).map_err(|_| AdversarialError::MissingEnv(key_var.to_string()))?;
        Ok(Self::new(endpoint, model, temperature, Some(key)))
    }
}

impl ChatClient for HttpChatClient {
    fn complete(&self, messages: &[ChatMessage]) -> Result<String, AdversarialError> {
        let req = ChatRequest {
            model: &self.model,
            messages,
            temperature: self.temperature,
        };
        let resp: ChatResponse = http::post_json(&self.client, &self.url, &req, self.api_key.as_deref())?;
        resp.choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| AdversarialError::Malformed("no choices in response".into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LlmOptions {
    pub overlap_threshold: f64,
    /// Extra attempts after the first invariant-violating generation.
    pub retries: usize,
    pub max_in_flight: usize,
}

impl Default for LlmOptions {
    fn default() -> Self {
        LlmOptions {
            overlap_threshold: DEFAULT_OVERLAP_THRESHOLD,
            retries: DEFAULT_RETRIES,
            max_in_flight: 4,
        }
    }
}

/// Asks the model for a rewrite, retrying when the completion cannot be
/// parsed or violates the pair invariants. Transport errors are not retried.
pub fn rewrite_via_llm(
    instance: &RewriteInstance,
    client: &dyn ChatClient,
    template: &PromptTemplate,
    exemplars: &[RewriteExemplar],
    lexicon: &Lexicon,
    opts: &LlmOptions,
) -> Result<RewritePair, AdversarialError> {
    let prompt = build_prompt(instance, template, exemplars)?;
    let messages = [ChatMessage::user(prompt)];
    let attempts = opts.retries + 1;
    let mut log = Vec::new();
    let mut last = String::new();
    for attempt in 1..=attempts {
        let completion = client.complete(&messages)?;
        let outcome = parse_completion(&completion).and_then(|(claim, evidence)| {
            let pair = RewritePair {
                original: instance.clone(),
                generated_claim: claim,
                generated_evidence: evidence,
                rewrite_log: Vec::new(),
                source: RewriteSource::Llm,
            };
            pair.validate(lexicon, opts.overlap_threshold).map(|_| pair)
        });
        match outcome {
            Ok(mut pair) => {
                log.push(format!("llm: accepted on attempt {attempt}"));
                pair.rewrite_log = log;
                return Ok(pair);
            }
            Err(e) => {
                last = e.to_string();
                log::info!("{}: attempt {attempt} rejected: {last}", instance.id);
                log.push(format!("llm: attempt {attempt} rejected: {last}"));
            }
        }
    }
    Err(AdversarialError::RetriesExhausted {
        id: instance.id.clone(),
        attempts,
        last,
    })
}

/// Rewrites every instance with at most `opts.max_in_flight` concurrent
/// requests; results keep input order.
pub fn rewrite_all_via_llm(
    instances: &[RewriteInstance],
    client: &dyn ChatClient,
    template: &PromptTemplate,
    exemplars: &[RewriteExemplar],
    lexicon: &Lexicon,
    opts: &LlmOptions,
) -> Vec<Result<RewritePair, AdversarialError>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.max_in_flight.max(1))
        .build()
        .expect("thread pool builds");
    pool.install(|| {
        instances
            .par_iter()
            .map(|i| rewrite_via_llm(i, client, template, exemplars, lexicon, opts))
            .collect()
    })
}
