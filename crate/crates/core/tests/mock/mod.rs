//! In-process stand-ins for the external scorer, verifier and chat services.
#![allow(dead_code)]

use std::sync::{Arc, Mutex};

use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};

#[derive(Default)]
pub struct Recorded {
    pub verify: Vec<Value>,
    pub chat: Vec<(Option<String>, Value)>,
}

pub struct MockServer {
    pub base: String,
    pub recorded: Arc<Mutex<Recorded>>,
    _shutdown: tokio::sync::oneshot::Sender<()>,
}

type Shared = Arc<Mutex<Recorded>>;

/// 1 for characters that occur in the claim, 0 otherwise.
async fn score_tokens(Json(req): Json<Value>) -> Json<Value> {
    let claim = req["claim"].as_str().unwrap_or("");
    let scores: Vec<f64> = req["text"]
        .as_str()
        .unwrap_or("")
        .chars()
        .map(|c| if claim.contains(c) { 1.0 } else { 0.0 })
        .collect();
    Json(json!({ "scores": scores }))
}

async fn score_tokens_short(Json(req): Json<Value>) -> Json<Value> {
    let n = req["text"].as_str().unwrap_or("").chars().count();
    Json(json!({ "scores": vec![0.5; n.saturating_sub(1)] }))
}

async fn score_tokens_out_of_range(Json(req): Json<Value>) -> Json<Value> {
    let n = req["text"].as_str().unwrap_or("").chars().count();
    Json(json!({ "scores": vec![1.5; n] }))
}

/// Fraction of claim characters present in the sentence.
async fn score_pair(Json(req): Json<Value>) -> Json<Value> {
    let claim: Vec<char> = req["claim"].as_str().unwrap_or("").chars().collect();
    let sentence = req["sentence"].as_str().unwrap_or("");
    let hit = claim.iter().filter(|c| sentence.contains(**c)).count();
    Json(json!({ "score": hit as f64 / claim.len().max(1) as f64 }))
}

/// Answers REFUTED, or MAYBE for claims containing "MAYBE".
async fn verify(State(rec): State<Shared>, Json(req): Json<Value>) -> Json<Value> {
    let claim = req["claim"].as_str().unwrap_or("").to_string();
    rec.lock().unwrap().verify.push(req);
    if claim.contains("MAYBE") {
        Json(json!({ "label": "MAYBE" }))
    } else {
        Json(json!({ "label": "REFUTED", "probs": {"SUPPORTED": 0.2, "REFUTED": 0.8} }))
    }
}

async fn fail() -> (StatusCode, &'static str) {
    (StatusCode::INTERNAL_SERVER_ERROR, "model crashed")
}

/// Flips 上调/下调 in the claim and evidence found in the prompt payload.
async fn chat(State(rec): State<Shared>, headers: HeaderMap, Json(req): Json<Value>) -> Json<Value> {
    let auth = headers
        .get("authorization")
        .and_then(|v| v.to_str().ok())
        .map(String::from);
    let prompt = req["messages"][0]["content"].as_str().unwrap_or("").to_string();
    rec.lock().unwrap().chat.push((auth, req));
    let field = |name: &str| {
        prompt
            .lines()
            .rev()
            .find_map(|l| l.strip_prefix(name))
            .unwrap_or("")
            .trim()
            .to_string()
    };
    let flip = |s: String| s.replace("上调", "\u{0}").replace("下调", "上调").replace('\u{0}', "下调");
    let content = format!("CLAIM: {}\nEVIDENCE: {}", flip(field("声明：")), flip(field("证据：")));
    Json(json!({ "choices": [{ "message": { "role": "assistant", "content": content } }] }))
}

/// Starts the mock on a free port in a background thread.
pub fn start() -> MockServer {
    let recorded: Shared = Arc::default();
    let app = Router::new()
        .route("/score_tokens", post(score_tokens))
        .route("/short/score_tokens", post(score_tokens_short))
        .route("/range/score_tokens", post(score_tokens_out_of_range))
        .route("/score_pair", post(score_pair))
        .route("/verify", post(verify))
        .route("/fail/verify", post(fail))
        .route("/chat", post(chat))
        .with_state(recorded.clone());
    let (addr_tx, addr_rx) = std::sync::mpsc::channel();
    let (shutdown_tx, shutdown_rx) = tokio::sync::oneshot::channel::<()>();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            addr_tx.send(listener.local_addr().unwrap()).unwrap();
            axum::serve(listener, app)
                .with_graceful_shutdown(async {
                    let _ = shutdown_rx.await;
                })
                .await
                .unwrap();
        });
    });
    let addr = addr_rx.recv().unwrap();
    MockServer {
        base: format!("http://{addr}"),
        recorded,
        _shutdown: shutdown_tx,
    }
}
