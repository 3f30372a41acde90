//! Blocking JSON-over-HTTP plumbing shared by the remote scorer, verifier and
//! LLM clients.

use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug)]
pub(crate) enum HttpFailure {
    Transport(String),
    Status { status: u16, body: String },
    Malformed(String),
}

pub(crate) fn client(timeout: Duration) -> reqwest::blocking::Client {
    reqwest::blocking::Client::builder()
        .timeout(timeout)
        .build()
        .expect("http client builds")
}

/// `base` with `path` appended, tolerating a trailing slash on `base`.
pub(crate) fn join(base: &str, path: &str) -> String {
    format!("{}/{}", base.trim_end_matches('/'), path.trim_start_matches('/'))
}

pub(crate) fn post_json<Req, Resp>(
    client: &reqwest::blocking::Client,
    url: &str,
    body: &Req,
    bearer: Option<&str>,
) -> Result<Resp, HttpFailure>
where
    Req: Serialize + ?Sized,
    Resp: DeserializeOwned,
{
    let mut req = client.post(url).json(body);
    if let Some(token) = bearer {
        req = req.bearer_auth(token);
    }
    let resp = req.send().map_err(|e| HttpFailure::Transport(e.to_string()))?;
    let status = resp.status();
    let text = resp.text().map_err(|e| HttpFailure::Transport(e.to_string()))?;
    if !status.is_success() {
        return Err(HttpFailure::Status {
            status: status.as_u16(),
            body: text.chars().take(500).collect(),
        });
    }
    serde_json::from_str(&text).map_err(|e| HttpFailure::Malformed(e.to_string()))
}
