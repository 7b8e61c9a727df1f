//! Prediction wire protocol.
//!
//! Every message is one frame on one line:
//!
//! ```text
//! <byte length of PAYLOAD, ASCII decimal> <SP> <PAYLOAD> <LF>
//! ```
//!
//! `PAYLOAD` is compact UTF-8 JSON without raw newlines. The worker speaks
//! first with `{"ready":true}`. Then, per request:
//!
//! ```text
//! harness -> worker   {"state": <state document>, "action": "idle|up|right|down|left"}
//! worker  -> harness  {"state": <state document>}   or   {"error": "<text>"}
//! ```
//!
//! Requests are independent; a worker must not carry state between them.

use std::io::{self, Write};

use baba_sim::Action;
use serde::Deserialize;
use serde_json::value::RawValue;
use thiserror::Error;

pub const READY: &str = r#"{"ready":true}"#;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FrameError {
    #[error("frame has no length prefix: {0:?}")]
    MissingPrefix(String),
    #[error("frame declares {declared} bytes but carries {actual}")]
    LengthMismatch { declared: usize, actual: usize },
}

pub fn write_frame(w: &mut impl Write, payload: &str) -> io::Result<()> {
    debug_assert!(!payload.contains('\n'));
    write!(w, "{} {}\n", payload.len(), payload)?;
    w.flush()
}

/// Extracts the payload from one line (with or without its trailing LF).
pub fn parse_frame(line: &str) -> Result<&str, FrameError> {
    let line = line.strip_suffix('\n').unwrap_or(line);
    let line = line.strip_suffix('\r').unwrap_or(line);
    let (len, payload) = line.split_once(' ').ok_or_else(|| MissingPrefix(excerpt(line)))?;
    let declared: usize = len.parse().map_err(|_| MissingPrefix(excerpt(line)))?;
    if declared != payload.len() {
        return Err(FrameError::LengthMismatch { declared, actual: payload.len() });
    }
    Ok(payload)
}

use FrameError::MissingPrefix;

fn excerpt(s: &str) -> String {
    s.chars().take(80).collect()
}

/// Request payload for an already-encoded state document.
pub fn request_payload(state_json: &str, action: Action) -> String {
    format!(r#"{{"state":{state_json},"action":"{}"}}"#, action.as_str())
}

#[derive(Debug, Deserialize)]
struct ResponseFrame<'a> {
    #[serde(borrow, default)]
    state: Option<&'a RawValue>,
    #[serde(default)]
    error: Option<String>,
}

/// A decoded worker reply.
#[derive(Debug, PartialEq, Eq)]
pub enum Reply {
    State(String),
    Error(String),
}

pub fn parse_reply(payload: &str) -> Result<Reply, String> {
    let frame: ResponseFrame = serde_json::from_str(payload).map_err(|e| format!("malformed reply: {e}"))?;
    match (frame.state, frame.error) {
        (_, Some(err)) => Ok(Reply::Error(err)),
        (Some(state), None) => Ok(Reply::State(state.get().to_string())),
        (None, None) => Err("reply has neither state nor error".to_string()),
    }
}

#[derive(Debug, Deserialize)]
pub struct Request {
    pub state: baba_sim::StateDocument,
    pub action: String,
}
