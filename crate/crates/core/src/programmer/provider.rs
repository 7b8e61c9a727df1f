use std::time::Duration;

use serde_json::{json, Value};
use thiserror::Error;

use super::prompt::{extract_program, ProviderRequest};

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ProviderError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("no scripted candidates left")]
    Exhausted,
    #[error("response carried no program")]
    Empty,
}

/// Source of candidate programs. Every `propose` is one billable call,
/// whether or not it succeeds.
pub trait Provider {
    fn propose(&mut self, request: &ProviderRequest) -> Result<String, ProviderError>;

    /// Number of `propose` invocations so far.
    fn calls(&self) -> usize;
}

/// Replays a fixed list of candidate programs in order.
#[derive(Clone, Debug, Default)]
pub struct ScriptedProvider {
    fixtures: Vec<String>,
    calls: usize,
    repeat_last: bool,
}

impl ScriptedProvider {
    pub fn new(fixtures: Vec<String>) -> ScriptedProvider {
        ScriptedProvider { fixtures, calls: 0, repeat_last: false }
    }

    /// Keeps returning the last fixture once the list runs out.
    pub fn repeating(fixtures: Vec<String>) -> ScriptedProvider {
        ScriptedProvider { repeat_last: true, ..ScriptedProvider::new(fixtures) }
    }
}

impl Provider for ScriptedProvider {
    fn propose(&mut self, _request: &ProviderRequest) -> Result<String, ProviderError> {
        let k = self.calls;
        self.calls += 1;
        match self.fixtures.get(k) {
            Some(src) => Ok(src.clone()),
            None if self.repeat_last && !self.fixtures.is_empty() => Ok(self.fixtures[self.fixtures.len() - 1].clone()),
            None => Err(ProviderError::Exhausted),
        }
    }

    fn calls(&self) -> usize {
        self.calls
    }
}

/// OpenAI-style chat-completions client. One request per call, no retries.
pub struct LiveProvider {
    client: reqwest::blocking::Client,
    endpoint: String,
    model: String,
    api_key: Option<String>,
    calls: usize,
}

impl LiveProvider {
    pub fn new(endpoint: &str, model: &str, api_key: Option<String>, timeout: Duration) -> Result<LiveProvider, ProviderError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        Ok(LiveProvider { client, endpoint: endpoint.to_string(), model: model.to_string(), api_key, calls: 0 })
    }

    fn send(&self, prompt: &str) -> Result<String, ProviderError> {
        let body = json!({
            "model": self.model,
            "messages": [{ "role": "user", "content": prompt }],
        });
        let mut req = self.client.post(&self.endpoint).json(&body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| ProviderError::Transport(e.to_string()))?;
        let status = resp.status();
        let value: Value = resp.json().map_err(|e| ProviderError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(ProviderError::Transport(format!("HTTP {status}: {value}")));
        }
        value["choices"][0]["message"]["content"].as_str().map(str::to_string).ok_or(ProviderError::Empty)
    }
}

impl Provider for LiveProvider {
    fn propose(&mut self, request: &ProviderRequest) -> Result<String, ProviderError> {
        self.calls += 1;
        let text = self.send(&request.prompt)?;
        let program = extract_program(&text);
        if program.trim().is_empty() {
            return Err(ProviderError::Empty);
        }
        Ok(program)
    }

    fn calls(&self) -> usize {
        self.calls
    }
}
