//! Execution of candidate world-model programs behind a process boundary.
//!
//! A program is source text plus a [`RuntimeDescriptor`] naming the command
//! that runs it. Workers speak the line protocol in [`protocol`]; the
//! [`Judge`] trait turns their replies into [`Outcome`]s against observed
//! next states.

pub mod oracle;
mod pool;
pub mod protocol;
mod worker;

use std::fmt;
use std::sync::Arc;
use std::time::Duration;

use baba_sim::{Action, StateKey};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use pool::ProcessJudge;
pub use worker::{Handle, SpawnError, Worker, WorkerFault};

/// Immutable program snapshot. The id is derived from the source.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Program {
    pub id: String,
    pub source: String,
}

impl Program {
    pub fn new(source: impl Into<String>) -> Program {
        let source = source.into();
        let digest = Sha256::digest(source.as_bytes());
        Program { id: hex::encode(&digest[..8]), source }
    }
}

/// How to launch a worker for a program.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RuntimeDescriptor {
    /// Argument vector; `{source}` is replaced by the path of the program file.
    pub command: Vec<String>,
    /// File name the source is written to inside the worker's scratch directory.
    pub source_file: String,
    pub startup_timeout_ms: u64,
    pub call_timeout_ms: u64,
    /// Worker processes per program during dataset sweeps.
    pub workers: usize,
    /// Respawns allowed per handle before further requests fail without running.
    pub max_respawns: u32,
}

impl Default for RuntimeDescriptor {
    fn default() -> Self {
        RuntimeDescriptor {
            command: vec!["python3".into(), "{source}".into()],
            source_file: "candidate.py".into(),
            startup_timeout_ms: 10_000,
            call_timeout_ms: 2_000,
            workers: std::thread::available_parallelism().map_or(2, |n| n.get().min(4)),
            max_respawns: 16,
        }
    }
}

impl RuntimeDescriptor {
    /// Splits a shell-like command string on whitespace.
    pub fn with_command_line(mut self, line: &str) -> RuntimeDescriptor {
        self.command = line.split_whitespace().map(str::to_string).collect();
        self
    }

    pub fn startup_timeout(&self) -> Duration {
        Duration::from_millis(self.startup_timeout_ms)
    }

    pub fn call_timeout(&self) -> Duration {
        Duration::from_millis(self.call_timeout_ms)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeClass {
    Match,
    Mismatch,
    CompileFailure,
    RuntimeError,
    Timeout,
}

impl OutcomeClass {
    pub const ALL: [OutcomeClass; 5] = [
        OutcomeClass::Match,
        OutcomeClass::Mismatch,
        OutcomeClass::CompileFailure,
        OutcomeClass::RuntimeError,
        OutcomeClass::Timeout,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OutcomeClass::Match => "match",
            OutcomeClass::Mismatch => "mismatch",
            OutcomeClass::CompileFailure => "compile_failure",
            OutcomeClass::RuntimeError => "runtime_error",
            OutcomeClass::Timeout => "timeout",
        }
    }
}

impl fmt::Display for OutcomeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Result of asking a program for one next state.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub class: OutcomeClass,
    /// The predicted state document, when one was produced.
    pub predicted: Option<String>,
    pub cause: Option<String>,
    pub wall: Duration,
}

impl Outcome {
    pub fn explains(&self) -> bool {
        self.class == OutcomeClass::Match
    }

    pub fn failure(class: OutcomeClass, cause: impl Into<String>) -> Outcome {
        Outcome { class, predicted: None, cause: Some(cause.into()), wall: Duration::ZERO }
    }
}

/// One (s, a) question with the observed answer.
#[derive(Clone, Debug)]
pub struct Case {
    pub state_json: Arc<str>,
    pub action: Action,
    pub expected: StateKey,
}

/// Compares a predicted state document against the observed key.
pub fn classify(predicted: String, expected: &StateKey) -> Outcome {
    match baba_sim::decode_json(&predicted) {
        Ok(state) if state.key() == *expected => {
            Outcome { class: OutcomeClass::Match, predicted: Some(predicted), cause: None, wall: Duration::ZERO }
        }
        Ok(_) => Outcome { class: OutcomeClass::Mismatch, predicted: Some(predicted), cause: None, wall: Duration::ZERO },
        Err(e) => Outcome {
            class: OutcomeClass::RuntimeError,
            predicted: Some(predicted),
            cause: Some(format!("invalid state document: {e}")),
            wall: Duration::ZERO,
        },
    }
}

/// Decides outcomes of a program over a batch of cases. Outcomes are returned
/// in case order; implementations must be stateless across calls.
pub trait Judge: Send + Sync {
    fn judge(&self, program: &Program, cases: &[Case]) -> Vec<Outcome>;

    fn explains(&self, program: &Program, case: &Case) -> bool {
        self.judge(program, std::slice::from_ref(case)).pop().is_some_and(|o| o.explains())
    }
}

impl<J: Judge + ?Sized> Judge for Arc<J> {
    fn judge(&self, program: &Program, cases: &[Case]) -> Vec<Outcome> {
        (**self).judge(program, cases)
    }
}
