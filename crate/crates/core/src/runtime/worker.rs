use std::io::{self, BufRead, BufReader, Read};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use baba_sim::Action;
use tempfile::TempDir;
use thiserror::Error;

use super::protocol::{self, Reply};
use super::{classify, Case, Outcome, OutcomeClass, Program, RuntimeDescriptor};

const STDERR_CAP: usize = 16 * 1024;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum SpawnError {
    #[error("interpreter not found: {0}")]
    InterpreterMissing(String),
    #[error("program exited before becoming ready: {0}")]
    CompileFailure(String),
    #[error("protocol handshake failed: {0}")]
    Handshake(String),
    #[error("worker not ready after {0:?}")]
    StartupTimeout(Duration),
    #[error("could not start worker: {0}")]
    Io(String),
}

impl SpawnError {
    pub fn outcome_class(&self) -> OutcomeClass {
        match self {
            SpawnError::CompileFailure(_) | SpawnError::Handshake(_) => OutcomeClass::CompileFailure,
            SpawnError::StartupTimeout(_) => OutcomeClass::Timeout,
            SpawnError::InterpreterMissing(_) | SpawnError::Io(_) => OutcomeClass::RuntimeError,
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum WorkerFault {
    #[error("no reply within {0:?}")]
    Timeout(Duration),
    #[error("worker died: {0}")]
    Crashed(String),
    #[error("protocol violation: {0}")]
    Protocol(String),
}

/// One live worker process serving one program.
pub struct Worker {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<io::Result<String>>,
    stderr: Arc<Mutex<String>>,
    _scratch: TempDir,
}

impl Worker {
    /// Starts the program and waits for its ready frame.
    pub fn spawn(program: &Program, runtime: &RuntimeDescriptor) -> Result<Worker, SpawnError> {
        let (exe, args) = runtime
            .command
            .split_first()
            .ok_or_else(|| SpawnError::InterpreterMissing("empty command".into()))?;
        let scratch = tempfile::Builder::new().prefix("alice-worker").tempdir().map_err(|e| SpawnError::Io(e.to_string()))?;
        let source_path = scratch.path().join(&runtime.source_file);
        std::fs::write(&source_path, &program.source).map_err(|e| SpawnError::Io(e.to_string()))?;
        let source_arg = source_path.to_string_lossy();

        let mut child = Command::new(exe)
            .args(args.iter().map(|a| a.replace("{source}", &source_arg)))
            .current_dir(scratch.path())
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| match e.kind() {
                io::ErrorKind::NotFound | io::ErrorKind::PermissionDenied => {
                    SpawnError::InterpreterMissing(format!("{exe}: {e}"))
                }
                _ => SpawnError::Io(e.to_string()),
            })?;

        let stdin = child.stdin.take().expect("stdin is piped");
        let stdout = child.stdout.take().expect("stdout is piped");
        let stderr_pipe = child.stderr.take().expect("stderr is piped");

        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            let mut reader = BufReader::new(stdout);
            loop {
                let mut line = String::new();
                match reader.read_line(&mut line) {
                    Ok(0) => break,
                    Ok(_) => {
                        if tx.send(Ok(line)).is_err() {
                            break;
                        }
                    }
                    Err(e) => {
                        let _ = tx.send(Err(e));
                        break;
                    }
                }
            }
        });
        let stderr = Arc::new(Mutex::new(String::new()));
        let sink = Arc::clone(&stderr);
        thread::spawn(move || {
            let mut buf = [0u8; 4096];
            let mut pipe = stderr_pipe;
            while let Ok(n) = pipe.read(&mut buf) {
                if n == 0 {
                    break;
                }
                let mut s = sink.lock().unwrap();
                if s.len() < STDERR_CAP {
                    s.push_str(&String::from_utf8_lossy(&buf[..n]));
                }
            }
        });

        let mut worker = Worker { child, stdin, lines, stderr, _scratch: scratch };
        let timeout = runtime.startup_timeout();
        match worker.lines.recv_timeout(timeout) {
            Ok(Ok(line)) => match protocol::parse_frame(&line) {
                Ok(payload) if is_ready(payload) => Ok(worker),
                Ok(payload) => Err(SpawnError::Handshake(format!("expected ready frame, got {payload:?}"))),
                Err(e) => Err(SpawnError::Handshake(e.to_string())),
            },
            Ok(Err(e)) => Err(SpawnError::Io(e.to_string())),
            Err(RecvTimeoutError::Timeout) => Err(SpawnError::StartupTimeout(timeout)),
            Err(RecvTimeoutError::Disconnected) => {
                let _ = worker.child.wait();
                Err(SpawnError::CompileFailure(worker.stderr_tail()))
            }
        }
    }

    /// Sends one request payload and waits for the reply payload.
    pub fn request(&mut self, payload: &str, timeout: Duration) -> Result<String, WorkerFault> {
        if let Err(e) = protocol::write_frame(&mut self.stdin, payload) {
            return Err(WorkerFault::Crashed(format!("{e}; {}", self.stderr_tail())));
        }
        match self.lines.recv_timeout(timeout) {
            Ok(Ok(line)) => protocol::parse_frame(&line).map(str::to_string).map_err(|e| WorkerFault::Protocol(e.to_string())),
            Ok(Err(e)) => Err(WorkerFault::Crashed(e.to_string())),
            Err(RecvTimeoutError::Timeout) => Err(WorkerFault::Timeout(timeout)),
            Err(RecvTimeoutError::Disconnected) => {
                let _ = self.child.wait();
                Err(WorkerFault::Crashed(self.stderr_tail()))
            }
        }
    }

    fn stderr_tail(&self) -> String {
        // Give the stderr reader a moment to drain after the process exits.
        thread::sleep(Duration::from_millis(20));
        let s = self.stderr.lock().unwrap();
        let tail: String = s.chars().rev().take(2000).collect::<Vec<_>>().into_iter().rev().collect();
        tail.trim().to_string()
    }
}

impl Drop for Worker {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

fn is_ready(payload: &str) -> bool {
    serde_json::from_str::<serde_json::Value>(payload).is_ok_and(|v| v.get("ready") == Some(&serde_json::Value::Bool(true)))
}

/// A program's long-lived worker slot. Spawns lazily, replaces a dead
/// worker on the next request, and gives up after `max_respawns`.
pub struct Handle {
    program: Arc<Program>,
    runtime: Arc<RuntimeDescriptor>,
    worker: Option<Worker>,
    spawn_error: Option<SpawnError>,
    spawns: u32,
}

impl Handle {
    pub fn new(program: Arc<Program>, runtime: Arc<RuntimeDescriptor>) -> Handle {
        Handle { program, runtime, worker: None, spawn_error: None, spawns: 0 }
    }

    /// Creates a handle and starts its worker eagerly.
    pub fn spawn(program: Arc<Program>, runtime: Arc<RuntimeDescriptor>) -> Result<Handle, SpawnError> {
        let mut h = Handle::new(program, runtime);
        h.ensure_worker()?;
        Ok(h)
    }

    pub fn program(&self) -> &Program {
        &self.program
    }

    pub fn is_live(&self) -> bool {
        self.worker.is_some()
    }

    pub fn spawn_error(&self) -> Option<&SpawnError> {
        self.spawn_error.as_ref()
    }

    fn ensure_worker(&mut self) -> Result<&mut Worker, SpawnError> {
        if self.worker.is_none() {
            if let Some(err) = &self.spawn_error {
                return Err(err.clone());
            }
            if self.spawns > self.runtime.max_respawns {
                return Err(SpawnError::Io(format!("respawn limit {} reached", self.runtime.max_respawns)));
            }
            self.spawns += 1;
            match Worker::spawn(&self.program, &self.runtime) {
                Ok(w) => self.worker = Some(w),
                Err(e) => {
                    log::debug!("program {} failed to start: {e}", self.program.id);
                    self.spawn_error = Some(e.clone());
                    return Err(e);
                }
            }
        }
        Ok(self.worker.as_mut().expect("worker just ensured"))
    }

    /// Asks for the next state of (s, a); `state_json` is a state document.
    pub fn predict(&mut self, state_json: &str, action: Action) -> Result<String, Outcome> {
        let timeout = self.runtime.call_timeout();
        let worker = self.ensure_worker().map_err(|e| Outcome::failure(e.outcome_class(), e.to_string()))?;
        let payload = protocol::request_payload(state_json, action);
        let fault = match worker.request(&payload, timeout) {
            Ok(reply) => match protocol::parse_reply(&reply) {
                Ok(Reply::State(state)) => return Ok(state),
                Ok(Reply::Error(err)) => return Err(Outcome::failure(OutcomeClass::RuntimeError, err)),
                Err(e) => WorkerFault::Protocol(e),
            },
            Err(fault) => fault,
        };
        // Any fault leaves the stream in an unknown position; start over.
        self.worker = None;
        let class = match fault {
            WorkerFault::Timeout(_) => OutcomeClass::Timeout,
            _ => OutcomeClass::RuntimeError,
        };
        Err(Outcome::failure(class, fault.to_string()))
    }

    /// Predicts and compares against the observed next state.
    pub fn judge(&mut self, case: &Case) -> Outcome {
        let started = Instant::now();
        let mut outcome = match self.predict(&case.state_json, case.action) {
            Ok(predicted) => classify(predicted, &case.expected),
            Err(failure) => failure,
        };
        outcome.wall = started.elapsed();
        outcome
    }
}
