//! Append-only run event stream, written as JSON lines.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::Result;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Start { config_hash: String, label_mode: String, levels: Vec<String> },
    Transition { level: String, id: usize, fresh: bool, action: String, explained: bool, steps: u64 },
    ProviderCall { call: usize, target: usize, attempt: usize, ok: bool, error: Option<String> },
    Verdict { call: usize, target: usize, program: String, verdict: String, lost: Vec<usize>, cause: Option<String> },
    Split { node: usize, kept: usize, lost: usize, test_program: String, kept_members: Vec<usize>, lost_members: Vec<usize> },
    ReferenceSet { target: usize, transitions: Vec<usize>, classes: Vec<usize> },
    Accepted { version: usize, program: String, target: Option<usize>, explained: usize, leaves: usize },
    Exhausted { target: usize, reason: String, calls: usize },
    Retrain { ingested: usize, classes: usize, loss: f64 },
    Terminated { reason: String, steps: u64, calls: usize, versions: usize },
}

/// Keeps every event in memory and mirrors it to a file when one is attached.
#[derive(Default)]
pub struct RunLog {
    events: Vec<Event>,
    sink: Option<BufWriter<File>>,
}

impl RunLog {
    pub fn new() -> RunLog {
        RunLog::default()
    }

    pub fn to_file(path: &Path) -> Result<RunLog> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        Ok(RunLog { events: Vec::new(), sink: Some(BufWriter::new(File::create(path)?)) })
    }

    pub fn push(&mut self, event: Event) {
        if let Some(sink) = &mut self.sink {
            let line = serde_json::to_string(&event).expect("events serialize");
            if let Err(e) = writeln!(sink, "{line}").and_then(|_| sink.flush()) {
                log::error!("event log write failed: {e}");
            }
        }
        self.events.push(event);
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn provider_calls(&self) -> usize {
        self.events.iter().filter(|e| matches!(e, Event::ProviderCall { .. })).count()
    }
}

pub fn read_events(path: &Path) -> Result<Vec<Event>> {
    let text = std::fs::read_to_string(path)?;
    text.lines().filter(|l| !l.trim().is_empty()).map(|l| Ok(serde_json::from_str(l)?)).collect()
}
