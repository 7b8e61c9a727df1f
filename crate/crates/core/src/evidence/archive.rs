//! Line-delimited transition archives: one JSON object per line,
//! `{"id":..,"level":..,"s":<state>,"a":"right","s_next":<state>,"multiplicity":..}`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use baba_sim::{Action, StateDocument, WorldState};
use serde::{Deserialize, Serialize};

use super::Transition;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ArchiveRecord {
    pub id: usize,
    pub level: String,
    pub s: StateDocument,
    pub a: Action,
    pub s_next: StateDocument,
    pub multiplicity: u32,
}

impl From<&Transition> for ArchiveRecord {
    fn from(t: &Transition) -> Self {
        ArchiveRecord {
            id: t.id,
            level: t.level.clone(),
            s: baba_sim::encode_state(&t.state),
            a: t.action,
            s_next: baba_sim::encode_state(&t.next),
            multiplicity: t.multiplicity,
        }
    }
}

/// A decoded archive entry.
#[derive(Clone, Debug)]
pub struct Archived {
    pub id: usize,
    pub level: String,
    pub state: WorldState,
    pub action: Action,
    pub next: WorldState,
    pub multiplicity: u32,
}

impl Archived {
    pub fn new(id: usize, level: &str, state: WorldState, action: Action, next: WorldState) -> Archived {
        Archived { id, level: level.to_string(), state, action, next, multiplicity: 1 }
    }

    pub fn record(&self) -> ArchiveRecord {
        ArchiveRecord {
            id: self.id,
            level: self.level.clone(),
            s: baba_sim::encode_state(&self.state),
            a: self.action,
            s_next: baba_sim::encode_state(&self.next),
            multiplicity: self.multiplicity,
        }
    }

    /// As a store-independent transition (same id).
    pub fn transition(&self) -> Transition {
        let mut t = Transition::new(self.id, &self.level, &self.state, self.action, &self.next);
        t.multiplicity = self.multiplicity;
        t
    }
}

pub fn write_records(path: &Path, records: impl IntoIterator<Item = ArchiveRecord>) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut out = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    for r in records {
        serde_json::to_writer(&mut out, &r)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_transitions<'a>(path: &Path, transitions: impl IntoIterator<Item = &'a Transition>) -> Result<()> {
    write_records(path, transitions.into_iter().map(ArchiveRecord::from))
}

pub fn read_archive(path: &Path) -> Result<Vec<Archived>> {
    let file = File::open(path).with_context(|| format!("opening archive {}", path.display()))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r: ArchiveRecord =
            serde_json::from_str(&line).with_context(|| format!("{}:{}: malformed record", path.display(), n + 1))?;
        let state = baba_sim::decode_state(&r.s).with_context(|| format!("{}:{}: s", path.display(), n + 1))?;
        let next = baba_sim::decode_state(&r.s_next).with_context(|| format!("{}:{}: s_next", path.display(), n + 1))?;
        out.push(Archived { id: r.id, level: r.level, state, action: r.a, next, multiplicity: r.multiplicity });
    }
    Ok(out)
}
