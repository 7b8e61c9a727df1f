use std::collections::HashMap;
use std::sync::Arc;

use baba_sim::{Action, StateKey, WorldState};

use crate::runtime::{Case, Judge, Outcome, Program};

/// An observed (s, a, s') triple, canonically deduplicated.
#[derive(Clone, Debug)]
pub struct Transition {
    pub id: usize,
    pub level: String,
    pub state: Arc<WorldState>,
    pub state_json: Arc<str>,
    pub state_key: StateKey,
    pub action: Action,
    pub next: Arc<WorldState>,
    pub next_json: Arc<str>,
    pub next_key: StateKey,
    pub multiplicity: u32,
}

impl Transition {
    pub fn new(id: usize, level: &str, state: &WorldState, action: Action, next: &WorldState) -> Transition {
        Transition {
            id,
            level: level.to_string(),
            state: Arc::new(state.canonical()),
            state_json: baba_sim::encode_json(state).into(),
            state_key: state.key(),
            action,
            next: Arc::new(next.canonical()),
            next_json: baba_sim::encode_json(next).into(),
            next_key: next.key(),
            multiplicity: 1,
        }
    }

    pub fn case(&self) -> Case {
        Case { state_json: Arc::clone(&self.state_json), action: self.action, expected: self.next_key.clone() }
    }

    pub fn is_noop(&self) -> bool {
        self.state_key == self.next_key
    }
}

/// Result of [`EvidenceStore::record`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Recorded {
    pub id: usize,
    pub fresh: bool,
    /// An earlier transition with the same (s, a) but a different s'.
    pub conflict: Option<usize>,
}

/// The accumulated dataset D_t together with the explained-set ledger of
/// every accepted program version.
#[derive(Default)]
pub struct EvidenceStore {
    transitions: Vec<Transition>,
    index: HashMap<(StateKey, Action, StateKey), usize>,
    first_of: HashMap<(StateKey, Action), usize>,
    ledger: Ledger,
}

impl EvidenceStore {
    pub fn new() -> EvidenceStore {
        EvidenceStore::default()
    }

    pub fn record(&mut self, state: &WorldState, action: Action, next: &WorldState, level: &str) -> Recorded {
        let key = (state.key(), action, next.key());
        if let Some(&id) = self.index.get(&key) {
            self.transitions[id].multiplicity += 1;
            return Recorded { id, fresh: false, conflict: None };
        }
        let id = self.transitions.len();
        let conflict = match self.first_of.get(&(key.0.clone(), action)) {
            Some(&other) => {
                log::warn!("transition {id} contradicts {other}: same state and action, different outcome");
                Some(other)
            }
            None => {
                self.first_of.insert((key.0.clone(), action), id);
                None
            }
        };
        self.transitions.push(Transition::new(id, level, state, action, next));
        self.index.insert(key, id);
        self.ledger.grow(self.transitions.len());
        Recorded { id, fresh: true, conflict }
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn get(&self, id: usize) -> &Transition {
        &self.transitions[id]
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    pub fn cases(&self, ids: &[usize]) -> Vec<Case> {
        ids.iter().map(|&id| self.transitions[id].case()).collect()
    }

    /// E(program; D_t) as one outcome per transition, in id order.
    pub fn sweep(&self, program: &Program, judge: &dyn Judge) -> Vec<Outcome> {
        let cases: Vec<Case> = self.transitions.iter().map(Transition::case).collect();
        judge.judge(program, &cases)
    }

    /// Registers `program` as the next accepted version given its sweep over
    /// the whole store, and returns the new version index.
    pub fn accept(&mut self, program: Arc<Program>, explained: &[bool]) -> usize {
        assert_eq!(explained.len(), self.transitions.len(), "sweep must cover the whole store");
        self.ledger.append(program, explained)
    }

    /// Fills ledger bits for transitions recorded since the last version was
    /// accepted: the current version first, then older versions walking back
    /// only as far as ρ needs.
    pub fn evaluate_new(&mut self, ids: &[usize], judge: &dyn Judge) -> Vec<bool> {
        let Some(current) = self.ledger.current() else {
            return vec![false; ids.len()];
        };
        let mut pending: Vec<usize> = ids.iter().copied().filter(|&id| self.ledger.bits[id][current].is_none()).collect();
        let mut version = current;
        loop {
            if pending.is_empty() {
                break;
            }
            let program = Arc::clone(&self.ledger.versions[version]);
            let outcomes = judge.judge(&program, &self.cases(&pending));
            let mut still = Vec::new();
            for (&id, o) in pending.iter().zip(&outcomes) {
                self.ledger.bits[id][version] = Some(o.explains());
                if o.explains() {
                    self.ledger.rho[id] = Some(version);
                    if version > 0 && self.ledger.bits[id][version - 1].is_none() {
                        still.push(id);
                    }
                } else if version == current {
                    self.ledger.rho[id] = None;
                }
            }
            if version == 0 {
                break;
            }
            version -= 1;
            pending = still;
        }
        ids.iter().map(|&id| self.ledger.is_explained(id)).collect()
    }
}

/// Per-transition explained bits for every accepted version, with ρ.
///
/// `bits[t][v]` is `None` where version `v` was never run on transition `t`;
/// that only happens below the point where ρ is already settled.
#[derive(Clone, Debug, Default)]
pub struct Ledger {
    versions: Vec<Arc<Program>>,
    bits: Vec<Vec<Option<bool>>>,
    rho: Vec<Option<usize>>,
}

impl Ledger {
    fn grow(&mut self, len: usize) {
        let width = self.versions.len();
        self.bits.resize(len, vec![None; width]);
        self.rho.resize(len, None);
    }

    fn append(&mut self, program: Arc<Program>, explained: &[bool]) -> usize {
        let version = self.versions.len();
        self.versions.push(program);
        for (t, &e) in explained.iter().enumerate() {
            let was = self.rho[t].is_some() && self.bits[t].last() == Some(&Some(true));
            self.bits[t].push(Some(e));
            self.rho[t] = match (e, was) {
                (false, _) => None,
                (true, true) => self.rho[t],
                (true, false) => Some(version),
            };
        }
        version
    }

    /// Index of the latest accepted version.
    pub fn current(&self) -> Option<usize> {
        self.versions.len().checked_sub(1)
    }

    pub fn versions(&self) -> &[Arc<Program>] {
        &self.versions
    }

    pub fn program(&self, version: usize) -> &Arc<Program> {
        &self.versions[version]
    }

    pub fn current_program(&self) -> Option<&Arc<Program>> {
        self.versions.last()
    }

    pub fn bit(&self, id: usize, version: usize) -> Option<bool> {
        self.bits[id][version]
    }

    pub fn is_explained(&self, id: usize) -> bool {
        self.current().is_some_and(|v| self.bits[id][v] == Some(true))
    }

    pub fn rho(&self, id: usize) -> Option<usize> {
        self.rho[id]
    }

    /// E(P_i; D_t) in id order.
    pub fn explained(&self) -> Vec<usize> {
        (0..self.bits.len()).filter(|&id| self.is_explained(id)).collect()
    }
}

/// ρ from a complete row of explained bits for versions 0..=i.
pub fn rho_of_row(row: &[bool]) -> Option<usize> {
    if !*row.last()? {
        return None;
    }
    let unexplained_since = row.iter().rposition(|&b| !b);
    Some(unexplained_since.map_or(0, |k| k + 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rho_rows() {
        assert_eq!(rho_of_row(&[]), None);
        assert_eq!(rho_of_row(&[true, false]), None);
        assert_eq!(rho_of_row(&[true, true]), Some(0));
        // Explained by P1, lost by P2, explained by P3..P5 (P0 is index 0).
        assert_eq!(rho_of_row(&[false, true, false, true, true, true]), Some(3));
    }
}
