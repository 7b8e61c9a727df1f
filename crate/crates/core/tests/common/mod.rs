#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};
use std::path::PathBuf;
use std::sync::Mutex;
use std::time::Duration;

use alice_core::evidence::EvidenceStore;
use alice_core::runtime::{Case, Judge, Outcome, OutcomeClass, Program, ProcessJudge, RuntimeDescriptor};
use baba_sim::{Action, GridObject, StateKey, WorldState};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/programs").join(name)
}

pub fn fixture(name: &str) -> Program {
    let path = fixture_path(&format!("{name}.py"));
    Program::new(std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display())))
}

pub fn fixture_source(name: &str) -> String {
    fixture(name).source
}

pub fn alice_bin() -> &'static str {
    env!("CARGO_BIN_EXE_alice")
}

pub fn python_judge() -> ProcessJudge {
    ProcessJudge::new(RuntimeDescriptor::default())
}

pub fn oracle_runtime(labels: &str) -> RuntimeDescriptor {
    RuntimeDescriptor::default().with_command_line(&format!("{} serve-oracle --labels {labels}", alice_bin()))
}

pub fn oracle_judge(labels: &str) -> ProcessJudge {
    ProcessJudge::new(oracle_runtime(labels))
}

pub const ROW: i32 = 64;

/// A wide single-row world where baba sits at column `x`.
pub fn baba_at(x: i32) -> WorldState {
    WorldState::new(ROW, 2, vec![GridObject::world("baba", x, 0)])
}

/// Records `n` distinct transitions (baba stepping right along a row).
pub fn synthetic_store(n: usize) -> EvidenceStore {
    let mut store = EvidenceStore::new();
    for i in 0..n as i32 {
        let rec = store.record(&baba_at(i), Action::Right, &baba_at(i + 1), "row");
        assert!(rec.fresh);
    }
    store
}

/// In-process judge for synthetic stores. A program's source names the
/// transitions it explains: `explains 0 3 4`, `all`, `none` or `broken`.
pub struct TableJudge {
    ids: HashMap<(String, Action, StateKey), usize>,
    pub calls: Mutex<usize>,
}

impl TableJudge {
    pub fn new(store: &EvidenceStore) -> TableJudge {
        let ids = store
            .transitions()
            .iter()
            .map(|t| ((t.state_json.to_string(), t.action, t.next_key.clone()), t.id))
            .collect();
        TableJudge { ids, calls: Mutex::new(0) }
    }

    pub fn call_count(&self) -> usize {
        *self.calls.lock().unwrap()
    }
}

pub fn explains(ids: impl IntoIterator<Item = usize>) -> Program {
    let ids: BTreeSet<usize> = ids.into_iter().collect();
    let list: Vec<String> = ids.iter().map(|i| i.to_string()).collect();
    Program::new(format!("explains {}", list.join(" ")))
}

fn outcome(class: OutcomeClass) -> Outcome {
    Outcome { class, predicted: None, cause: None, wall: Duration::ZERO }
}

impl Judge for TableJudge {
    fn judge(&self, program: &Program, cases: &[Case]) -> Vec<Outcome> {
        *self.calls.lock().unwrap() += 1;
        let src = program.source.trim();
        if src == "broken" {
            return cases.iter().map(|_| Outcome::failure(OutcomeClass::CompileFailure, "SyntaxError")).collect();
        }
        let set: Option<BTreeSet<usize>> = match src {
            "all" => None,
            "none" => Some(BTreeSet::new()),
            s => Some(s.trim_start_matches("explains").split_whitespace().map(|w| w.parse().unwrap()).collect()),
        };
        cases
            .iter()
            .map(|c| {
                let id = self.ids[&(c.state_json.to_string(), c.action, c.expected.clone())];
                let hit = set.as_ref().is_none_or(|s| s.contains(&id));
                outcome(if hit { OutcomeClass::Match } else { OutcomeClass::Mismatch })
            })
            .collect()
    }
}

/// 90 idle no-ops and 10 right-pushes of a rock, over distinct states.
pub fn skewed_dataset() -> Vec<alice_core::evidence::Transition> {
    let rules = || {
        vec![
            GridObject::text("baba", 0, 0),
            GridObject::text("is", 1, 0),
            GridObject::text("you", 2, 0),
            GridObject::text("rock", 0, 1),
            GridObject::text("is", 1, 1),
            GridObject::text("push", 2, 1),
        ]
    };
    let scene = |x: i32, y: i32| {
        let mut objs = rules();
        objs.push(GridObject::world("baba", x, y));
        objs.push(GridObject::world("rock", x + 1, y));
        WorldState::new(24, 8, objs)
    };
    let mut out = Vec::new();
    for k in 0..90 {
        let s = scene((k % 18) as i32, 3 + (k / 18) as i32);
        out.push(alice_core::evidence::Transition::new(out.len(), "skewed", &s, Action::Idle, &baba_sim::step(&s, Action::Idle)));
    }
    for k in 0..10 {
        let s = scene(k as i32, 2);
        out.push(alice_core::evidence::Transition::new(out.len(), "skewed", &s, Action::Right, &baba_sim::step(&s, Action::Right)));
    }
    out
}

/// Online run over text-push with a scripted provider replaying `fixtures`.
pub fn online_config(out: &std::path::Path, initial: Option<&str>, fixtures: &[&str]) -> alice_core::orchestrator::RunConfig {
    use alice_core::orchestrator::RunConfig;
    let mut c = RunConfig { levels: vec!["text-push".into()], output_dir: out.to_path_buf(), eval_transitions: 500, ..RunConfig::default() };
    c.initial_program = initial.map(|n| fixture_path(&format!("{n}.py")));
    c.provider.fixtures = fixtures.iter().map(|n| fixture_path(&format!("{n}.py"))).collect();
    c.budgets.interaction_steps = 2000;
    c.budgets.stall_steps = 2000;
    c
}
