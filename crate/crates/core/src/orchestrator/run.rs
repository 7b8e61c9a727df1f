use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{Context, Result};
use baba_sim::{Simulator, WorldState};
use serde::{Deserialize, Serialize};

use super::config::{ProviderMode, RunConfig};
use crate::evaluator::{self, AccuracyReport, Purity};
use crate::events::{Event, RunLog};
use crate::evidence::archive::{self, Archived};
use crate::evidence::Transition;
use crate::explorer::{ActiveClass, Explorer};
use crate::programmer::{IterationResult, Learner, LiveProvider, Provider, ScriptedProvider};
use crate::runtime::{Judge, ProcessJudge, Program};

/// Where a run keeps its artifacts.
#[derive(Clone, Debug)]
pub struct RunDir {
    pub root: PathBuf,
}

impl RunDir {
    pub fn create(root: &Path) -> Result<RunDir> {
        for sub in ["logs", "programs", "archives", "reports", "transcripts", "snapshot", "explorer"] {
            std::fs::create_dir_all(root.join(sub)).with_context(|| format!("creating {}", root.join(sub).display()))?;
        }
        Ok(RunDir { root: root.to_path_buf() })
    }

    pub fn events(&self) -> PathBuf {
        self.root.join("logs/events.jsonl")
    }

    pub fn programs(&self) -> PathBuf {
        self.root.join("programs")
    }

    pub fn transcripts(&self) -> PathBuf {
        self.root.join("transcripts")
    }

    pub fn train_archive(&self) -> PathBuf {
        self.root.join("archives/train.jsonl")
    }

    pub fn eval_archive(&self) -> PathBuf {
        self.root.join("archives/eval.jsonl")
    }

    pub fn report(&self) -> PathBuf {
        self.root.join("reports/final.json")
    }

    pub fn classes(&self) -> PathBuf {
        self.root.join("snapshot/classes.json")
    }

    pub fn encoder(&self) -> PathBuf {
        self.root.join("explorer/encoder.bin")
    }

    pub fn final_program(&self) -> PathBuf {
        self.root.join("programs/final.src")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    CallBudget,
    RetryCap,
    ProviderOutage,
    Stall,
    InteractionBudget,
    FrontierExhausted,
    ArchiveDone,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::CallBudget => "call_budget",
            Termination::RetryCap => "retry_cap",
            Termination::ProviderOutage => "provider_outage",
            Termination::Stall => "stall",
            Termination::InteractionBudget => "interaction_budget",
            Termination::FrontierExhausted => "frontier_exhausted",
            Termination::ArchiveDone => "archive_done",
        }
    }
}

/// Final report document of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config_hash: String,
    pub termination: Termination,
    pub steps: u64,
    pub calls: usize,
    pub versions: usize,
    pub transitions: usize,
    pub explained: usize,
    pub leaves: usize,
    pub splits: usize,
    /// Stopped before consuming the whole training archive (offline runs).
    pub truncated: bool,
    pub initial: Option<AccuracyReport>,
    pub final_report: Option<AccuracyReport>,
    pub purity: Purity,
}

pub struct RunOutcome {
    pub report: RunReport,
    pub final_program: Option<Program>,
    pub log: RunLog,
    pub dir: RunDir,
}

fn make_provider(config: &RunConfig) -> Result<Box<dyn Provider>> {
    let p = &config.provider;
    Ok(match p.mode {
        ProviderMode::Mock => {
            let fixtures = p
                .fixtures
                .iter()
                .map(|f| std::fs::read_to_string(f).with_context(|| format!("reading fixture {}", f.display())))
                .collect::<Result<Vec<_>>>()?;
            Box::new(ScriptedProvider::new(fixtures))
        }
        ProviderMode::Live => {
            let key = std::env::var(&p.api_key_env).ok();
            if key.is_none() {
                log::warn!("{} is not set; calling {} without credentials", p.api_key_env, p.endpoint);
            }
            Box::new(LiveProvider::new(&p.endpoint, &p.model, key, Duration::from_secs(p.timeout_secs))?)
        }
    })
}

fn active_classes(learner: &Learner) -> Vec<ActiveClass> {
    learner
        .classes
        .active_classes()
        .into_iter()
        .map(|id| ActiveClass { id, members: learner.classes.node(id).members.iter().copied().collect() })
        .collect()
}

/// A learner plus the plumbing every run mode shares.
struct Session {
    config: RunConfig,
    dir: RunDir,
    learner: Learner,
    provider: Box<dyn Provider>,
    initial: Option<Program>,
}

impl Session {
    fn open(config: &RunConfig, provider: Option<Box<dyn Provider>>) -> Result<Session> {
        config.validate()?;
        let dir = RunDir::create(&config.output_dir)?;
        std::fs::write(dir.root.join("config.toml"), config.to_toml())?;
        let judge: Arc<dyn Judge> = Arc::new(ProcessJudge::new(config.runtime.clone()));
        let log = RunLog::to_file(&dir.events())?;
        let mut learner = Learner::new(judge, config.update_config(), config.budgets.llm_calls_total, config.seed)
            .with_artifacts(dir.transcripts(), dir.programs())
            .with_log(log);
        learner.log.push(Event::Start {
            config_hash: config.hash(),
            label_mode: format!("{:?}", config.label_mode).to_lowercase(),
            levels: config.levels.clone(),
        });
        let initial = match &config.initial_program {
            Some(path) => {
                let program = Program::new(std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?);
                learner.install_initial(program.clone());
                Some(program)
            }
            None => None,
        };
        let provider = match provider {
            Some(p) => p,
            None => make_provider(config)?,
        };
        Ok(Session { config: config.clone(), dir, learner, provider, initial })
    }

    fn update(&mut self, target: usize) -> Option<Termination> {
        match self.learner.update_iteration(target, &mut *self.provider) {
            IterationResult::Accepted { version, .. } => {
                if version == 0 && self.initial.is_none() {
                    self.initial = Some((**self.learner.store.ledger().program(0)).clone());
                }
                if let Err(e) = self.persist() {
                    log::error!("snapshot failed: {e:#}");
                }
                None
            }
            IterationResult::Exhausted { reason, .. } => Some(match reason {
                crate::programmer::StopReason::Budget => Termination::CallBudget,
                crate::programmer::StopReason::RetryCap => Termination::RetryCap,
                crate::programmer::StopReason::Outage => Termination::ProviderOutage,
            }),
        }
    }

    fn persist(&self) -> Result<()> {
        archive::write_transitions(&self.dir.train_archive(), self.learner.store.transitions())?;
        std::fs::write(self.dir.classes(), serde_json::to_string(&self.learner.classes)?)?;
        Ok(())
    }

    fn finish(mut self, termination: Termination, steps: u64, truncated: bool, eval: &[Transition]) -> Result<RunOutcome> {
        self.persist()?;
        let judge = Arc::clone(self.learner.judge());
        let seed = self.config.seed;
        let assess = |p: &Program| {
            let mut r = evaluator::evaluate(&*judge, p, eval, seed);
            r.calls = None;
            r
        };
        let final_program = self.learner.current_program().map(|p| (**p).clone());
        let initial = self.initial.as_ref().map(&assess);
        let mut final_report = final_program.as_ref().map(&assess);
        if let Some(r) = &mut final_report {
            r.calls = Some(self.learner.budget().used);
        }
        if let Some(p) = &final_program {
            std::fs::write(self.dir.final_program(), &p.source)?;
        }
        let store = &self.learner.store;
        let classes = evaluator::heuristic_classes(store.transitions());
        let pairs: Vec<(usize, Option<usize>)> =
            classes.iter().enumerate().map(|(tid, &h)| (h, self.learner.classes.leaf_of(tid))).collect();
        let splits = self.learner.log.events().iter().filter(|e| matches!(e, Event::Split { .. })).count();
        let report = RunReport {
            config_hash: self.config.hash(),
            termination,
            steps,
            calls: self.learner.budget().used,
            versions: self.learner.version_count(),
            transitions: store.len(),
            explained: store.ledger().explained().len(),
            leaves: self.learner.classes.leaf_count(),
            splits,
            truncated,
            initial,
            final_report,
            purity: evaluator::purity(&pairs),
        };
        self.learner.log.push(Event::Terminated {
            reason: termination.as_str().to_string(),
            steps,
            calls: report.calls,
            versions: report.versions,
        });
        std::fs::write(self.dir.report(), serde_json::to_string_pretty(&report)?)?;
        let mut table = format!("termination  {}\nsteps        {steps}\ncalls        {}\n", termination.as_str(), report.calls);
        for (name, r) in [("initial", &report.initial), ("final", &report.final_report)] {
            if let Some(r) = r {
                table.push_str(&format!("\n[{name}]\n{}", r.table()));
            }
        }
        std::fs::write(self.dir.root.join("reports/final.txt"), table)?;
        let log = std::mem::take(&mut self.learner.log);
        Ok(RunOutcome { report, final_program, log, dir: self.dir })
    }
}

fn eval_set(config: &RunConfig, levels: &[(String, WorldState)], dir: &RunDir) -> Result<Vec<Transition>> {
    let sim = Simulator::new(config.label_mode.label_map());
    let archived = evaluator::collect_coverage(levels, &sim, config.eval_transitions);
    archive::write_records(&dir.eval_archive(), archived.iter().map(Archived::record))?;
    Ok(archived.iter().map(Archived::transition).collect())
}

/// The closed loop: explore, ingest, update on unexplained transitions.
pub fn run_online(config: &RunConfig) -> Result<RunOutcome> {
    run_online_with(config, None)
}

/// As [`run_online`], with an explicit provider instead of the configured one.
pub fn run_online_with(config: &RunConfig, provider: Option<Box<dyn Provider>>) -> Result<RunOutcome> {
    let levels = config.resolve_levels()?;
    let mut session = Session::open(config, provider)?;
    let sim = Simulator::new(config.label_mode.label_map());
    let mut explorer_config = config.explorer.clone();
    explorer_config.seed ^= config.seed;
    let mut explorer = Explorer::new(levels.clone(), config.label_mode.label_map(), explorer_config);
    let level_index: HashMap<String, usize> = levels.iter().enumerate().map(|(i, (n, _))| (n.clone(), i)).collect();
    let mut position: Vec<(WorldState, usize)> = levels.iter().map(|(_, s)| (s.clone(), 0)).collect();
    let budgets = config.budgets.clone();
    let mut steps: u64 = 0;
    let mut since_accept: u64 = 0;
    let calls_enabled = budgets.llm_calls_total > 0;

    let limit = |steps: u64, since: u64| {
        if since >= budgets.stall_steps {
            Some(Termination::Stall)
        } else if steps >= budgets.interaction_steps {
            Some(Termination::InteractionBudget)
        } else {
            None
        }
    };

    let termination = 'run: loop {
        if calls_enabled && session.learner.budget().remaining() == 0 {
            break Termination::CallBudget;
        }
        let Some(level) = explorer.next_level() else { break Termination::FrontierExhausted };
        let name = levels[level].0.clone();
        let classes = active_classes(&session.learner);
        let batch = explorer.select_batch(level, explorer.config().batch_size, &classes);
        let paths = explorer.graph(level).shortest_paths();
        for cand in batch {
            if position[level].1 != cand.node {
                let graph = explorer.graph(level);
                let mut state = (**graph.initial()).clone();
                let mut node = 0;
                for a in paths.path_to(cand.node) {
                    state = sim.step(&state, a);
                    node = graph.edge(node, a).expect("path follows executed edges");
                    steps += 1;
                    since_accept += 1;
                    if let Some(t) = limit(steps, since_accept) {
                        break 'run t;
                    }
                }
                debug_assert_eq!(state.key(), graph.state(cand.node).key());
                position[level] = (state, node);
            }
            let (state, node) = position[level].clone();
            let next = sim.step(&state, cand.action);
            steps += 1;
            since_accept += 1;
            let (rec, explained) = session.learner.observe(&name, &state, cand.action, &next);
            let (to, _) = explorer.ingest(level, node, cand.action, &next, rec.id, explained);
            session.learner.log.push(Event::Transition {
                level: name.clone(),
                id: rec.id,
                fresh: rec.fresh,
                action: cand.action.as_str().to_string(),
                explained,
                steps,
            });
            position[level] = (next, to);
            if let Some(t) = limit(steps, since_accept) {
                break 'run t;
            }
        }

        while let Some(target) = explorer.pop_pending() {
            if !calls_enabled || session.learner.store.ledger().is_explained(target) {
                continue;
            }
            let before = session.learner.version_count();
            if let Some(t) = session.update(target) {
                break 'run t;
            }
            if session.learner.version_count() > before {
                since_accept = 0;
                for tid in session.learner.store.ledger().explained() {
                    let t = session.learner.store.get(tid);
                    explorer.add_to_bank(tid, level_index[&t.level], &t.state.clone(), t.action);
                }
            }
        }

        if explorer.retrain_due() {
            let classes = active_classes(&session.learner);
            if classes.len() >= 2 {
                let ingested = explorer.ingested();
                if let Some(loss) = explorer.retrain(&classes) {
                    session.learner.log.push(Event::Retrain { ingested, classes: classes.len(), loss });
                }
            }
        }
    };

    let eval = eval_set(config, &levels, &session.dir)?;
    explorer.save_encoder(&session.dir.encoder())?;
    let forest = session.learner.classes.clone();
    explorer.export_embeddings(&session.dir.root.join("explorer/embeddings"), &|tid| forest.leaf_of(tid))?;
    session.finish(termination, steps, false, &eval)
}

/// Learns from a fixed archive in order, without exploration, and evaluates
/// on a held-out archive.
pub fn run_offline(config: &RunConfig, train: &Path, eval: &Path) -> Result<RunOutcome> {
    run_offline_with(config, train, eval, None)
}

pub fn run_offline_with(config: &RunConfig, train: &Path, eval: &Path, provider: Option<Box<dyn Provider>>) -> Result<RunOutcome> {
    let train = archive::read_archive(train)?;
    let eval: Vec<Transition> = archive::read_archive(eval)?.iter().map(Archived::transition).collect();
    let mut session = Session::open(config, provider)?;
    let calls_enabled = config.budgets.llm_calls_total > 0;
    let mut termination = Termination::ArchiveDone;
    let mut truncated = false;
    let mut consumed = 0u64;
    for (k, t) in train.iter().enumerate() {
        consumed = k as u64 + 1;
        let (rec, explained) = session.learner.observe(&t.level, &t.state, t.action, &t.next);
        session.learner.log.push(Event::Transition {
            level: t.level.clone(),
            id: rec.id,
            fresh: rec.fresh,
            action: t.action.as_str().to_string(),
            explained,
            steps: k as u64 + 1,
        });
        if explained || !calls_enabled {
            continue;
        }
        if let Some(stop) = session.update(rec.id) {
            termination = stop;
            truncated = k + 1 < train.len() || !session.learner.store.ledger().is_explained(rec.id);
            break;
        }
    }
    session.finish(termination, consumed, truncated, &eval)
}
