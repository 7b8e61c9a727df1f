//! The update loop: prompts, candidate programs, the preservation check and
//! class refinement from rejected candidates.

mod prompt;
mod provider;

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::Arc;

use baba_sim::{Action, WorldState};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::events::{Event, RunLog};
use crate::evidence::{ClassForest, EvidenceStore, Recorded};
use crate::runtime::{Judge, OutcomeClass, Program};

pub use prompt::{build_prompt, extract_program, PromptPayload, ProviderRequest, TransitionView, CONTRACT, SKELETON};
pub use provider::{LiveProvider, Provider, ProviderError, ScriptedProvider};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UpdateConfig {
    /// Provider calls allowed per target before giving up; set from the run budgets.
    #[serde(skip)]
    pub calls_per_iteration: usize,
    /// Classes sampled into a reference set (n).
    pub classes_per_prompt: usize,
    /// Transitions sampled per class (m).
    pub per_class: usize,
    pub prompt_limit_bytes: usize,
    /// Consecutive provider failures treated as an outage.
    pub outage_threshold: usize,
    pub active_class_threshold: usize,
}

impl Default for UpdateConfig {
    fn default() -> Self {
        UpdateConfig {
            calls_per_iteration: 15,
            classes_per_prompt: 3,
            per_class: 1,
            prompt_limit_bytes: 200_000,
            outage_threshold: 3,
            active_class_threshold: 8,
        }
    }
}

/// Outcome of checking one candidate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Accepted { version: usize },
    TargetUnexplained,
    /// Carries L_pc: transitions the current program explains and the candidate loses.
    Preservation { lost: Vec<usize> },
    Invalid { cause: String },
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Accepted { .. } => "accepted",
            Verdict::TargetUnexplained => "rejected_target_unexplained",
            Verdict::Preservation { .. } => "rejected_preservation",
            Verdict::Invalid { .. } => "invalid",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    RetryCap,
    Budget,
    Outage,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::RetryCap => "retry_cap",
            StopReason::Budget => "budget",
            StopReason::Outage => "provider_outage",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IterationResult {
    Accepted { version: usize, calls: usize },
    Exhausted { reason: StopReason, calls: usize },
}

/// Provider-call accounting for a whole run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CallBudget {
    pub total: usize,
    pub used: usize,
}

impl CallBudget {
    pub fn new(total: usize) -> CallBudget {
        CallBudget { total, used: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.total.saturating_sub(self.used)
    }
}

/// Owns D_t, the accepted versions and the class tree, and runs updates.
pub struct Learner {
    pub store: EvidenceStore,
    pub classes: ClassForest,
    pub log: RunLog,
    judge: Arc<dyn Judge>,
    config: UpdateConfig,
    budget: CallBudget,
    rng: ChaCha8Rng,
    transcripts: Option<PathBuf>,
    programs: Option<PathBuf>,
    failures_in_row: usize,
}

impl Learner {
    pub fn new(judge: Arc<dyn Judge>, config: UpdateConfig, calls_total: usize, seed: u64) -> Learner {
        Learner {
            store: EvidenceStore::new(),
            classes: ClassForest::new(config.active_class_threshold),
            log: RunLog::new(),
            judge,
            config,
            budget: CallBudget::new(calls_total),
            rng: ChaCha8Rng::seed_from_u64(seed),
            transcripts: None,
            programs: None,
            failures_in_row: 0,
        }
    }

    /// Persists per-call transcripts and accepted sources under these directories.
    pub fn with_artifacts(mut self, transcripts: PathBuf, programs: PathBuf) -> Learner {
        self.transcripts = Some(transcripts);
        self.programs = Some(programs);
        self
    }

    pub fn with_log(mut self, log: RunLog) -> Learner {
        self.log = log;
        self
    }

    pub fn budget(&self) -> CallBudget {
        self.budget
    }

    pub fn judge(&self) -> &Arc<dyn Judge> {
        &self.judge
    }

    pub fn config(&self) -> &UpdateConfig {
        &self.config
    }

    pub fn current_program(&self) -> Option<&Arc<Program>> {
        self.store.ledger().current_program()
    }

    pub fn version_count(&self) -> usize {
        self.store.ledger().versions().len()
    }

    /// Installs a program as P_0 without a provider call or acceptance check.
    pub fn install_initial(&mut self, program: Program) -> usize {
        let outcomes = self.store.sweep(&program, &*self.judge);
        let bits: Vec<bool> = outcomes.iter().map(|o| o.explains()).collect();
        let version = self.store.accept(Arc::new(program), &bits);
        self.after_accept(version);
        self.log_accepted(version, None);
        version
    }

    /// Adds an observed transition; returns whether the current program explains it.
    pub fn observe(&mut self, level: &str, state: &WorldState, action: Action, next: &WorldState) -> (Recorded, bool) {
        let rec = self.store.record(state, action, next, level);
        if !rec.fresh {
            return (rec, self.store.ledger().is_explained(rec.id));
        }
        let explained = self.store.evaluate_new(&[rec.id], &*self.judge)[0];
        if let Some(rho) = self.store.ledger().rho(rec.id) {
            self.classes.insert(rec.id, rho, &self.store, &*self.judge);
        }
        (rec, explained)
    }

    /// Checks candidate `q` against E(P_i; D_t) ∪ {target}; on success `q`
    /// becomes the next version and the class tree is resynchronised.
    pub fn acceptance_check(&mut self, q: &Program, target: usize) -> (Verdict, Vec<bool>) {
        let outcomes = self.store.sweep(q, &*self.judge);
        if let Some(o) = outcomes.first().filter(|o| o.class == OutcomeClass::CompileFailure) {
            if outcomes.iter().all(|x| x.class == OutcomeClass::CompileFailure) {
                let cause = o.cause.clone().unwrap_or_default();
                return (Verdict::Invalid { cause }, vec![false; outcomes.len()]);
            }
        }
        let bits: Vec<bool> = outcomes.iter().map(|o| o.explains()).collect();
        let verdict = self.verdict_for(&bits, target);
        if let Verdict::Accepted { .. } = verdict {
            let version = self.store.accept(Arc::new(q.clone()), &bits);
            self.after_accept(version);
            return (Verdict::Accepted { version }, bits);
        }
        (verdict, bits)
    }

    /// The acceptance predicate alone, from a candidate's explained bits.
    pub fn verdict_for(&self, bits: &[bool], target: usize) -> Verdict {
        if !bits[target] {
            return Verdict::TargetUnexplained;
        }
        let lost: Vec<usize> = self.store.ledger().explained().into_iter().filter(|&t| !bits[t]).collect();
        if lost.is_empty() {
            Verdict::Accepted { version: self.version_count() }
        } else {
            Verdict::Preservation { lost }
        }
    }

    fn after_accept(&mut self, version: usize) {
        self.classes.sync(&self.store, &*self.judge);
        let program = Arc::clone(self.store.ledger().program(version));
        if let Some(dir) = &self.programs {
            let path = dir.join(format!("v{version:03}-{}.src", program.id));
            if let Err(e) = std::fs::create_dir_all(dir).and_then(|_| std::fs::write(&path, &program.source)) {
                log::error!("could not persist {}: {e}", path.display());
            }
        }
    }

    fn log_accepted(&mut self, version: usize, target: Option<usize>) {
        let program = Arc::clone(self.store.ledger().program(version));
        self.log.push(Event::Accepted {
            version,
            program: program.id.clone(),
            target,
            explained: self.store.ledger().explained().len(),
            leaves: self.classes.leaf_count(),
        });
    }

    /// Splits every leaf that `lost` cuts partially, then samples the next
    /// reference set from `lost` over the refined partition.
    pub fn handle_rejection(&mut self, lost: &[usize], q: &Program, target: usize) -> Vec<usize> {
        let lost_set: BTreeSet<usize> = lost.iter().copied().collect();
        let touched: BTreeSet<usize> = lost.iter().filter_map(|&t| self.classes.leaf_of(t)).collect();
        for leaf in touched {
            if let Some((kept, lost_child)) = self.classes.split(leaf, &lost_set, q) {
                self.log.push(Event::Split {
                    node: leaf,
                    kept,
                    lost: lost_child,
                    test_program: q.id.clone(),
                    kept_members: self.classes.node(kept).members.iter().copied().collect(),
                    lost_members: self.classes.node(lost_child).members.iter().copied().collect(),
                });
            }
        }
        let (n, m) = (self.config.classes_per_prompt, self.config.per_class);
        let reference = self.classes.stratified_counterexamples(lost, n, m, &mut self.rng);
        self.log.push(Event::ReferenceSet {
            target,
            transitions: reference.clone(),
            classes: reference.iter().filter_map(|&t| self.classes.leaf_of(t)).collect(),
        });
        reference
    }

    /// Runs the update loop for one unexplained target.
    pub fn update_iteration(&mut self, target: usize, provider: &mut dyn Provider) -> IterationResult {
        debug_assert!(!self.store.ledger().is_explained(target), "target already explained");
        let mut reference: Vec<usize> = Vec::new();
        let mut calls = 0;
        while calls < self.config.calls_per_iteration {
            if self.budget.remaining() == 0 {
                return self.exhausted(target, StopReason::Budget, calls);
            }
            let request = {
                let refs: Vec<_> = reference.iter().map(|&t| self.store.get(t)).collect();
                build_prompt(self.current_program().map(|p| &**p), self.store.get(target), &refs, self.config.prompt_limit_bytes)
            };
            self.budget.used += 1;
            calls += 1;
            let call = self.budget.used;
            let response = provider.propose(&request);
            self.write_transcript(call, &request, &response);
            self.log.push(Event::ProviderCall {
                call,
                target,
                attempt: calls,
                ok: response.is_ok(),
                error: response.as_ref().err().map(|e| e.to_string()),
            });
            let source = match response {
                Ok(s) => {
                    self.failures_in_row = 0;
                    s
                }
                Err(e) => {
                    log::warn!("provider call {call} failed: {e}");
                    self.failures_in_row += 1;
                    if self.failures_in_row >= self.config.outage_threshold {
                        return self.exhausted(target, StopReason::Outage, calls);
                    }
                    continue;
                }
            };
            let q = Program::new(source);
            let (verdict, _) = self.acceptance_check(&q, target);
            let (lost, cause) = match &verdict {
                Verdict::Preservation { lost } => (lost.clone(), None),
                Verdict::Invalid { cause } => (Vec::new(), Some(cause.clone())),
                _ => (Vec::new(), None),
            };
            self.log.push(Event::Verdict {
                call,
                target,
                program: q.id.clone(),
                verdict: verdict.name().to_string(),
                lost: lost.clone(),
                cause,
            });
            match verdict {
                Verdict::Accepted { version } => {
                    self.log_accepted(version, Some(target));
                    return IterationResult::Accepted { version, calls };
                }
                Verdict::Preservation { lost } => reference = self.handle_rejection(&lost, &q, target),
                _ => {}
            }
        }
        self.exhausted(target, StopReason::RetryCap, calls)
    }

    fn exhausted(&mut self, target: usize, reason: StopReason, calls: usize) -> IterationResult {
        self.log.push(Event::Exhausted { target, reason: reason.as_str().to_string(), calls });
        IterationResult::Exhausted { reason, calls }
    }

    fn write_transcript(&self, call: usize, request: &ProviderRequest, response: &Result<String, ProviderError>) {
        let Some(dir) = &self.transcripts else { return };
        let doc = serde_json::json!({
            "call": call,
            "prompt": request.prompt,
            "payload": request.payload,
            "response": response.as_ref().ok(),
            "error": response.as_ref().err().map(|e| e.to_string()),
        });
        let path = dir.join(format!("call-{call:03}.json"));
        let text = serde_json::to_string_pretty(&doc).expect("transcripts serialize");
        if let Err(e) = std::fs::create_dir_all(dir).and_then(|_| std::fs::write(&path, text)) {
            log::error!("could not write transcript {}: {e}", path.display());
        }
    }
}
