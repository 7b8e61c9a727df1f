//! Accuracy, class-reduced subsets, purity and BFS coverage datasets.

mod coverage;
mod signature;

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::hash::Hash;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::evidence::Transition;
use crate::runtime::{Case, Judge, OutcomeClass, Program};

pub use coverage::{bfs_coverage, collect_coverage, water_fill};
pub use signature::{diff_signature, match_positions, DiffSignature, Identity, EXACT_LIMIT};

pub fn signature_of(t: &Transition) -> DiffSignature {
    diff_signature(&t.state, t.action, &t.next)
}

/// Heuristic class index of each transition, classes numbered by first appearance.
pub fn heuristic_classes(dataset: &[Transition]) -> Vec<usize> {
    let mut ids: HashMap<DiffSignature, usize> = HashMap::new();
    dataset
        .iter()
        .map(|t| {
            let n = ids.len();
            *ids.entry(signature_of(t)).or_insert(n)
        })
        .collect()
}

/// One representative per (action, signature) class, chosen uniformly under
/// `seed`. Returns dataset indices in class order.
pub fn class_reduced_subset(dataset: &[Transition], seed: u64) -> Vec<usize> {
    let classes = heuristic_classes(dataset);
    let count = classes.iter().copied().max().map_or(0, |m| m + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); count];
    for (i, &c) in classes.iter().enumerate() {
        members[c].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    members.iter().map(|m| m[rng.gen_range(0..m.len())]).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub program: String,
    pub total: usize,
    pub matches: usize,
    pub all_acc: f64,
    pub subset_size: usize,
    pub subset_matches: usize,
    pub balanced_acc: f64,
    pub outcomes: BTreeMap<OutcomeClass, usize>,
    /// Why the program could not run at all, if it could not.
    pub cause: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calls: Option<usize>,
}

impl AccuracyReport {
    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "program      {}", self.program);
        let _ = writeln!(s, "all          {:.4}  ({}/{})", self.all_acc, self.matches, self.total);
        let _ = writeln!(s, "balanced     {:.4}  ({}/{})", self.balanced_acc, self.subset_matches, self.subset_size);
        for (class, n) in &self.outcomes {
            let _ = writeln!(s, "  {:<16}{n}", class.as_str());
        }
        if let Some(c) = &self.cause {
            let _ = writeln!(s, "cause        {c}");
        }
        if let Some(c) = self.calls {
            let _ = writeln!(s, "calls        {c}");
        }
        s
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// All accuracy over the dataset and Balanced accuracy over its
/// class-reduced subset. Failures of any kind count as wrong.
pub fn evaluate(judge: &dyn Judge, program: &Program, dataset: &[Transition], seed: u64) -> AccuracyReport {
    let cases: Vec<Case> = dataset.iter().map(Transition::case).collect();
    let outcomes = judge.judge(program, &cases);
    let hits: Vec<bool> = outcomes.iter().map(|o| o.explains()).collect();
    let subset = class_reduced_subset(dataset, seed);
    let mut counts = BTreeMap::new();
    for o in &outcomes {
        *counts.entry(o.class).or_insert(0) += 1;
    }
    let cause = if !outcomes.is_empty() && outcomes.iter().all(|o| o.class == OutcomeClass::CompileFailure) {
        outcomes[0].cause.clone()
    } else {
        None
    };
    let matches = hits.iter().filter(|&&h| h).count();
    let subset_matches = subset.iter().filter(|&&i| hits[i]).count();
    AccuracyReport {
        program: program.id.clone(),
        total: dataset.len(),
        matches,
        all_acc: ratio(matches, dataset.len()),
        subset_size: subset.len(),
        subset_matches,
        balanced_acc: ratio(subset_matches, subset.len()),
        outcomes: counts,
        cause,
        calls: None,
    }
}

/// Purity of a learned partition with respect to a heuristic one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Purity {
    pub value: f64,
    pub evaluated: usize,
    /// Transitions without a learned class, left out of the value.
    pub unlabelled: usize,
}

/// Micro-averaged one-way purity: each heuristic class contributes the size
/// of its largest learned class.
pub fn purity<H: Ord + Clone, C: Eq + Hash + Clone>(pairs: &[(H, Option<C>)]) -> Purity {
    let mut by_h: BTreeMap<H, HashMap<C, usize>> = BTreeMap::new();
    let mut unlabelled = 0;
    for (h, c) in pairs {
        match c {
            Some(c) => *by_h.entry(h.clone()).or_default().entry(c.clone()).or_default() += 1,
            None => unlabelled += 1,
        }
    }
    let evaluated = pairs.len() - unlabelled;
    let majority: usize = by_h.values().map(|m| m.values().copied().max().unwrap_or(0)).sum();
    Purity { value: ratio(majority, evaluated), evaluated, unlabelled }
}
