use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::store::EvidenceStore;
use crate::runtime::{Judge, Program};

/// A rejected candidate stored as the test that separated a class.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SplitTest {
    pub program: Program,
    /// Child holding members the test still explains.
    pub kept: usize,
    /// Child holding members the test lost.
    pub lost: usize,
    /// Known verdicts of the test, by transition id.
    pub verdicts: BTreeMap<usize, bool>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Root(usize),
    Refined,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassNode {
    pub id: usize,
    pub kind: NodeKind,
    pub parent: Option<usize>,
    pub depth: usize,
    pub split: Option<SplitTest>,
    /// Current members; empty for internal nodes.
    pub members: BTreeSet<usize>,
}

impl ClassNode {
    pub fn is_leaf(&self) -> bool {
        self.split.is_none()
    }
}

/// The ρ-rooted split tree. Leaves partition the explained set.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassForest {
    nodes: Vec<ClassNode>,
    roots: BTreeMap<usize, usize>,
    leaf_of: BTreeMap<usize, usize>,
    threshold: usize,
}

impl Default for ClassForest {
    fn default() -> Self {
        ClassForest::new(8)
    }
}

impl ClassForest {
    /// `threshold` is the member count at which a leaf counts as active.
    pub fn new(threshold: usize) -> ClassForest {
        ClassForest { nodes: Vec::new(), roots: BTreeMap::new(), leaf_of: BTreeMap::new(), threshold }
    }

    pub fn node(&self, id: usize) -> &ClassNode {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[ClassNode] {
        &self.nodes
    }

    pub fn root(&self, rho: usize) -> Option<usize> {
        self.roots.get(&rho).copied()
    }

    pub fn leaves(&self) -> impl Iterator<Item = &ClassNode> {
        self.nodes.iter().filter(|n| n.is_leaf())
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves().count()
    }

    pub fn leaf_of(&self, tid: usize) -> Option<usize> {
        self.leaf_of.get(&tid).copied()
    }

    pub fn assignments(&self) -> &BTreeMap<usize, usize> {
        &self.leaf_of
    }

    pub fn threshold(&self) -> usize {
        self.threshold
    }

    /// Leaves with at least `threshold` members.
    pub fn active_classes(&self) -> Vec<usize> {
        self.leaves().filter(|n| n.members.len() >= self.threshold).map(|n| n.id).collect()
    }

    fn push_node(&mut self, kind: NodeKind, parent: Option<usize>) -> usize {
        let id = self.nodes.len();
        let depth = parent.map_or(0, |p| self.nodes[p].depth + 1);
        self.nodes.push(ClassNode { id, kind, parent, depth, split: None, members: BTreeSet::new() });
        id
    }

    fn root_for(&mut self, rho: usize) -> usize {
        if let Some(&id) = self.roots.get(&rho) {
            return id;
        }
        let id = self.push_node(NodeKind::Root(rho), None);
        self.roots.insert(rho, id);
        id
    }

    pub fn remove(&mut self, tid: usize) -> Option<usize> {
        let leaf = self.leaf_of.remove(&tid)?;
        self.nodes[leaf].members.remove(&tid);
        Some(leaf)
    }

    fn place(&mut self, tid: usize, leaf: usize) {
        debug_assert!(self.nodes[leaf].is_leaf());
        if let Some(old) = self.leaf_of.insert(tid, leaf) {
            self.nodes[old].members.remove(&tid);
        }
        self.nodes[leaf].members.insert(tid);
    }

    /// Descends from root(ρ) by stored split tests; tests are run through
    /// `judge` only where no verdict is cached. Does not change membership.
    pub fn route_many(&mut self, items: &[(usize, usize)], store: &EvidenceStore, judge: &dyn Judge) -> Vec<usize> {
        let mut at: Vec<usize> = items.iter().map(|&(_, rho)| self.root_for(rho)).collect();
        loop {
            let mut by_node: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for (k, &node) in at.iter().enumerate() {
                if !self.nodes[node].is_leaf() {
                    by_node.entry(node).or_default().push(k);
                }
            }
            if by_node.is_empty() {
                return at;
            }
            for (node, ks) in by_node {
                let test = self.nodes[node].split.as_mut().expect("internal node has a test");
                let unknown: Vec<usize> =
                    ks.iter().map(|&k| items[k].0).filter(|tid| !test.verdicts.contains_key(tid)).collect::<BTreeSet<_>>().into_iter().collect();
                if !unknown.is_empty() {
                    let outcomes = judge.judge(&test.program, &store.cases(&unknown));
                    for (tid, o) in unknown.iter().zip(outcomes) {
                        test.verdicts.insert(*tid, o.explains());
                    }
                }
                for k in ks {
                    at[k] = if test.verdicts[&items[k].0] { test.kept } else { test.lost };
                }
            }
        }
    }

    /// Routes an explained transition and records it in the reached leaf.
    pub fn insert(&mut self, tid: usize, rho: usize, store: &EvidenceStore, judge: &dyn Judge) -> usize {
        let leaf = self.route(tid, rho, store, judge);
        self.place(tid, leaf);
        leaf
    }

    pub fn route(&mut self, tid: usize, rho: usize, store: &EvidenceStore, judge: &dyn Judge) -> usize {
        self.route_many(&[(tid, rho)], store, judge)[0]
    }

    /// Brings membership in line with the store's current explained set:
    /// transitions that lost their explanation (or their ρ) leave, newly
    /// explained ones are routed in. Returns the ids routed in.
    pub fn sync(&mut self, store: &EvidenceStore, judge: &dyn Judge) -> Vec<usize> {
        let ledger = store.ledger();
        let stale: Vec<usize> = self
            .leaf_of
            .iter()
            .filter(|&(&tid, &leaf)| match ledger.rho(tid) {
                None => true,
                Some(rho) => self.root_of(leaf) != rho,
            })
            .map(|(&tid, _)| tid)
            .collect();
        for tid in stale {
            self.remove(tid);
        }
        let entering: Vec<(usize, usize)> = (0..store.len())
            .filter(|tid| !self.leaf_of.contains_key(tid))
            .filter_map(|tid| ledger.rho(tid).map(|rho| (tid, rho)))
            .collect();
        let leaves = self.route_many(&entering, store, judge);
        for (&(tid, _), leaf) in entering.iter().zip(leaves) {
            self.place(tid, leaf);
        }
        entering.into_iter().map(|(tid, _)| tid).collect()
    }

    fn root_of(&self, mut node: usize) -> usize {
        while let Some(p) = self.nodes[node].parent {
            node = p;
        }
        match self.nodes[node].kind {
            NodeKind::Root(j) => j,
            NodeKind::Refined => unreachable!("parentless refined node"),
        }
    }

    /// Splits `leaf` into members `test` keeps and members in `lost`.
    /// Returns `None`, leaving the leaf intact, unless both sides are nonempty.
    pub fn split(
        &mut self,
        leaf: usize,
        lost: &BTreeSet<usize>,
        test: &Program,
    ) -> Option<(usize, usize)> {
        assert!(self.nodes[leaf].is_leaf(), "only leaves split");
        let members = &self.nodes[leaf].members;
        let (lost_side, kept_side): (BTreeSet<usize>, BTreeSet<usize>) = members.iter().partition(|t| lost.contains(t));
        if lost_side.is_empty() || kept_side.is_empty() {
            return None;
        }
        let kept = self.push_node(NodeKind::Refined, Some(leaf));
        let lost_id = self.push_node(NodeKind::Refined, Some(leaf));
        let mut cache = BTreeMap::new();
        cache.extend(kept_side.iter().map(|&t| (t, true)));
        cache.extend(lost_side.iter().map(|&t| (t, false)));
        self.nodes[leaf].members.clear();
        self.nodes[leaf].split = Some(SplitTest { program: test.clone(), kept, lost: lost_id, verdicts: cache });
        for t in kept_side {
            self.place(t, kept);
        }
        for t in lost_side {
            self.place(t, lost_id);
        }
        Some((kept, lost_id))
    }

    /// Draws up to `n` affected leaves uniformly and `m` transitions from each.
    /// Output is sorted by transition id.
    pub fn stratified_counterexamples(&self, lpc: &[usize], n: usize, m: usize, rng: &mut impl Rng) -> Vec<usize> {
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &tid in lpc {
            if let Some(leaf) = self.leaf_of(tid) {
                groups.entry(leaf).or_default().push(tid);
            }
        }
        let groups: Vec<Vec<usize>> = groups.into_values().collect();
        let mut picked = Vec::new();
        for g in index::sample(rng, groups.len(), n.min(groups.len())) {
            let group = &groups[g];
            picked.extend(index::sample(rng, group.len(), m.min(group.len())).into_iter().map(|i| group[i]));
        }
        picked.sort_unstable();
        picked
    }

    /// Checks that leaves partition `explained` and agree with the index.
    pub fn check_partition(&self, explained: &[usize]) -> Result<(), String> {
        let mut seen = BTreeSet::new();
        for leaf in self.leaves() {
            for &t in &leaf.members {
                if !seen.insert(t) {
                    return Err(format!("transition {t} in two leaves"));
                }
                if self.leaf_of.get(&t) != Some(&leaf.id) {
                    return Err(format!("index disagrees for transition {t}"));
                }
            }
        }
        for n in self.nodes.iter().filter(|n| !n.is_leaf()) {
            if !n.members.is_empty() {
                return Err(format!("internal node {} holds members", n.id));
            }
        }
        let want: BTreeSet<usize> = explained.iter().copied().collect();
        if seen != want {
            return Err(format!("leaves cover {} transitions, explained set has {}", seen.len(), want.len()));
        }
        Ok(())
    }
}
