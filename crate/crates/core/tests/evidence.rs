mod common;

use std::collections::BTreeSet;
use std::sync::Arc;

use alice_core::evidence::{rho_of_row, ClassForest, EvidenceStore};
use alice_core::runtime::{Judge, Program};
use baba_sim::{Action, GridObject, WorldState};
use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn accept(store: &mut EvidenceStore, judge: &dyn Judge, program: Program) -> usize {
    let bits: Vec<bool> = store.sweep(&program, judge).iter().map(|o| o.explains()).collect();
    store.accept(Arc::new(program), &bits)
}

#[test]
fn duplicates_merge_and_count() {
    let mut store = EvidenceStore::new();
    let a = store.record(&baba_at(0), Action::Right, &baba_at(1), "row");
    let b = store.record(&baba_at(0), Action::Right, &baba_at(1), "row");
    assert!(a.fresh && !b.fresh);
    assert_eq!(a.id, b.id);
    assert_eq!(store.len(), 1);
    assert_eq!(store.get(a.id).multiplicity, 2);
}

#[test]
fn object_order_does_not_matter() {
    let mut store = EvidenceStore::new();
    let objs = vec![GridObject::world("baba", 0, 0), GridObject::world("rock", 2, 1), GridObject::text("is", 3, 1)];
    let mut reversed = objs.clone();
    reversed.reverse();
    let s1 = WorldState { width: 4, height: 2, terminated: false, objects: objs };
    let s2 = WorldState { width: 4, height: 2, terminated: false, objects: reversed };
    let a = store.record(&s1, Action::Idle, &s1, "x");
    let b = store.record(&s2, Action::Idle, &s2, "x");
    assert_eq!(a.id, b.id);
}

#[test]
fn contradicting_outcomes_are_both_kept() {
    let mut store = EvidenceStore::new();
    let a = store.record(&baba_at(0), Action::Right, &baba_at(1), "row");
    let b = store.record(&baba_at(0), Action::Right, &baba_at(2), "row");
    assert!(b.fresh);
    assert_eq!(b.conflict, Some(a.id));
    assert_eq!(store.len(), 2);
}

#[test]
fn rho_reproduces_the_worked_example() {
    // versions: P0 none, P1 explains, P2 loses it, P3..P5 explain again
    let plan = [false, true, false, true, true, true];
    let mut store = synthetic_store(1);
    let judge = TableJudge::new(&store);
    for &hit in &plan {
        accept(&mut store, &judge, Program::new(if hit { "all" } else { "none" }));
    }
    assert_eq!(store.ledger().rho(0), Some(3));
    assert_eq!(rho_of_row(&plan), Some(3));
}

#[test]
fn late_transitions_get_rho_lazily() {
    let template = synthetic_store(2);
    let judge = TableJudge::new(&template);
    let mut store = synthetic_store(1);
    for src in ["explains 1", "explains 0", "explains 1", "all", "all", "all"] {
        accept(&mut store, &judge, Program::new(src));
    }
    let before = judge.call_count();
    let rec = store.record(&baba_at(1), Action::Right, &baba_at(2), "row");
    assert_eq!(rec.id, 1);
    assert_eq!(store.evaluate_new(&[1], &judge), vec![true]);
    assert_eq!(store.ledger().rho(1), Some(2));
    // v5, v4, v3, v2 explain; v1 does not and stops the walk
    assert_eq!(judge.call_count() - before, 5);
    assert_eq!(store.ledger().bit(1, 0), None);
}

#[test]
fn unexplained_late_transition_has_no_rho() {
    let template = synthetic_store(2);
    let judge = TableJudge::new(&template);
    let mut store = synthetic_store(1);
    accept(&mut store, &judge, Program::new("explains 0"));
    store.record(&baba_at(1), Action::Right, &baba_at(2), "row");
    assert_eq!(store.evaluate_new(&[1], &judge), vec![false]);
    assert_eq!(store.ledger().rho(1), None);
    assert!(!store.ledger().is_explained(1));
}

/// Replays a sequence of lost sets over ρ-groups from scratch.
fn brute_partition(groups: Vec<BTreeSet<usize>>, lost_sets: &[BTreeSet<usize>]) -> BTreeSet<BTreeSet<usize>> {
    let mut parts = groups;
    for lost in lost_sets {
        let mut next = Vec::new();
        for g in parts {
            let (l, k): (BTreeSet<usize>, BTreeSet<usize>) = g.iter().partition(|t| lost.contains(t));
            if l.is_empty() || k.is_empty() {
                next.push(g);
            } else {
                next.push(k);
                next.push(l);
            }
        }
        parts = next;
    }
    parts.into_iter().collect()
}

fn leaf_sets(forest: &ClassForest) -> BTreeSet<BTreeSet<usize>> {
    forest.leaves().filter(|n| !n.members.is_empty()).map(|n| n.members.clone()).collect()
}

fn apply_rejection(forest: &mut ClassForest, lost: &BTreeSet<usize>, universe: usize) -> Program {
    let candidate = explains((0..universe).filter(|t| !lost.contains(t)));
    let touched: BTreeSet<usize> = lost.iter().filter_map(|&t| forest.leaf_of(t)).collect();
    for leaf in touched {
        forest.split(leaf, lost, &candidate);
    }
    candidate
}

struct Scenario {
    store: EvidenceStore,
    judge: TableJudge,
    forest: ClassForest,
    groups: Vec<BTreeSet<usize>>,
}

/// 40 transitions; 0..30 explained by both versions (ρ=0), 30..36 only by
/// v1 (ρ=1). A 41st transition, recorded later, is explained by v1 alone.
fn scenario() -> Scenario {
    let template = synthetic_store(41);
    let judge = TableJudge::new(&template);
    let mut store = synthetic_store(40);
    accept(&mut store, &judge, explains(0..30));
    accept(&mut store, &judge, explains((0..36).chain([40])));
    let mut forest = ClassForest::new(2);
    forest.sync(&store, &judge);
    let groups = vec![(0..30).collect(), (30..36).collect()];
    Scenario { store, judge, forest, groups }
}

#[test]
fn ten_scripted_splits_keep_a_refining_partition() {
    let Scenario { store, judge, mut forest, groups } = scenario();
    let explained = store.ledger().explained();
    assert_eq!(explained.len(), 36);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut lost_sets = Vec::new();
    let mut before = leaf_sets(&forest);
    for _ in 0..10 {
        let lost: BTreeSet<usize> = explained.iter().copied().filter(|_| rng.gen_bool(0.4)).collect();
        apply_rejection(&mut forest, &lost, 41);
        lost_sets.push(lost);
        forest.check_partition(&explained).unwrap();
        let after = leaf_sets(&forest);
        for leaf in &after {
            assert!(before.iter().any(|old| leaf.is_subset(old)), "leaf {leaf:?} straddles earlier classes");
        }
        assert_eq!(after, brute_partition(groups.clone(), &lost_sets));
        before = after;
    }
    for &t in &explained {
        let rho = store.ledger().rho(t).unwrap();
        assert_eq!(forest.route(t, rho, &store, &judge), forest.leaf_of(t).unwrap());
    }
}

#[test]
fn new_members_route_like_a_replay() {
    let Scenario { mut store, judge, mut forest, groups } = scenario();
    let explained = store.ledger().explained();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut history = Vec::new();
    for _ in 0..6 {
        let lost: BTreeSet<usize> = explained.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
        let q = apply_rejection(&mut forest, &lost, 41);
        history.push((lost, q));
    }
    let rec = store.record(&baba_at(40), Action::Right, &baba_at(41), "row");
    assert_eq!(rec.id, 40);
    // explained only by v1, so ρ=1; candidates that kept everything outside L explain it
    let bits = store.evaluate_new(&[40], &judge);
    assert_eq!(bits, vec![true]);
    let rho = store.ledger().rho(40).unwrap();
    assert_eq!(rho, 1);
    let leaf = forest.insert(40, rho, &store, &judge);

    // phantom replay: the new transition follows the kept side of every split
    // that separates its current group
    let mut group = groups[1].clone();
    for (lost, _) in &history {
        let (l, k): (BTreeSet<usize>, BTreeSet<usize>) = group.iter().partition(|t| lost.contains(t));
        if !l.is_empty() && !k.is_empty() {
            group = k;
        }
    }
    let mut members = forest.node(leaf).members.clone();
    members.remove(&40);
    assert_eq!(members, group);
}

#[test]
fn split_requires_both_sides() {
    let Scenario { mut forest, .. } = scenario();
    let root = forest.root(0).unwrap();
    let all: BTreeSet<usize> = (0..30).collect();
    assert!(forest.split(root, &all, &Program::new("none")).is_none());
    assert!(forest.split(root, &BTreeSet::new(), &Program::new("all")).is_none());
    assert!(forest.node(root).is_leaf());
}

#[test]
fn stratified_sampling_takes_one_per_class() {
    let Scenario { mut forest, .. } = scenario();
    let explained: Vec<usize> = (0..36).collect();
    for k in 0..4 {
        let lost: BTreeSet<usize> = explained.iter().copied().filter(|t| (t >> k) & 1 == 1).collect();
        apply_rejection(&mut forest, &lost, 41);
    }
    let lpc: Vec<usize> = (0..36).filter(|t| t % 3 == 0).collect();
    let touched: BTreeSet<usize> = lpc.iter().map(|&t| forest.leaf_of(t).unwrap()).collect();
    assert!(touched.len() > 3);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let picked = forest.stratified_counterexamples(&lpc, 3, 1, &mut rng);
    assert_eq!(picked.len(), 3);
    assert!(picked.windows(2).all(|w| w[0] < w[1]));
    assert!(picked.iter().all(|t| lpc.contains(t)));
    let classes: BTreeSet<usize> = picked.iter().map(|&t| forest.leaf_of(t).unwrap()).collect();
    assert_eq!(classes.len(), 3);

    // fewer affected classes than n: take what there is
    let small = vec![0, 3];
    let expect = small.iter().map(|&t| forest.leaf_of(t).unwrap()).collect::<BTreeSet<_>>().len();
    assert_eq!(forest.stratified_counterexamples(&small, 3, 1, &mut rng).len(), expect);
    let again = forest.stratified_counterexamples(&lpc, 3, 1, &mut ChaCha8Rng::seed_from_u64(5));
    assert_eq!(again, picked);
}

#[test]
fn sync_drops_members_that_lose_their_root() {
    let Scenario { mut store, judge, mut forest, .. } = scenario();
    // v2 keeps 0..20 and 30..36 only: 20..30 leave, 0..20 keep ρ=0
    accept(&mut store, &judge, explains((0..20).chain(30..36)));
    forest.sync(&store, &judge);
    forest.check_partition(&store.ledger().explained()).unwrap();
    assert!(forest.leaf_of(25).is_none());
    assert_eq!(forest.leaf_of(3), forest.root(0));
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn lazy_rho_matches_brute_force(
        plan in prop::collection::vec((any::<bool>(), prop::collection::vec(any::<bool>(), 8)), 1..8),
        late in 0usize..8,
    ) {
        // version v explains transition t iff plan[v].1[t]; transitions at or
        // after `late` arrive only after the last version is accepted
        let template = synthetic_store(8);
        let judge = TableJudge::new(&template);
        let mut store = synthetic_store(late);
        let programs: Vec<Program> = plan.iter().map(|(_, row)| explains((0..8).filter(|&t| row[t]))).collect();
        for p in &programs {
            accept(&mut store, &judge, p.clone());
        }
        let new: Vec<usize> = (late..8).map(|i| store.record(&baba_at(i as i32), Action::Right, &baba_at(i as i32 + 1), "row").id).collect();
        prop_assert_eq!(new.len(), 8 - late);
        store.evaluate_new(&new, &judge);
        for t in 0..8 {
            let row: Vec<bool> = plan.iter().map(|(_, r)| r[t]).collect();
            prop_assert_eq!(store.ledger().rho(t), rho_of_row(&row), "transition {}", t);
            prop_assert_eq!(store.ledger().is_explained(t), *row.last().unwrap());
        }
    }

    #[test]
    fn splits_always_refine_a_partition(masks in prop::collection::vec(any::<u64>(), 1..12)) {
        let Scenario { store, mut forest, groups, .. } = scenario();
        let explained = store.ledger().explained();
        let mut lost_sets = Vec::new();
        for m in masks {
            let lost: BTreeSet<usize> = explained.iter().copied().filter(|&t| (m >> (t % 64)) & 1 == 1).collect();
            apply_rejection(&mut forest, &lost, 41);
            lost_sets.push(lost);
            prop_assert!(forest.check_partition(&explained).is_ok());
        }
        prop_assert_eq!(leaf_sets(&forest), brute_partition(groups, &lost_sets));
    }

    #[test]
    fn duplicate_recording_matches_distinct_count(xs in prop::collection::vec((0i32..5, 0usize..5), 1..40)) {
        let mut store = EvidenceStore::new();
        let mut distinct = BTreeSet::new();
        for &(x, a) in &xs {
            let action = Action::ALL[a];
            store.record(&baba_at(x), action, &baba_at(x), "row");
            distinct.insert((x, a));
        }
        prop_assert_eq!(store.len(), distinct.len());
        let total: u32 = store.transitions().iter().map(|t| t.multiplicity).sum();
        prop_assert_eq!(total as usize, xs.len());
    }
}
