use std::collections::{HashSet, VecDeque};

use baba_sim::{Action, Simulator, WorldState};

use crate::evidence::archive::Archived;

/// Breadth-first enumeration of canonical transitions from `initial`, all
/// five actions per state, stopping after `cap` transitions.
pub fn bfs_coverage(level: &str, initial: &WorldState, sim: &Simulator, cap: usize) -> Vec<Archived> {
    let mut out = Vec::new();
    let mut seen = HashSet::from([initial.key()]);
    let mut queue = VecDeque::from([initial.canonical()]);
    while let Some(s) = queue.pop_front() {
        for a in Action::ALL {
            if out.len() >= cap {
                return out;
            }
            let next = sim.step(&s, a);
            if seen.insert(next.key()) {
                queue.push_back(next.clone());
            }
            out.push(Archived::new(out.len(), level, s.clone(), a, next));
        }
    }
    out
}

/// Coverage archive over several levels totalling at most `total`
/// transitions: levels share the cap evenly and small levels hand their
/// unused share to the rest. Ids are renumbered from zero.
pub fn collect_coverage(levels: &[(String, WorldState)], sim: &Simulator, total: usize) -> Vec<Archived> {
    let full: Vec<Vec<Archived>> = levels.iter().map(|(name, s)| bfs_coverage(name, s, sim, total)).collect();
    let quotas = water_fill(&full.iter().map(Vec::len).collect::<Vec<_>>(), total);
    let mut out = Vec::new();
    for (archive, quota) in full.into_iter().zip(quotas) {
        for mut t in archive.into_iter().take(quota) {
            t.id = out.len();
            out.push(t);
        }
    }
    out
}

/// Splits `total` across bins of the given capacities as evenly as possible;
/// leftovers go to earlier bins first.
pub fn water_fill(capacity: &[usize], total: usize) -> Vec<usize> {
    let mut quota = vec![0; capacity.len()];
    let mut left = total;
    loop {
        let open: Vec<usize> = (0..capacity.len()).filter(|&i| quota[i] < capacity[i]).collect();
        if open.is_empty() || left == 0 {
            return quota;
        }
        let share = (left / open.len()).max(1);
        for i in open {
            let add = share.min(capacity[i] - quota[i]).min(left);
            quota[i] += add;
            left -= add;
        }
    }
}
