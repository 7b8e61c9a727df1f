use std::collections::BTreeMap;
use std::fmt;

use baba_sim::{Action, Direction, Kind, Pos, Word, WorldState};

/// Identity of an object for matching across a transition.
pub type Identity = (Kind, Word, Option<Direction>);

/// Canonical state-difference signature of a transition.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DiffSignature {
    pub action: Action,
    pub moved: BTreeMap<(Identity, (i32, i32)), usize>,
    pub removed: BTreeMap<Identity, usize>,
    pub added: BTreeMap<Identity, usize>,
    pub grid_changed: bool,
    pub termination_changed: bool,
}

impl DiffSignature {
    pub fn is_empty(&self) -> bool {
        self.moved.is_empty() && self.removed.is_empty() && self.added.is_empty() && !self.grid_changed && !self.termination_changed
    }
}

fn ident(id: &Identity) -> String {
    let (kind, word, dir) = id;
    match dir {
        Some(d) => format!("{}:{}:{}", kind.as_str(), word, d.as_str()),
        None => format!("{}:{}", kind.as_str(), word),
    }
}

impl fmt::Display for DiffSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.action)?;
        for ((id, (dx, dy)), n) in &self.moved {
            write!(f, " move({},{dx},{dy})x{n}", ident(id))?;
        }
        for (id, n) in &self.removed {
            write!(f, " del({})x{n}", ident(id))?;
        }
        for (id, n) in &self.added {
            write!(f, " add({})x{n}", ident(id))?;
        }
        if self.grid_changed {
            write!(f, " grid")?;
        }
        if self.termination_changed {
            write!(f, " terminated")?;
        }
        Ok(())
    }
}

/// Largest side for which matching is solved exactly.
pub const EXACT_LIMIT: usize = 8;

fn l1(a: Pos, b: Pos) -> i64 {
    ((a.x - b.x).abs() + (a.y - b.y).abs()) as i64
}

/// Pairs (i, j) of a maximum-cardinality matching between `a` and `b` with
/// minimum total L1 distance; exact when both sides have at most
/// [`EXACT_LIMIT`] items, greedy nearest-first otherwise.
pub fn match_positions(a: &[Pos], b: &[Pos]) -> Vec<(usize, usize)> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    if a.len() <= EXACT_LIMIT && b.len() <= EXACT_LIMIT {
        if a.len() <= b.len() {
            exact(a, b)
        } else {
            exact(b, a).into_iter().map(|(j, i)| (i, j)).collect()
        }
    } else {
        greedy(a, b)
    }
}

/// Every item of `small` is matched to a distinct item of `large`.
fn exact(small: &[Pos], large: &[Pos]) -> Vec<(usize, usize)> {
    let s = small.len();
    let full = 1usize << s;
    const INF: i64 = i64::MAX / 4;
    // best[j][mask]: min cost using the first j items of `large` to cover `mask`.
    let mut best = vec![vec![INF; full]; large.len() + 1];
    best[0][0] = 0;
    for j in 0..large.len() {
        for mask in 0..full {
            let cur = best[j][mask];
            if cur == INF {
                continue;
            }
            if cur < best[j + 1][mask] {
                best[j + 1][mask] = cur;
            }
            for i in (0..s).filter(|i| mask & (1 << i) == 0) {
                let next = mask | (1 << i);
                let c = cur + l1(small[i], large[j]);
                if c < best[j + 1][next] {
                    best[j + 1][next] = c;
                }
            }
        }
    }
    let mut pairs = Vec::with_capacity(s);
    let mut mask = full - 1;
    for j in (0..large.len()).rev() {
        if best[j][mask] == best[j + 1][mask] {
            continue;
        }
        let i = (0..s)
            .find(|&i| mask & (1 << i) != 0 && best[j][mask ^ (1 << i)] != INF && best[j][mask ^ (1 << i)] + l1(small[i], large[j]) == best[j + 1][mask])
            .expect("DP backtrack");
        pairs.push((i, j));
        mask ^= 1 << i;
    }
    pairs
}

fn greedy(a: &[Pos], b: &[Pos]) -> Vec<(usize, usize)> {
    let mut all: Vec<(i64, usize, usize)> =
        a.iter().enumerate().flat_map(|(i, &p)| b.iter().enumerate().map(move |(j, &q)| (l1(p, q), i, j))).collect();
    all.sort_unstable();
    let (mut used_a, mut used_b) = (vec![false; a.len()], vec![false; b.len()]);
    let mut pairs = Vec::new();
    for (_, i, j) in all {
        if !used_a[i] && !used_b[j] {
            used_a[i] = true;
            used_b[j] = true;
            pairs.push((i, j));
        }
    }
    pairs
}

pub fn diff_signature(state: &WorldState, action: Action, next: &WorldState) -> DiffSignature {
    let mut before: BTreeMap<Identity, Vec<Pos>> = BTreeMap::new();
    let mut after: BTreeMap<Identity, Vec<Pos>> = BTreeMap::new();
    for o in &state.objects {
        before.entry((o.kind, o.word, o.direction)).or_default().push(o.pos);
    }
    for o in &next.objects {
        after.entry((o.kind, o.word, o.direction)).or_default().push(o.pos);
    }
    let mut sig = DiffSignature {
        action,
        moved: BTreeMap::new(),
        removed: BTreeMap::new(),
        added: BTreeMap::new(),
        grid_changed: (state.width, state.height) != (next.width, next.height),
        termination_changed: state.terminated != next.terminated,
    };
    let keys: std::collections::BTreeSet<Identity> = before.keys().chain(after.keys()).copied().collect();
    for id in keys {
        let mut a = before.remove(&id).unwrap_or_default();
        let mut b = after.remove(&id).unwrap_or_default();
        cancel_common(&mut a, &mut b);
        let pairs = match_positions(&a, &b);
        for &(i, j) in &pairs {
            let d = (b[j].x - a[i].x, b[j].y - a[i].y);
            if d != (0, 0) {
                *sig.moved.entry((id, d)).or_default() += 1;
            }
        }
        if a.len() > pairs.len() {
            sig.removed.insert(id, a.len() - pairs.len());
        }
        if b.len() > pairs.len() {
            sig.added.insert(id, b.len() - pairs.len());
        }
    }
    sig
}

/// Drops objects present at the same position on both sides; such pairs
/// belong to some optimal matching.
fn cancel_common(a: &mut Vec<Pos>, b: &mut Vec<Pos>) {
    a.sort_unstable();
    b.sort_unstable();
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (Vec::new(), Vec::new());
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
            std::cmp::Ordering::Less => {
                ra.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                rb.push(b[j]);
                j += 1;
            }
        }
    }
    ra.extend_from_slice(&a[i..]);
    rb.extend_from_slice(&b[j..]);
    *a = ra;
    *b = rb;
}
