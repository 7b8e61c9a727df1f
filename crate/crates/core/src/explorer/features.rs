use baba_sim::{Action, GridObject, LabelMap, Property, RuleBook, WorldState};

/// Sparse feature vector: sorted, deduplicated (index, value) pairs.
pub type SparseVec = Vec<(u32, f64)>;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv(parts: &[&[u8]]) -> u64 {
    let mut h = FNV_OFFSET;
    for part in parts {
        for &b in *part {
            h ^= b as u64;
            h = h.wrapping_mul(FNV_PRIME);
        }
        h ^= 0xff;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

const WINDOW: i32 = 2;

/// Maps (s, a) to a fixed-size vector. The last five slots are the action
/// one-hot and the two before them hold the grid size; everything else is
/// hashed counts.
#[derive(Clone, Debug)]
pub struct Featurizer {
    dim: usize,
    labels: LabelMap,
}

impl Featurizer {
    pub fn new(dim: usize, labels: LabelMap) -> Featurizer {
        assert!(dim > 16, "feature dimension too small");
        Featurizer { dim, labels }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn action_slot(&self, a: Action) -> usize {
        self.dim - 5 + a.index()
    }

    fn hashed_len(&self) -> usize {
        self.dim - 7
    }

    fn bucket(&self, parts: &[&[u8]]) -> u32 {
        (fnv(parts) % self.hashed_len() as u64) as u32
    }

    pub fn featurize(&self, state: &WorldState, action: Action) -> SparseVec {
        let mut out: Vec<(u32, f64)> = Vec::new();
        for o in &state.objects {
            out.push((self.bucket(&[b"kw", o.kind.as_str().as_bytes(), o.word.as_str().as_bytes()]), 1.0));
        }
        for rule in baba_sim::parse_rules(state) {
            out.push((self.bucket(&[b"rule", rule.subject.as_str().as_bytes(), rule.complement.as_str().as_bytes()]), 1.0));
        }
        let book = RuleBook::of_state(state, &self.labels);
        for you in state.objects.iter().filter(|o| book.has(o, Property::You)) {
            self.window(state, you, &mut out);
        }
        out.push(((self.dim - 7) as u32, state.width as f64 / 16.0));
        out.push(((self.dim - 6) as u32, state.height as f64 / 16.0));
        out.push((self.action_slot(action) as u32, 1.0));
        merge(out)
    }

    fn window(&self, state: &WorldState, center: &GridObject, out: &mut Vec<(u32, f64)>) {
        let (cx, cy) = (center.pos.x, center.pos.y);
        for dy in -WINDOW..=WINDOW {
            for dx in -WINDOW..=WINDOW {
                let offset = [dx as i8 as u8, dy as i8 as u8];
                let pos = baba_sim::Pos::new(cx + dx, cy + dy);
                if !state.in_bounds(pos) {
                    out.push((self.bucket(&[b"win", b"border", &offset]), 1.0));
                    continue;
                }
                for o in state.objects_at(pos) {
                    if (dx, dy) == (0, 0) && o == center {
                        continue;
                    }
                    out.push((self.bucket(&[b"win", o.kind.as_str().as_bytes(), o.word.as_str().as_bytes(), &offset]), 1.0));
                }
            }
        }
    }

    pub fn dense(&self, x: &SparseVec) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        for &(i, val) in x {
            v[i as usize] += val;
        }
        v
    }
}

fn merge(mut entries: Vec<(u32, f64)>) -> SparseVec {
    entries.sort_by_key(|e| e.0);
    let mut out: SparseVec = Vec::with_capacity(entries.len());
    for (i, v) in entries {
        match out.last_mut() {
            Some(last) if last.0 == i => last.1 += v,
            _ => out.push((i, v)),
        }
    }
    out
}
