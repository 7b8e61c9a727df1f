use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use baba_sim::{Action, StateKey, WorldState};

/// Reached states of one level and the actions executed from each.
pub struct LevelGraph {
    name: String,
    states: Vec<Arc<WorldState>>,
    index: HashMap<StateKey, usize>,
    edges: Vec<[Option<usize>; 5]>,
    unexecuted: usize,
}

impl LevelGraph {
    pub fn new(name: &str, initial: WorldState) -> LevelGraph {
        let mut g = LevelGraph { name: name.to_string(), states: Vec::new(), index: HashMap::new(), edges: Vec::new(), unexecuted: 0 };
        g.add_state(&initial);
        g
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn initial(&self) -> &Arc<WorldState> {
        &self.states[0]
    }

    pub fn state(&self, node: usize) -> &Arc<WorldState> {
        &self.states[node]
    }

    pub fn node_of(&self, key: &StateKey) -> Option<usize> {
        self.index.get(key).copied()
    }

    pub fn node_count(&self) -> usize {
        self.states.len()
    }

    /// Returns the node and whether it is new.
    pub fn add_state(&mut self, state: &WorldState) -> (usize, bool) {
        let key = state.key();
        if let Some(&id) = self.index.get(&key) {
            return (id, false);
        }
        let id = self.states.len();
        self.states.push(Arc::new(state.canonical()));
        self.index.insert(key, id);
        self.edges.push([None; 5]);
        self.unexecuted += 5;
        (id, true)
    }

    pub fn add_edge(&mut self, from: usize, action: Action, to: usize) {
        let slot = &mut self.edges[from][action.index()];
        if slot.is_none() {
            self.unexecuted -= 1;
        }
        *slot = Some(to);
    }

    pub fn edge(&self, from: usize, action: Action) -> Option<usize> {
        self.edges[from][action.index()]
    }

    pub fn frontier_len(&self) -> usize {
        self.unexecuted
    }

    /// Unexecuted (node, action) pairs, oldest node first, then action order.
    pub fn frontier(&self) -> impl Iterator<Item = (usize, Action)> + '_ {
        self.edges
            .iter()
            .enumerate()
            .flat_map(|(n, slots)| Action::ALL.into_iter().filter(move |a| slots[a.index()].is_none()).map(move |a| (n, a)))
    }

    /// Shortest action path from the initial state to every reached node.
    pub fn shortest_paths(&self) -> PathTree {
        let mut parent = vec![None; self.states.len()];
        let mut seen = vec![false; self.states.len()];
        seen[0] = true;
        let mut queue = VecDeque::from([0usize]);
        while let Some(n) = queue.pop_front() {
            for a in Action::ALL {
                if let Some(m) = self.edges[n][a.index()] {
                    if !seen[m] {
                        seen[m] = true;
                        parent[m] = Some((n, a));
                        queue.push_back(m);
                    }
                }
            }
        }
        PathTree { parent }
    }
}

pub struct PathTree {
    parent: Vec<Option<(usize, Action)>>,
}

impl PathTree {
    /// Actions leading from the initial state to `node`.
    pub fn path_to(&self, mut node: usize) -> Vec<Action> {
        let mut path = Vec::new();
        while let Some((p, a)) = self.parent[node] {
            path.push(a);
            node = p;
        }
        path.reverse();
        path
    }
}
