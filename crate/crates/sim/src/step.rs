//! One turn of the environment.
//!
//! Phases, in order: parse rules; move `YOU` objects (lead object first along
//! the movement direction); re-parse; advance `MOVE` objects in canonical
//! order, reversing once when blocked; re-parse; apply noun rewrites from a
//! snapshot, with `X IS X` suppressing every other rewrite of `X`; re-parse;
//! resolve overlaps (`SINK`, `DEFEAT`, `HOT`/`MELT`, `OPEN`/`SHUT`) cell by
//! cell in row-major order within each float layer; finally check `WIN`.

use std::collections::BTreeMap;

use crate::labels::LabelMap;
use crate::rules::RuleBook;
use crate::state::{Action, Direction, GridObject, Kind, Pos, WorldState};
use crate::vocab::Property;

/// Steps states whose rule properties are written with `labels`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Simulator {
    labels: LabelMap,
}

impl Simulator {
    pub fn new(labels: LabelMap) -> Simulator {
        Simulator { labels }
    }

    pub fn labels(&self) -> &LabelMap {
        &self.labels
    }

    pub fn rulebook(&self, state: &WorldState) -> RuleBook {
        RuleBook::of_state(state, &self.labels)
    }

    pub fn step(&self, state: &WorldState, action: Action) -> WorldState {
        if state.terminated {
            return state.canonical();
        }
        let mut turn = Turn { state: state.canonical(), labels: &self.labels };

        let mut book = self.rulebook(&turn.state);
        if let Some(dir) = action.direction() {
            turn.move_you(&book, dir);
            turn.state.canonicalize_in_place();
            book = self.rulebook(&turn.state);
        }

        turn.move_auto(&book);
        turn.state.canonicalize_in_place();
        book = self.rulebook(&turn.state);

        if turn.transform(&book) {
            turn.state.canonicalize_in_place();
            book = self.rulebook(&turn.state);
        }

        turn.resolve_overlaps(&book);
        turn.state.terminated = turn.wins(&book);
        turn.state.canonicalize_in_place();
        turn.state
    }
}

/// Steps a state written in canonical property words.
pub fn step(state: &WorldState, action: Action) -> WorldState {
    Simulator::default().step(state, action)
}

struct Turn<'a> {
    state: WorldState,
    labels: &'a LabelMap,
}

impl Turn<'_> {
    fn objects(&self) -> &[GridObject] {
        &self.state.objects
    }

    /// Object indices in an order that does not depend on which surface
    /// words the properties carry: property labels rank by their role.
    fn processing_order(&self) -> Vec<usize> {
        let rank = |o: &GridObject| {
            let word = self.labels.role(o.word).map_or(o.word, Property::canonical_word);
            (o.kind, word, o.pos.x, o.pos.y, o.direction)
        };
        let mut order: Vec<usize> = (0..self.objects().len()).collect();
        order.sort_by(|&a, &b| rank(&self.objects()[a]).cmp(&rank(&self.objects()[b])));
        order
    }

    /// Tries to move object `idx` one cell along `dir`, pushing the run of
    /// pushable objects ahead of it. Returns whether it moved. A blocked
    /// world object still turns to face `dir`.
    fn try_move(&mut self, book: &RuleBook, idx: usize, dir: Direction) -> bool {
        let mut chain = vec![idx];
        let mut cell = self.objects()[idx].pos.step(dir);
        let blocked = loop {
            if !self.state.in_bounds(cell) {
                break true;
            }
            let mut pushed_any = false;
            let mut stop = false;
            for (j, o) in self.objects().iter().enumerate() {
                if o.pos != cell || j == idx {
                    continue;
                }
                if book.pushable(o) {
                    chain.push(j);
                    pushed_any = true;
                } else if book.stops(o) {
                    stop = true;
                }
            }
            if stop {
                break true;
            }
            if !pushed_any {
                break false;
            }
            cell = cell.step(dir);
        };

        let objects = &mut self.state.objects;
        if blocked {
            if objects[idx].kind == Kind::WorldObject {
                objects[idx].direction = Some(dir);
            }
            return false;
        }
        for j in chain {
            let o = &mut objects[j];
            o.pos = o.pos.step(dir);
            if o.kind == Kind::WorldObject {
                o.direction = Some(dir);
            }
        }
        true
    }

    fn move_you(&mut self, book: &RuleBook, dir: Direction) {
        let (dx, dy) = dir.delta();
        let mut movers: Vec<usize> = self
            .processing_order()
            .into_iter()
            .filter(|&i| book.has(&self.objects()[i], Property::You))
            .collect();
        // lead object first; stable sort keeps canonical order among ties
        movers.sort_by_key(|&i| {
            let p = self.objects()[i].pos;
            -(p.x * dx + p.y * dy)
        });
        for i in movers {
            self.try_move(book, i, dir);
        }
    }

    fn move_auto(&mut self, book: &RuleBook) {
        let movers: Vec<usize> = self
            .processing_order()
            .into_iter()
            .filter(|&i| {
                let o = &self.objects()[i];
                o.direction.is_some() && book.has(o, Property::Move)
            })
            .collect();
        for i in movers {
            let Some(dir) = self.objects()[i].direction else { continue };
            if !self.try_move(book, i, dir) {
                self.try_move(book, i, dir.reverse());
            }
        }
    }

    /// Applies noun rewrites. Returns whether anything changed.
    fn transform(&mut self, book: &RuleBook) -> bool {
        let rewrites: BTreeMap<_, _> = book.transforms().collect();
        if rewrites.is_empty() {
            return false;
        }
        let mut changed = false;
        let mut out = Vec::with_capacity(self.objects().len());
        for o in self.objects() {
            let Some(targets) = rewrites.get(&o.governing_noun()) else {
                out.push(*o);
                continue;
            };
            changed = true;
            for &target in targets {
                let next = if target.is_world_noun() {
                    GridObject {
                        kind: Kind::WorldObject,
                        word: target,
                        pos: o.pos,
                        direction: Some(o.direction.unwrap_or(Direction::Right)),
                    }
                } else {
                    // `X IS TEXT`: a world object becomes the text block of its own noun
                    GridObject { kind: Kind::RuleNoun, word: o.word, pos: o.pos, direction: None }
                };
                out.push(next);
            }
        }
        self.state.objects = out;
        changed
    }

    /// Cell/float-layer groups in row-major cell order.
    fn groups(&self, book: &RuleBook) -> Vec<Vec<usize>> {
        let mut groups: BTreeMap<(i32, i32, bool), Vec<usize>> = BTreeMap::new();
        for i in self.processing_order() {
            let o = &self.objects()[i];
            groups.entry((o.pos.y, o.pos.x, book.floats(o))).or_default().push(i);
        }
        groups.into_values().collect()
    }

    fn remove(&mut self, dead: &[bool]) {
        let mut i = 0;
        self.state.objects.retain(|_| {
            let keep = !dead[i];
            i += 1;
            keep
        });
    }

    fn resolve_overlaps(&mut self, book: &RuleBook) {
        let has = |o: &GridObject, p| book.has(o, p);

        // SINK: a sinking object takes its whole layer of the cell with it
        let mut dead = vec![false; self.objects().len()];
        for g in self.groups(book) {
            if g.len() >= 2 && g.iter().any(|&i| has(&self.objects()[i], Property::Sink)) {
                g.iter().for_each(|&i| dead[i] = true);
            }
        }
        self.remove(&dead);

        // DEFEAT destroys YOU
        let mut dead = vec![false; self.objects().len()];
        for g in self.groups(book) {
            if g.iter().any(|&i| has(&self.objects()[i], Property::Defeat)) {
                for &i in &g {
                    dead[i] |= has(&self.objects()[i], Property::You);
                }
            }
        }
        self.remove(&dead);

        // HOT destroys MELT
        let mut dead = vec![false; self.objects().len()];
        for g in self.groups(book) {
            if g.iter().any(|&i| has(&self.objects()[i], Property::Hot)) {
                for &i in &g {
                    dead[i] |= has(&self.objects()[i], Property::Melt);
                }
            }
        }
        self.remove(&dead);

        // OPEN and SHUT cancel pairwise
        let mut dead = vec![false; self.objects().len()];
        for g in self.groups(book) {
            let opens: Vec<usize> = g.iter().copied().filter(|&i| has(&self.objects()[i], Property::Open)).collect();
            let shuts: Vec<usize> = g.iter().copied().filter(|&i| has(&self.objects()[i], Property::Shut)).collect();
            for &o in &opens {
                if dead[o] {
                    continue;
                }
                if let Some(&s) = shuts.iter().find(|&&s| s != o && !dead[s]) {
                    dead[o] = true;
                    dead[s] = true;
                }
            }
        }
        self.remove(&dead);
    }

    fn wins(&self, book: &RuleBook) -> bool {
        self.groups(book).iter().any(|g| {
            let any = |p| g.iter().any(|&i| book.has(&self.objects()[i], p));
            any(Property::You) && any(Property::Win)
        })
    }
}

/// Position of every object of `word`, handy in tests and traces.
pub fn positions_of(state: &WorldState, kind: Kind, word: &str) -> Vec<Pos> {
    let w = crate::vocab::Word::of(word);
    let mut v: Vec<Pos> = state.objects.iter().filter(|o| o.kind == kind && o.word == w).map(|o| o.pos).collect();
    v.sort();
    v
}
