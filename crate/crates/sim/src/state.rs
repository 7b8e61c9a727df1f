use std::fmt;

use serde::{Deserialize, Serialize};

use crate::vocab::Word;

/// Token kind. Declaration order is the canonical sort order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    RuleNoun,
    RuleOperator,
    RuleProperty,
    WorldObject,
}

impl Kind {
    pub const ALL: [Kind; 4] = [Kind::RuleNoun, Kind::RuleOperator, Kind::RuleProperty, Kind::WorldObject];

    pub fn as_str(self) -> &'static str {
        match self {
            Kind::RuleNoun => "rule_noun",
            Kind::RuleOperator => "rule_operator",
            Kind::RuleProperty => "rule_property",
            Kind::WorldObject => "world_object",
        }
    }

    pub fn parse(s: &str) -> Option<Kind> {
        Kind::ALL.into_iter().find(|k| k.as_str() == s)
    }

    pub fn is_text(self) -> bool {
        self != Kind::WorldObject
    }

    /// Whether `word` may appear with this kind.
    pub fn admits(self, word: Word) -> bool {
        match self {
            Kind::RuleNoun => word.is_noun(),
            Kind::RuleOperator => word.is_operator(),
            Kind::RuleProperty => word.is_property_label(),
            Kind::WorldObject => word.is_world_noun(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    Up,
    Right,
    Down,
    Left,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::Up, Direction::Right, Direction::Down, Direction::Left];

    pub fn delta(self) -> (i32, i32) {
        match self {
            Direction::Up => (0, -1),
            Direction::Right => (1, 0),
            Direction::Down => (0, 1),
            Direction::Left => (-1, 0),
        }
    }

    pub fn reverse(self) -> Direction {
        match self {
            Direction::Up => Direction::Down,
            Direction::Right => Direction::Left,
            Direction::Down => Direction::Up,
            Direction::Left => Direction::Right,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Up => "up",
            Direction::Right => "right",
            Direction::Down => "down",
            Direction::Left => "left",
        }
    }

    pub fn parse(s: &str) -> Option<Direction> {
        Direction::ALL.into_iter().find(|d| d.as_str() == s)
    }
}

/// The five agent actions, in tie-break order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Idle,
    Up,
    Right,
    Down,
    Left,
}

impl Action {
    pub const ALL: [Action; 5] = [Action::Idle, Action::Up, Action::Right, Action::Down, Action::Left];

    pub fn direction(self) -> Option<Direction> {
        match self {
            Action::Idle => None,
            Action::Up => Some(Direction::Up),
            Action::Right => Some(Direction::Right),
            Action::Down => Some(Direction::Down),
            Action::Left => Some(Direction::Left),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Action::Idle => "idle",
            Action::Up => "up",
            Action::Right => "right",
            Action::Down => "down",
            Action::Left => "left",
        }
    }

    pub fn parse(s: &str) -> Option<Action> {
        Action::ALL.into_iter().find(|a| a.as_str() == s)
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pos {
    pub x: i32,
    pub y: i32,
}

impl Pos {
    pub const fn new(x: i32, y: i32) -> Pos {
        Pos { x, y }
    }

    pub fn step(self, dir: Direction) -> Pos {
        let (dx, dy) = dir.delta();
        Pos::new(self.x + dx, self.y + dy)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GridObject {
    pub kind: Kind,
    pub word: Word,
    pub pos: Pos,
    pub direction: Option<Direction>,
}

impl GridObject {
    pub fn world(word: &str, x: i32, y: i32) -> GridObject {
        GridObject {
            kind: Kind::WorldObject,
            word: Word::of(word),
            pos: Pos::new(x, y),
            direction: Some(Direction::Right),
        }
    }

    /// A text block; the kind follows from the word.
    pub fn text(word: &str, x: i32, y: i32) -> GridObject {
        let word = Word::of(word);
        let kind = if word.is_operator() {
            Kind::RuleOperator
        } else if word.is_noun() {
            Kind::RuleNoun
        } else {
            Kind::RuleProperty
        };
        GridObject { kind, word, pos: Pos::new(x, y), direction: None }
    }

    pub fn facing(mut self, dir: Direction) -> GridObject {
        self.direction = Some(dir);
        self
    }

    pub fn is_text(&self) -> bool {
        self.kind.is_text()
    }

    /// The noun whose rules govern this object: its own word for world
    /// objects, `text` for every text block.
    pub fn governing_noun(&self) -> Word {
        if self.is_text() {
            Word::TEXT
        } else {
            self.word
        }
    }

    fn sort_key(&self) -> (Kind, Word, i32, i32, Option<Direction>) {
        (self.kind, self.word, self.pos.x, self.pos.y, self.direction)
    }
}

impl PartialOrd for GridObject {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for GridObject {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

/// A full environment state. Objects form a multiset; equality is equality of
/// canonical forms.
#[derive(Clone, Debug)]
pub struct WorldState {
    pub width: i32,
    pub height: i32,
    pub terminated: bool,
    pub objects: Vec<GridObject>,
}

impl WorldState {
    pub fn new(width: i32, height: i32, objects: Vec<GridObject>) -> WorldState {
        let mut state = WorldState { width, height, terminated: false, objects };
        state.canonicalize_in_place();
        state
    }

    pub fn in_bounds(&self, pos: Pos) -> bool {
        pos.x >= 0 && pos.y >= 0 && pos.x < self.width && pos.y < self.height
    }

    pub fn canonicalize_in_place(&mut self) {
        self.objects.sort_unstable();
    }

    pub fn canonical(&self) -> WorldState {
        let mut s = self.clone();
        s.canonicalize_in_place();
        s
    }

    pub fn is_canonical(&self) -> bool {
        self.objects.windows(2).all(|w| w[0] <= w[1])
    }

    /// Order-independent identity of this state.
    pub fn key(&self) -> StateKey {
        StateKey::of(self)
    }

    /// Objects sharing a cell with `pos`.
    pub fn objects_at(&self, pos: Pos) -> impl Iterator<Item = &GridObject> {
        self.objects.iter().filter(move |o| o.pos == pos)
    }
}

impl PartialEq for WorldState {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for WorldState {}

/// Compact canonical encoding of a [`WorldState`]. Two states have equal keys
/// exactly when their canonical forms are equal.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateKey(Box<[u8]>);

const OBJECT_BYTES: usize = 7;

impl StateKey {
    pub fn of(state: &WorldState) -> StateKey {
        let mut objects: Vec<&GridObject> = state.objects.iter().collect();
        if !state.is_canonical() {
            objects.sort_unstable();
        }
        let mut bytes = Vec::with_capacity(5 + objects.len() * OBJECT_BYTES);
        bytes.extend_from_slice(&(state.width as u16).to_le_bytes());
        bytes.extend_from_slice(&(state.height as u16).to_le_bytes());
        bytes.push(state.terminated as u8);
        for o in objects {
            bytes.push(o.kind as u8);
            bytes.push(o.word.index());
            bytes.extend_from_slice(&(o.pos.x as u16).to_le_bytes());
            bytes.extend_from_slice(&(o.pos.y as u16).to_le_bytes());
            bytes.push(o.direction.map_or(0, |d| d as u8 + 1));
        }
        StateKey(bytes.into_boxed_slice())
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    /// Lowercase hex of the key bytes.
    pub fn to_hex(&self) -> String {
        self.0.iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl fmt::Debug for StateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "StateKey({} bytes)", self.0.len())
    }
}
