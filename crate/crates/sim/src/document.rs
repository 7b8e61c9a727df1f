//! JSON state documents:
//!
//! ```json
//! {"grid_size":[w,h],"step":{"terminated":false},
//!  "objects":[{"type":"rule_noun","word":"baba","position":[0,0]},
//!             {"type":"world_object","word":"baba","position":[1,1],"direction":"facing right"}]}
//! ```
//!
//! Level files carry the same fields plus `"name"`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::state::{Direction, GridObject, Kind, Pos, WorldState};
use crate::vocab::Word;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepInfo {
    pub terminated: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectDocument {
    #[serde(rename = "type")]
    pub kind: String,
    pub word: String,
    pub position: [i64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateDocument {
    pub grid_size: [i64; 2],
    pub step: StepInfo,
    pub objects: Vec<ObjectDocument>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelDocument {
    pub name: String,
    #[serde(flatten)]
    pub state: StateDocument,
}

fn direction_label(d: Direction) -> String {
    format!("facing {}", d.as_str())
}

fn parse_direction(s: &str) -> Result<Direction, SimError> {
    let bare = s.strip_prefix("facing ").unwrap_or(s);
    Direction::parse(bare).ok_or_else(|| SimError::UnknownDirection(s.to_string()))
}

/// Emits objects in canonical order.
pub fn encode_state(state: &WorldState) -> StateDocument {
    let canonical = state.canonical();
    StateDocument {
        grid_size: [state.width as i64, state.height as i64],
        step: StepInfo { terminated: state.terminated },
        objects: canonical
            .objects
            .iter()
            .map(|o| ObjectDocument {
                kind: o.kind.as_str().to_string(),
                word: o.word.as_str().to_string(),
                position: [o.pos.x as i64, o.pos.y as i64],
                direction: o.direction.map(direction_label),
            })
            .collect(),
    }
}

/// Validates vocabulary and bounds. A world object without a direction keeps
/// none; see [`decode_level`] for the load-time default.
pub fn decode_state(doc: &StateDocument) -> Result<WorldState, SimError> {
    decode_with(doc, None)
}

fn decode_with(doc: &StateDocument, default_dir: Option<Direction>) -> Result<WorldState, SimError> {
    let [w, h] = doc.grid_size;
    if !(1..=u16::MAX as i64).contains(&w) || !(1..=u16::MAX as i64).contains(&h) {
        return Err(SimError::Malformed(format!("grid_size {w}x{h}")));
    }
    let mut objects = Vec::with_capacity(doc.objects.len());
    for od in &doc.objects {
        let kind = Kind::parse(&od.kind).ok_or_else(|| SimError::UnknownKind(od.kind.clone()))?;
        let word = Word::parse(&od.word)
            .filter(|w| kind.admits(*w))
            .ok_or_else(|| SimError::Vocabulary { kind: kind.as_str(), word: od.word.clone() })?;
        let [x, y] = od.position;
        if x < 0 || y < 0 || x >= w || y >= h {
            return Err(SimError::OutOfBounds { x, y, width: w, height: h });
        }
        let direction = match &od.direction {
            Some(s) => Some(parse_direction(s)?),
            None if kind == Kind::WorldObject => default_dir,
            None => None,
        };
        objects.push(GridObject { kind, word, pos: Pos::new(x as i32, y as i32), direction });
    }
    let mut state = WorldState { width: w as i32, height: h as i32, terminated: doc.step.terminated, objects };
    state.canonicalize_in_place();
    Ok(state)
}

/// Compact single-line JSON for `state`.
pub fn encode_json(state: &WorldState) -> String {
    serde_json::to_string(&encode_state(state)).expect("state documents always serialize")
}

pub fn decode_json(text: &str) -> Result<WorldState, SimError> {
    let doc: StateDocument = serde_json::from_str(text).map_err(|e| SimError::Malformed(e.to_string()))?;
    decode_state(&doc)
}

/// A named initial state.
#[derive(Clone, Debug)]
pub struct Level {
    pub name: String,
    pub state: WorldState,
}

/// Decodes a level document: world objects default to facing right and the
/// returned state is never terminated.
pub fn decode_level(doc: &LevelDocument) -> Result<Level, SimError> {
    let mut state = decode_with(&doc.state, Some(Direction::Right))?;
    state.terminated = false;
    Ok(Level { name: doc.name.clone(), state })
}

pub fn encode_level(level: &Level) -> LevelDocument {
    LevelDocument { name: level.name.clone(), state: encode_state(&level.state) }
}

pub fn load_level(path: impl AsRef<Path>) -> Result<Level, SimError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| SimError::Io { path: path.to_path_buf(), source })?;
    parse_level(&text)
}

pub fn parse_level(text: &str) -> Result<Level, SimError> {
    let doc: LevelDocument = serde_json::from_str(text).map_err(|e| SimError::Malformed(e.to_string()))?;
    decode_level(&doc)
}
