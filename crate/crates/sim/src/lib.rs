//! A deterministic simulator for a rule-mutable grid puzzle in the style of
//! *Baba Is You*: rules are sentences of text blocks on the grid, so the
//! agent's own moves rewrite the transition law.

mod document;
mod error;
mod labels;
mod rules;
mod state;
mod step;
mod vocab;

pub mod levels;

pub use document::{
    decode_json, decode_level, decode_state, encode_json, encode_level, encode_state, load_level, parse_level, Level,
    LevelDocument, ObjectDocument, StateDocument, StepInfo,
};
pub use error::SimError;
pub use labels::{apply_label_map, LabelMap, LabelMode};
pub use rules::{parse_rules, Rule, RuleBook};
pub use state::{Action, Direction, GridObject, Kind, Pos, StateKey, WorldState};
pub use step::{positions_of, step, Simulator};
pub use vocab::{Property, PropertySet, Word, NOUNS, OPERATORS, PROPERTIES, WONDERLAND};

/// Canonical, order-independent identity of a state.
pub fn canonicalize(state: &WorldState) -> StateKey {
    state.key()
}
