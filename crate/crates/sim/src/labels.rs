use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::state::{Kind, WorldState};
use crate::vocab::{Property, Word};

/// Which surface vocabulary rule properties are shown with.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelMode {
    #[default]
    Default,
    Wonderland,
}

impl LabelMode {
    pub fn label_map(self) -> LabelMap {
        match self {
            LabelMode::Default => LabelMap::identity(),
            LabelMode::Wonderland => LabelMap::wonderland(),
        }
    }

    pub fn parse(s: &str) -> Option<LabelMode> {
        match s {
            "default" => Some(LabelMode::Default),
            "wonderland" => Some(LabelMode::Wonderland),
            _ => None,
        }
    }
}

/// Bijection from property roles to the words that denote them on the grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LabelMap {
    surface: [Word; 12],
}

impl LabelMap {
    pub fn identity() -> LabelMap {
        LabelMap { surface: Property::ALL.map(Property::canonical_word) }
    }

    pub fn wonderland() -> LabelMap {
        LabelMap { surface: Property::ALL.map(Property::wonderland_word) }
    }

    /// Builds a map from explicit surface words; fails unless the words are
    /// twelve distinct property labels.
    pub fn from_surface(surface: [Word; 12]) -> Result<LabelMap, SimError> {
        for (i, w) in surface.iter().enumerate() {
            if !w.is_property_label() || surface[..i].contains(w) {
                return Err(SimError::NotBijective(w.as_str().to_string()));
            }
        }
        Ok(LabelMap { surface })
    }

    pub fn is_identity(&self) -> bool {
        *self == LabelMap::identity()
    }

    pub fn surface(&self, p: Property) -> Word {
        self.surface[p.index()]
    }

    /// The role denoted by a surface word under this map.
    pub fn role(&self, word: Word) -> Option<Property> {
        self.surface.iter().position(|w| *w == word).map(|i| Property::ALL[i])
    }

    /// Replaces every canonical rule-property word by its surface word.
    pub fn apply(&self, state: &WorldState) -> Result<WorldState, SimError> {
        self.rewrite(state, |w| w.canonical_property().map(|p| self.surface(p)))
    }

    /// Inverse of [`LabelMap::apply`].
    pub fn unapply(&self, state: &WorldState) -> Result<WorldState, SimError> {
        self.rewrite(state, |w| self.role(w).map(Property::canonical_word))
    }

    fn rewrite(
        &self,
        state: &WorldState,
        f: impl Fn(Word) -> Option<Word>,
    ) -> Result<WorldState, SimError> {
        let mut out = state.clone();
        for o in out.objects.iter_mut().filter(|o| o.kind == Kind::RuleProperty) {
            o.word = f(o.word).ok_or_else(|| SimError::Vocabulary {
                kind: o.kind.as_str(),
                word: o.word.as_str().to_string(),
            })?;
        }
        out.canonicalize_in_place();
        Ok(out)
    }
}

impl Default for LabelMap {
    fn default() -> Self {
        LabelMap::identity()
    }
}

/// Free-function form of [`LabelMap::apply`].
pub fn apply_label_map(state: &WorldState, map: &LabelMap) -> Result<WorldState, SimError> {
    map.apply(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::GridObject;

    #[test]
    fn wonderland_table_rows() {
        let m = LabelMap::wonderland();
        let pairs = [
            ("defeat", "wake"),
            ("float", "wrong"),
            ("hot", "grin"),
            ("melt", "curious"),
            ("move", "drink"),
            ("open", "mad"),
            ("push", "grow"),
            ("shut", "late"),
            ("sink", "begin"),
            ("stop", "eat"),
            ("win", "shrink"),
            ("you", "strange"),
        ];
        for (canon, surface) in pairs {
            let p = Word::of(canon).canonical_property().unwrap();
            assert_eq!(m.surface(p), Word::of(surface));
            assert_eq!(m.role(Word::of(surface)), Some(p));
        }
    }

    #[test]
    fn apply_touches_only_properties() {
        let s = WorldState::new(
            5,
            2,
            vec![
                GridObject::text("baba", 0, 0),
                GridObject::text("is", 1, 0),
                GridObject::text("you", 2, 0),
                GridObject::text("and", 3, 0),
                GridObject::text("win", 4, 0),
                GridObject::text("stop", 4, 1),
                GridObject::world("baba", 0, 1),
            ],
        );
        let m = LabelMap::wonderland().apply(&s).unwrap();
        let words: Vec<&str> = m.objects.iter().map(|o| o.word.as_str()).collect();
        for w in ["baba", "is", "and", "strange", "shrink", "eat"] {
            assert!(words.contains(&w), "{w} missing from {words:?}");
        }
        assert_eq!(LabelMap::wonderland().unapply(&m).unwrap(), s);
        assert_eq!(LabelMap::identity().apply(&s).unwrap(), s);
    }

    #[test]
    fn apply_rejects_words_outside_domain() {
        let s = WorldState::new(1, 1, vec![GridObject::text("strange", 0, 0)]);
        assert!(matches!(LabelMap::wonderland().apply(&s), Err(SimError::Vocabulary { .. })));
    }

    #[test]
    fn from_surface_requires_bijection() {
        let mut words = Property::ALL.map(Property::wonderland_word);
        assert!(LabelMap::from_surface(words).is_ok());
        words[1] = words[0];
        assert!(LabelMap::from_surface(words).is_err());
    }
}
