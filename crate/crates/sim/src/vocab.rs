//! Token vocabulary: nouns, operators, canonical rule properties and the
//! alternative surface labels a [`LabelMap`](crate::LabelMap) may use.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Nouns usable as rule subjects/complements. Every noun except `text` is
/// also a world object.
pub const NOUNS: [&str; 30] = [
    "algae", "baba", "bog", "bolt", "brick", "bubble", "cog", "crab", "door", "flag", "flower",
    "grass", "hedge", "ice", "jelly", "keke", "key", "lava", "love", "pillar", "pipe", "reed",
    "rock", "robot", "skull", "star", "text", "tile", "wall", "water",
];

pub const OPERATORS: [&str; 2] = ["and", "is"];

/// Canonical property words, in [`Property`] declaration order.
pub const PROPERTIES: [&str; 12] = [
    "defeat", "float", "hot", "melt", "move", "open", "push", "shut", "sink", "stop", "win", "you",
];

/// Wonderland surface labels, index-aligned with [`PROPERTIES`].
pub const WONDERLAND: [&str; 12] = [
    "wake", "wrong", "grin", "curious", "drink", "mad", "grow", "late", "begin", "eat", "shrink",
    "strange",
];

const NOUN_BASE: u8 = 0;
const OP_BASE: u8 = NOUN_BASE + NOUNS.len() as u8;
const PROP_BASE: u8 = OP_BASE + OPERATORS.len() as u8;
const ALT_BASE: u8 = PROP_BASE + PROPERTIES.len() as u8;
const WORD_COUNT: u8 = ALT_BASE + WONDERLAND.len() as u8;

fn word_str(index: u8) -> &'static str {
    let i = index as usize;
    match index {
        i_ if i_ < OP_BASE => NOUNS[i],
        i_ if i_ < PROP_BASE => OPERATORS[i - OP_BASE as usize],
        i_ if i_ < ALT_BASE => PROPERTIES[i - PROP_BASE as usize],
        _ => WONDERLAND[i - ALT_BASE as usize],
    }
}

/// An interned lowercase vocabulary word.
///
/// Ordering follows the word's spelling so canonical forms do not depend on
/// the internal table layout.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Word(u8);

impl Word {
    pub const TEXT: Word = Word(NOUN_BASE + 26);
    pub const AND: Word = Word(OP_BASE);
    pub const IS: Word = Word(OP_BASE + 1);

    pub fn parse(s: &str) -> Option<Word> {
        (0..WORD_COUNT).map(Word).find(|w| w.as_str() == s)
    }

    /// Looks up `s` and panics if it is not in the vocabulary. Meant for
    /// literals in tests and authored fixtures.
    pub fn of(s: &str) -> Word {
        Word::parse(s).unwrap_or_else(|| panic!("unknown vocabulary word {s:?}"))
    }

    pub fn as_str(self) -> &'static str {
        word_str(self.0)
    }

    /// Stable index into the combined vocabulary table.
    pub fn index(self) -> u8 {
        self.0
    }

    pub fn is_noun(self) -> bool {
        self.0 < OP_BASE
    }

    pub fn is_world_noun(self) -> bool {
        self.is_noun() && self != Word::TEXT
    }

    pub fn is_operator(self) -> bool {
        (OP_BASE..PROP_BASE).contains(&self.0)
    }

    /// True for canonical property words and for alternative surface labels.
    pub fn is_property_label(self) -> bool {
        self.0 >= PROP_BASE
    }

    pub fn canonical_property(self) -> Option<Property> {
        (PROP_BASE..ALT_BASE)
            .contains(&self.0)
            .then(|| Property::ALL[(self.0 - PROP_BASE) as usize])
    }

    pub fn nouns() -> impl Iterator<Item = Word> {
        (NOUN_BASE..OP_BASE).map(Word)
    }

    pub fn world_nouns() -> impl Iterator<Item = Word> {
        Word::nouns().filter(|w| *w != Word::TEXT)
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.as_str().cmp(other.as_str())
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Word {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Word::parse(&s).ok_or_else(|| serde::de::Error::custom(format!("unknown word {s:?}")))
    }
}

/// Behavioural role of a rule property. Roles never change under a label
/// remap; only the word that denotes them does.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Property {
    Defeat,
    Float,
    Hot,
    Melt,
    Move,
    Open,
    Push,
    Shut,
    Sink,
    Stop,
    Win,
    You,
}

impl Property {
    pub const ALL: [Property; 12] = [
        Property::Defeat,
        Property::Float,
        Property::Hot,
        Property::Melt,
        Property::Move,
        Property::Open,
        Property::Push,
        Property::Shut,
        Property::Sink,
        Property::Stop,
        Property::Win,
        Property::You,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn canonical_word(self) -> Word {
        Word(PROP_BASE + self as u8)
    }

    pub fn wonderland_word(self) -> Word {
        Word(ALT_BASE + self as u8)
    }
}

/// Small bitset of [`Property`] roles.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct PropertySet(u16);

impl PropertySet {
    pub fn insert(&mut self, p: Property) {
        self.0 |= 1 << p.index();
    }

    pub fn contains(self, p: Property) -> bool {
        self.0 & (1 << p.index()) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }
}

impl FromIterator<Property> for PropertySet {
    fn from_iter<I: IntoIterator<Item = Property>>(iter: I) -> Self {
        let mut set = PropertySet::default();
        for p in iter {
            set.insert(p);
        }
        set
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_word_round_trips_through_parse() {
        for i in 0..WORD_COUNT {
            let w = Word(i);
            assert_eq!(Word::parse(w.as_str()), Some(w));
        }
        assert_eq!(Word::parse("xyzzy"), None);
    }

    #[test]
    fn classification() {
        assert!(Word::of("baba").is_world_noun());
        assert!(Word::of("text").is_noun());
        assert!(!Word::of("text").is_world_noun());
        assert!(Word::of("is").is_operator());
        assert_eq!(Word::of("you").canonical_property(), Some(Property::You));
        assert!(Word::of("strange").is_property_label());
        assert_eq!(Word::of("strange").canonical_property(), None);
        assert_eq!(Property::Push.wonderland_word(), Word::of("grow"));
        assert_eq!(Word::TEXT.as_str(), "text");
        assert_eq!(Word::world_nouns().count(), 29);
    }

    #[test]
    fn words_order_by_spelling() {
        assert!(Word::of("and") < Word::of("baba"));
        assert!(Word::of("you") > Word::of("wall"));
    }
}
