//! Authored desk levels, one per property cluster. The files live in
//! `levels/` and are compiled in so binaries work from any directory.

use crate::document::{parse_level, Level};

macro_rules! bundle {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../levels/", $name, ".level")))),*]
    };
}

pub const BUNDLED: &[(&str, &str)] = bundle![
    "corridor",
    "push-chain",
    "stop-hedge",
    "open-shut",
    "self-identity",
    "transform-defeat",
    "sink-pond",
    "hot-melt",
    "float-skull",
    "move-keke",
    "flag-win",
    "text-push",
    "and-rules",
];

pub fn names() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|(n, _)| *n)
}

pub fn bundled(name: &str) -> Option<Level> {
    BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| parse_level(text).expect("bundled levels are valid"))
}

pub fn all() -> Vec<Level> {
    names().filter_map(bundled).collect()
}
