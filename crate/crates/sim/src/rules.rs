//! Reading rule sentences off the grid.
//!
//! A sentence is `NOUN (AND NOUN)* IS COMP (AND COMP)*` laid out left to right
//! along a row or top to bottom along a column, where `COMP` is a noun or a
//! property. Grammar is decided by token kind alone, so parsing is the same
//! whatever surface words the properties carry.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::labels::LabelMap;
use crate::state::{GridObject, Kind, WorldState};
use crate::vocab::{Property, PropertySet, Word};

/// One atomic `subject IS complement` rule. Conjunctions are expanded, so
/// `BABA AND ROCK IS YOU` yields two rules.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rule {
    pub subject: Word,
    /// A noun (transformation) or a property label.
    pub complement: Word,
}

impl Rule {
    pub fn new(subject: &str, complement: &str) -> Rule {
        Rule { subject: Word::of(subject), complement: Word::of(complement) }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} is {}", self.subject, self.complement)
    }
}

type Cell = Vec<(Kind, Word)>;

/// All rules readable along rows and columns of `state`.
pub fn parse_rules(state: &WorldState) -> BTreeSet<Rule> {
    let (w, h) = (state.width.max(0) as usize, state.height.max(0) as usize);
    let mut grid: Vec<Cell> = vec![Vec::new(); w * h];
    for o in state.objects.iter().filter(|o| o.is_text() && state.in_bounds(o.pos)) {
        grid[o.pos.y as usize * w + o.pos.x as usize].push((o.kind, o.word));
    }
    let mut rules = BTreeSet::new();
    for y in 0..h {
        let line: Vec<&Cell> = (0..w).map(|x| &grid[y * w + x]).collect();
        parse_line(&line, &mut rules);
    }
    for x in 0..w {
        let line: Vec<&Cell> = (0..h).map(|y| &grid[y * w + x]).collect();
        parse_line(&line, &mut rules);
    }
    rules
}

fn words_of(cell: Option<&&Cell>, accept: impl Fn(Kind) -> bool) -> Vec<Word> {
    cell.map(|c| c.iter().filter(|(k, _)| accept(*k)).map(|(_, w)| *w).collect())
        .unwrap_or_default()
}

fn has_op(cell: Option<&&Cell>, op: Word) -> bool {
    cell.is_some_and(|c| c.iter().any(|&(k, w)| k == Kind::RuleOperator && w == op))
}

fn parse_line(line: &[&Cell], out: &mut BTreeSet<Rule>) {
    let at = |i: isize| if i < 0 { None } else { line.get(i as usize) };
    let is_noun = |k: Kind| k == Kind::RuleNoun;
    let is_comp = |k: Kind| k == Kind::RuleNoun || k == Kind::RuleProperty;

    for p in 0..line.len() as isize {
        if !has_op(at(p), Word::IS) {
            continue;
        }
        let mut subjects = words_of(at(p - 1), is_noun);
        if subjects.is_empty() {
            continue;
        }
        let mut q = p - 2;
        while has_op(at(q), Word::AND) {
            let more = words_of(at(q - 1), is_noun);
            if more.is_empty() {
                break;
            }
            subjects.extend(more);
            q -= 2;
        }
        let mut complements = words_of(at(p + 1), is_comp);
        if complements.is_empty() {
            continue;
        }
        let mut q = p + 2;
        while has_op(at(q), Word::AND) {
            let more = words_of(at(q + 1), is_comp);
            if more.is_empty() {
                break;
            }
            complements.extend(more);
            q += 2;
        }
        for &subject in &subjects {
            for &complement in &complements {
                out.insert(Rule { subject, complement });
            }
        }
    }
}

/// Rules resolved into behaviour: property sets per noun plus noun rewrites.
#[derive(Clone, Debug, Default)]
pub struct RuleBook {
    properties: HashMap<Word, PropertySet>,
    transforms: BTreeMap<Word, BTreeSet<Word>>,
}

impl RuleBook {
    /// Resolves `rules`, reading property roles through `labels`. Property
    /// words the map does not cover carry no role.
    pub fn new(rules: &BTreeSet<Rule>, labels: &LabelMap) -> RuleBook {
        let mut book = RuleBook::default();
        for r in rules {
            if r.complement.is_noun() {
                book.transforms.entry(r.subject).or_default().insert(r.complement);
            } else if let Some(p) = labels.role(r.complement) {
                book.properties.entry(r.subject).or_default().insert(p);
            }
        }
        book
    }

    pub fn of_state(state: &WorldState, labels: &LabelMap) -> RuleBook {
        RuleBook::new(&parse_rules(state), labels)
    }

    pub fn properties(&self, o: &GridObject) -> PropertySet {
        self.properties.get(&o.governing_noun()).copied().unwrap_or_default()
    }

    pub fn has(&self, o: &GridObject, p: Property) -> bool {
        self.properties(o).contains(p)
    }

    /// Text is always pushable.
    pub fn pushable(&self, o: &GridObject) -> bool {
        o.is_text() || self.has(o, Property::Push)
    }

    /// Text never blocks.
    pub fn stops(&self, o: &GridObject) -> bool {
        !o.is_text() && self.has(o, Property::Stop)
    }

    pub fn floats(&self, o: &GridObject) -> bool {
        self.has(o, Property::Float)
    }

    /// Effective rewrites: nouns with `X IS X` active are left out entirely.
    pub fn transforms(&self) -> impl Iterator<Item = (Word, Vec<Word>)> + '_ {
        self.transforms.iter().filter(|(x, ys)| !ys.contains(x)).map(|(x, ys)| (*x, ys.iter().copied().collect()))
    }

    pub fn any_property(&self, p: Property) -> bool {
        self.properties.values().any(|s| s.contains(p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(words: &[&str]) -> WorldState {
        let objs = words.iter().enumerate().map(|(i, w)| GridObject::text(w, i as i32, 0)).collect();
        WorldState::new(words.len() as i32, 1, objs)
    }

    fn set(rules: &[(&str, &str)]) -> BTreeSet<Rule> {
        rules.iter().map(|(s, c)| Rule::new(s, c)).collect()
    }

    #[test]
    fn simple_row() {
        assert_eq!(parse_rules(&row(&["baba", "is", "you"])), set(&[("baba", "you")]));
    }

    #[test]
    fn conjunction_on_subject_side() {
        assert_eq!(
            parse_rules(&row(&["baba", "and", "rock", "is", "you"])),
            set(&[("baba", "you"), ("rock", "you")])
        );
    }

    #[test]
    fn conjunction_on_complement_side() {
        assert_eq!(
            parse_rules(&row(&["baba", "is", "you", "and", "push"])),
            set(&[("baba", "you"), ("baba", "push")])
        );
    }

    #[test]
    fn incomplete_sentence_yields_nothing() {
        assert!(parse_rules(&row(&["is", "you"])).is_empty());
        assert!(parse_rules(&row(&["baba", "is"])).is_empty());
        assert!(parse_rules(&row(&["baba", "you"])).is_empty());
        assert!(parse_rules(&row(&["you", "is", "baba"])).is_empty());
    }

    #[test]
    fn column_reads_top_down() {
        let s = WorldState::new(
            1,
            3,
            vec![GridObject::text("baba", 0, 0), GridObject::text("is", 0, 1), GridObject::text("you", 0, 2)],
        );
        assert_eq!(parse_rules(&s), set(&[("baba", "you")]));
        let rev = WorldState::new(
            1,
            3,
            vec![GridObject::text("you", 0, 0), GridObject::text("is", 0, 1), GridObject::text("baba", 0, 2)],
        );
        assert!(parse_rules(&rev).is_empty());
    }

    #[test]
    fn chained_is_reads_both_sentences() {
        assert_eq!(
            parse_rules(&row(&["baba", "is", "rock", "is", "you"])),
            set(&[("baba", "rock"), ("rock", "you")])
        );
    }

    #[test]
    fn trailing_and_is_ignored() {
        assert_eq!(parse_rules(&row(&["and", "baba", "is", "you", "and"])), set(&[("baba", "you")]));
    }

    #[test]
    fn gap_breaks_sentence() {
        let s = WorldState::new(
            4,
            1,
            vec![GridObject::text("baba", 0, 0), GridObject::text("is", 2, 0), GridObject::text("you", 3, 0)],
        );
        assert!(parse_rules(&s).is_empty());
    }

    #[test]
    fn world_objects_do_not_parse() {
        let s = WorldState::new(
            3,
            1,
            vec![GridObject::world("baba", 0, 0), GridObject::text("is", 1, 0), GridObject::text("you", 2, 0)],
        );
        assert!(parse_rules(&s).is_empty());
    }

    #[test]
    fn rulebook_roles_follow_label_map() {
        let rules = set(&[("baba", "strange"), ("rock", "you")]);
        let id = RuleBook::new(&rules, &LabelMap::identity());
        let wl = RuleBook::new(&rules, &LabelMap::wonderland());
        let baba = GridObject::world("baba", 0, 0);
        let rock = GridObject::world("rock", 0, 0);
        assert!(!id.has(&baba, Property::You));
        assert!(id.has(&rock, Property::You));
        assert!(wl.has(&baba, Property::You));
        assert!(!wl.has(&rock, Property::You));
    }

    #[test]
    fn self_identity_suppresses_rewrites() {
        let rules = set(&[("rock", "rock"), ("rock", "flag"), ("keke", "baba")]);
        let book = RuleBook::new(&rules, &LabelMap::identity());
        let t: Vec<_> = book.transforms().collect();
        assert_eq!(t, vec![(Word::of("keke"), vec![Word::of("baba")])]);
    }
}
