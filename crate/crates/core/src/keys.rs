//! Key types: which triple positions form the key of a counter.
//!
//! Every schema triple carries counters for all seven non-empty position
//! subsets. A counter is either bound (the whole triple had to match the
//! key's type) or unbound (the non-key positions were unrestricted, which is
//! recorded by normalizing them to owl:Thing in the counter's key).

use crate::graph::{Triple, TriplePos};
use crate::schema::SchemaTriple;
use crate::term::TermId;

/// Non-empty subset of {subject, predicate, object}, encoded as bits
/// S=1, P=2, O=4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PositionSet(u8);

impl PositionSet {
    pub const S: PositionSet = PositionSet(1);
    pub const P: PositionSet = PositionSet(2);
    pub const O: PositionSet = PositionSet(4);
    pub const SPO: PositionSet = PositionSet(7);

    pub fn from_bits(bits: u8) -> Option<PositionSet> {
        (1..=7).contains(&bits).then_some(PositionSet(bits))
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    /// Dense slot index 0..7 used by counter arrays.
    pub fn slot(self) -> usize {
        (self.0 - 1) as usize
    }

    /// All seven subsets in slot order.
    pub fn all() -> impl Iterator<Item = PositionSet> {
        (1..=7).map(PositionSet)
    }

    pub fn contains(self, pos: TriplePos) -> bool {
        self.0 & Self::bit(pos) != 0
    }

    fn bit(pos: TriplePos) -> u8 {
        match pos {
            TriplePos::Subject => 1,
            TriplePos::Predicate => 2,
            TriplePos::Object => 4,
        }
    }

    /// Canonical label, e.g. `po` for {predicate, object}.
    pub fn label(self) -> &'static str {
        const LABELS: [&str; 7] = ["s", "p", "sp", "o", "so", "po", "spo"];
        LABELS[self.slot()]
    }

    /// Parses labels like `spo` or `po`. Order-insensitive, duplicates allowed.
    pub fn parse(label: &str) -> Option<PositionSet> {
        let mut bits = 0u8;
        for c in label.chars() {
            bits |= match c.to_ascii_lowercase() {
                's' => 1,
                'p' => 2,
                'o' => 4,
                _ => return None,
            };
        }
        PositionSet::from_bits(bits)
    }
}

/// A schema triple with a choice of key positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct KeyType {
    pub base: SchemaTriple,
    pub positions: PositionSet,
}

impl KeyType {
    pub fn new(base: SchemaTriple, positions: PositionSet) -> KeyType {
        KeyType { base, positions }
    }
}

/// Replaces every non-key component with `top`, the form under which unbound
/// counters are shared by all key types that differ only in non-key types.
pub fn normalize(base: SchemaTriple, positions: PositionSet, top: TermId) -> SchemaTriple {
    let pick = |pos: TriplePos, v: TermId| if positions.contains(pos) { v } else { top };
    SchemaTriple::new(
        pick(TriplePos::Subject, base.s),
        pick(TriplePos::Predicate, base.p),
        pick(TriplePos::Object, base.o),
    )
}

/// Sentinel for positions outside the key in a projected key.
pub const NO_TERM: u32 = u32::MAX;

/// The key a triple contributes under a position set: its components at key
/// positions, sentinel elsewhere.
pub fn project(t: Triple, positions: PositionSet) -> [u32; 3] {
    let pick = |pos: TriplePos, v: TermId| {
        if positions.contains(pos) {
            v.0
        } else {
            NO_TERM
        }
    };
    [
        pick(TriplePos::Subject, t.s),
        pick(TriplePos::Predicate, t.p),
        pick(TriplePos::Object, t.o),
    ]
}
