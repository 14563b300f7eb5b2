//! Counter storage, lookup with hierarchy-aware fallback, and the on-disk
//! index format.
//!
//! Lookups that miss an exact key fall back along the specificity order:
//! a key strictly more general than stored statistics sums the maximal ones
//! below it, a key strictly more specific takes the minimum of the minimal
//! ones above it as an upper bound, and anything else is reported as not
//! covered rather than silently zero.

use std::collections::HashMap;
use std::io::{self, Read, Write};

use thiserror::Error;

use crate::engine::CountModes;
use crate::graph::{Graph, GraphBuilder, Triple};
use crate::hierarchy::{CycleMode, Hierarchy};
use crate::keys::{normalize, PositionSet};
use crate::ntriples::term_token;
use crate::schema::{schema_leq, SchemaTriple};
use crate::term::{KindSet, TermId};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("no statistic stored for {key} at positions {positions}")]
    MissingKey { key: String, positions: String },
    #[error("malformed statistics file: {reason}")]
    Format { reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn format_err(reason: impl Into<String>) -> StoreError {
    StoreError::Format { reason: reason.into() }
}

/// Counters of one schema triple: slot `i` belongs to the position set with
/// bits `i + 1`. A slot is meaningful only when its `touched` bit is set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StatEntry {
    pub all: [u64; 7],
    pub distinct: [u64; 7],
    pub touched: u8,
}

impl StatEntry {
    pub fn is_touched(&self, set: PositionSet) -> bool {
        self.touched & (1 << set.slot()) != 0
    }
}

/// Whether a lookup addresses triple-bound or key-only counters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BindMode {
    Bound,
    Unbound,
}

/// Which counter family a lookup addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CounterKind {
    All,
    Distinct,
}

/// How a retrieved value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Exact,
    /// Sum over the maximal stored keys below the requested one.
    SummedAbove { parts: usize },
    /// Minimum over the minimal stored keys above the requested one, an
    /// upper bound rather than an exact figure.
    MinBelow { parts: usize },
    /// The key relates to no stored statistic; the value is zero.
    NotCovered,
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Provenance::Exact => write!(f, "exact"),
            Provenance::SummedAbove { parts } => {
                write!(f, "summed over {parts} more specific key(s)")
            }
            Provenance::MinBelow { parts } => {
                write!(f, "upper bound from {parts} more general key(s)")
            }
            Provenance::NotCovered => write!(f, "not covered by stored statistics"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Retrieved {
    pub value: u64,
    pub provenance: Provenance,
}

#[derive(Debug, PartialEq)]
pub struct StatIndex {
    bound: HashMap<SchemaTriple, StatEntry>,
    unbound: HashMap<SchemaTriple, StatEntry>,
    modes: CountModes,
    sketched: bool,
}

impl StatIndex {
    pub fn new(
        bound: HashMap<SchemaTriple, StatEntry>,
        unbound: HashMap<SchemaTriple, StatEntry>,
        modes: CountModes,
        sketched: bool,
    ) -> StatIndex {
        StatIndex { bound, unbound, modes, sketched }
    }

    pub fn modes(&self) -> CountModes {
        self.modes
    }

    pub fn sketched(&self) -> bool {
        self.sketched
    }

    fn map(&self, bind: BindMode) -> &HashMap<SchemaTriple, StatEntry> {
        match bind {
            BindMode::Bound => &self.bound,
            BindMode::Unbound => &self.unbound,
        }
    }

    pub fn bound_entry(&self, key: SchemaTriple) -> Option<&StatEntry> {
        self.bound.get(&key)
    }

    pub fn unbound_entry(&self, key: SchemaTriple) -> Option<&StatEntry> {
        self.unbound.get(&key)
    }

    pub fn bound_keys(&self) -> Vec<SchemaTriple> {
        self.bound.keys().copied().collect()
    }

    pub fn unbound_keys(&self) -> Vec<SchemaTriple> {
        self.unbound.keys().copied().collect()
    }

    pub fn key_count(&self, bind: BindMode) -> usize {
        self.map(bind).len()
    }

    /// Number of maintained key-type slots: keys weighted by how many of
    /// their seven position sets hold data.
    pub fn slot_count(&self, bind: BindMode) -> u64 {
        self.map(bind)
            .values()
            .map(|e| u64::from(e.touched.count_ones()))
            .sum()
    }

    fn kind_enabled(&self, kind: CounterKind) -> bool {
        match kind {
            CounterKind::All => self.modes.all,
            CounterKind::Distinct => self.modes.distinct,
        }
    }

    fn bind_enabled(&self, bind: BindMode) -> bool {
        match bind {
            BindMode::Bound => self.modes.bound,
            BindMode::Unbound => self.modes.unbound,
        }
    }

    /// The stored counter for an exact key, if that slot was maintained.
    pub fn slot_value(
        &self,
        key: SchemaTriple,
        set: PositionSet,
        kind: CounterKind,
        bind: BindMode,
    ) -> Option<u64> {
        if !self.kind_enabled(kind) || !self.bind_enabled(bind) {
            return None;
        }
        let e = self.map(bind).get(&key)?;
        if !e.is_touched(set) {
            return None;
        }
        Some(match kind {
            CounterKind::All => e.all[set.slot()],
            CounterKind::Distinct => e.distinct[set.slot()],
        })
    }

    pub fn exists(&self, key: SchemaTriple, bind: BindMode) -> bool {
        self.map(bind).contains_key(&key)
    }

    /// Exact lookup, reporting a missing key or slot as an error.
    pub fn get(
        &self,
        g: &Graph,
        key: SchemaTriple,
        set: PositionSet,
        kind: CounterKind,
        bind: BindMode,
    ) -> Result<u64, StoreError> {
        self.slot_value(key, set, kind, bind)
            .ok_or_else(|| StoreError::MissingKey {
                key: key.render(g),
                positions: set.label().to_owned(),
            })
    }

    /// Hierarchy-aware lookup. Unbound counters are addressed by the key's
    /// normalized form, so callers may pass the full key.
    pub fn retrieve(
        &self,
        h: &Hierarchy,
        key: SchemaTriple,
        set: PositionSet,
        kind: CounterKind,
        bind: BindMode,
    ) -> Retrieved {
        let key = match bind {
            BindMode::Bound => key,
            BindMode::Unbound => normalize(key, set, h.thing()),
        };
        if let Some(value) = self.slot_value(key, set, kind, bind) {
            return Retrieved { value, provenance: Provenance::Exact };
        }
        if !self.kind_enabled(kind) || !self.bind_enabled(bind) {
            return Retrieved { value: 0, provenance: Provenance::NotCovered };
        }
        let covered: Vec<SchemaTriple> = self
            .map(bind)
            .iter()
            .filter(|(_, e)| e.is_touched(set))
            .map(|(k, _)| *k)
            .collect();

        let below: Vec<SchemaTriple> =
            covered.iter().copied().filter(|&t| schema_leq(h, t, key)).collect();
        if strictly_general_at_some_position(h, key, &below) {
            let parts = maximal(h, &below);
            let value = parts
                .iter()
                .map(|&k| self.slot_value(k, set, kind, bind).unwrap_or(0))
                .sum();
            return Retrieved { value, provenance: Provenance::SummedAbove { parts: parts.len() } };
        }

        let above: Vec<SchemaTriple> =
            covered.iter().copied().filter(|&t| schema_leq(h, key, t)).collect();
        if strictly_specific_at_some_position(h, key, &above) {
            let parts = minimal(h, &above);
            let value = parts
                .iter()
                .filter_map(|&k| self.slot_value(k, set, kind, bind))
                .min()
                .unwrap_or(0);
            return Retrieved { value, provenance: Provenance::MinBelow { parts: parts.len() } };
        }

        Retrieved { value: 0, provenance: Provenance::NotCovered }
    }

    /// Writes the index as tab-separated rows, one per maintained key-type.
    pub fn export_tsv<W: Write>(&self, g: &Graph, h: &Hierarchy, w: &mut W) -> io::Result<()> {
        writeln!(
            w,
            "subject\tpredicate\tobject\tpositions\tall_bound\tall_unbound\tdistinct_bound\tdistinct_unbound"
        )?;
        let (primary, bind) = if self.modes.bound {
            (&self.bound, BindMode::Bound)
        } else {
            (&self.unbound, BindMode::Unbound)
        };
        let mut keys: Vec<SchemaTriple> = primary.keys().copied().collect();
        keys.sort_unstable();
        let cell = |v: Option<u64>| v.map_or_else(|| "-".into(), |v| v.to_string());
        for key in keys {
            let entry = &primary[&key];
            for set in PositionSet::all() {
                if !entry.is_touched(set) {
                    continue;
                }
                let row = |kind| match bind {
                    BindMode::Bound => self.slot_value(key, set, kind, BindMode::Bound),
                    BindMode::Unbound => None,
                };
                let norm = normalize(key, set, h.thing());
                writeln!(
                    w,
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    term_token(g, key.s),
                    term_token(g, key.p),
                    term_token(g, key.o),
                    set.label(),
                    cell(row(CounterKind::All)),
                    cell(self.slot_value(norm, set, CounterKind::All, BindMode::Unbound)),
                    cell(row(CounterKind::Distinct)),
                    cell(self.slot_value(norm, set, CounterKind::Distinct, BindMode::Unbound)),
                )?;
            }
        }
        Ok(())
    }
}

/// True when `key` is strictly more general than every related stored key at
/// one shared position, which is what makes summing them meaningful.
fn strictly_general_at_some_position(
    h: &Hierarchy,
    key: SchemaTriple,
    related: &[SchemaTriple],
) -> bool {
    use crate::graph::TriplePos;
    !related.is_empty()
        && TriplePos::ALL.iter().any(|&pos| {
            related.iter().all(|t| {
                let (a, b) = (t.get(pos), key.get(pos));
                a != b && h.leq(a, b)
            })
        })
}

/// Dual condition for keys strictly more specific than everything stored.
fn strictly_specific_at_some_position(
    h: &Hierarchy,
    key: SchemaTriple,
    related: &[SchemaTriple],
) -> bool {
    use crate::graph::TriplePos;
    !related.is_empty()
        && TriplePos::ALL.iter().any(|&pos| {
            related.iter().all(|t| {
                let (a, b) = (key.get(pos), t.get(pos));
                a != b && h.leq(a, b)
            })
        })
}

/// Elements of `set` with nothing else in `set` above them.
fn maximal(h: &Hierarchy, set: &[SchemaTriple]) -> Vec<SchemaTriple> {
    set.iter()
        .copied()
        .filter(|&a| {
            !set.iter()
                .any(|&b| b != a && schema_leq(h, a, b))
        })
        .collect()
}

/// Elements of `set` with nothing else in `set` below them.
fn minimal(h: &Hierarchy, set: &[SchemaTriple]) -> Vec<SchemaTriple> {
    set.iter()
        .copied()
        .filter(|&a| {
            !set.iter()
                .any(|&b| b != a && schema_leq(h, b, a))
        })
        .collect()
}

const MAGIC: [u8; 4] = *b"KGSI";
const VERSION: u32 = 1;

fn write_varint<W: Write>(w: &mut W, mut v: u64) -> io::Result<()> {
    loop {
        let byte = (v & 0x7f) as u8;
        v >>= 7;
        if v == 0 {
            return w.write_all(&[byte]);
        }
        w.write_all(&[byte | 0x80])?;
    }
}

fn read_varint<R: Read>(r: &mut R) -> Result<u64, StoreError> {
    let mut v = 0u64;
    let mut shift = 0u32;
    loop {
        let mut byte = [0u8; 1];
        r.read_exact(&mut byte)?;
        let b = byte[0];
        if shift >= 63 && b > 1 {
            return Err(format_err("varint overflows 64 bits"));
        }
        v |= u64::from(b & 0x7f) << shift;
        if b & 0x80 == 0 {
            return Ok(v);
        }
        shift += 7;
    }
}

fn write_pairs<W: Write>(w: &mut W, mut pairs: Vec<(TermId, TermId)>) -> io::Result<()> {
    pairs.sort_unstable();
    pairs.dedup();
    write_varint(w, pairs.len() as u64)?;
    for (a, b) in pairs {
        write_varint(w, u64::from(a.0))?;
        write_varint(w, u64::from(b.0))?;
    }
    Ok(())
}

fn read_term<R: Read>(r: &mut R, max: u64, what: &str) -> Result<TermId, StoreError> {
    let v = read_varint(r)?;
    if v >= max {
        return Err(format_err(format!("{what} id {v} out of range")));
    }
    Ok(TermId(v as u32))
}

fn write_entries<W: Write>(
    w: &mut W,
    map: &HashMap<SchemaTriple, StatEntry>,
    modes: CountModes,
) -> io::Result<()> {
    let mut keys: Vec<SchemaTriple> = map.keys().copied().collect();
    keys.sort_unstable();
    write_varint(w, keys.len() as u64)?;
    for key in keys {
        let e = &map[&key];
        write_varint(w, u64::from(key.s.0))?;
        write_varint(w, u64::from(key.p.0))?;
        write_varint(w, u64::from(key.o.0))?;
        w.write_all(&[e.touched])?;
        for set in PositionSet::all() {
            if !e.is_touched(set) {
                continue;
            }
            if modes.all {
                write_varint(w, e.all[set.slot()])?;
            }
            if modes.distinct {
                write_varint(w, e.distinct[set.slot()])?;
            }
        }
    }
    Ok(())
}

fn read_entries<R: Read>(
    r: &mut R,
    modes: CountModes,
    term_count: u64,
) -> Result<HashMap<SchemaTriple, StatEntry>, StoreError> {
    let n = read_varint(r)?;
    // Capacity from the header is a hint, never trusted wholesale.
    let mut map = HashMap::with_capacity(n.min(1 << 20) as usize);
    for _ in 0..n {
        let s = read_term(r, term_count, "entry subject")?;
        let p = read_term(r, term_count, "entry predicate")?;
        let o = read_term(r, term_count, "entry object")?;
        let mut touched = [0u8; 1];
        r.read_exact(&mut touched)?;
        let touched = touched[0];
        if touched & 0x80 != 0 {
            return Err(format_err("entry declares more than seven slots"));
        }
        let mut e = StatEntry { touched, ..StatEntry::default() };
        for set in PositionSet::all() {
            if touched & (1 << set.slot()) == 0 {
                continue;
            }
            if modes.all {
                e.all[set.slot()] = read_varint(r)?;
            }
            if modes.distinct {
                e.distinct[set.slot()] = read_varint(r)?;
            }
        }
        if map.insert(SchemaTriple::new(s, p, o), e).is_some() {
            return Err(format_err("duplicate entry key"));
        }
    }
    Ok(map)
}

impl StatIndex {
    /// Serializes the index with enough of the graph's vocabulary, typing,
    /// hierarchy, and declarations to answer queries without the source data.
    pub fn save<W: Write>(&self, g: &Graph, w: &mut W) -> Result<(), StoreError> {
        w.write_all(&MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&[u8::from(self.sketched), self.modes.bits()])?;

        let n = g.term_count();
        write_varint(w, n as u64)?;
        for id in g.term_ids() {
            let lex = g.lexical(id);
            write_varint(w, lex.len() as u64)?;
            w.write_all(lex.as_bytes())?;
            w.write_all(&[g.kind(id).bits()])?;
        }

        let wk = g.well_known();
        let edges = |p: Option<TermId>| -> Vec<(TermId, TermId)> {
            p.map(|p| g.triples_with_predicate(p).map(|t| (t.s, t.o)).collect())
                .unwrap_or_default()
        };
        write_pairs(w, edges(wk.rdf_type))?;
        write_pairs(w, edges(wk.subclass_of))?;
        write_pairs(w, edges(wk.subproperty_of))?;
        write_pairs(w, edges(wk.domain))?;
        write_pairs(w, edges(wk.range))?;
        write_pairs(w, g.literal_datatypes().collect())?;

        write_entries(w, &self.bound, self.modes)?;
        write_entries(w, &self.unbound, self.modes)?;
        Ok(())
    }

    /// Reads an index and rebuilds the ontology it was computed against.
    pub fn load<R: Read>(r: &mut R) -> Result<LoadedIndex, StoreError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if magic != MAGIC {
            return Err(format_err("bad magic; not a statistics index"));
        }
        let mut version = [0u8; 4];
        r.read_exact(&mut version)?;
        let version = u32::from_le_bytes(version);
        if version != VERSION {
            return Err(format_err(format!("unsupported format version {version}")));
        }
        let mut head = [0u8; 2];
        r.read_exact(&mut head)?;
        let sketched = match head[0] {
            0 => false,
            1 => true,
            v => return Err(format_err(format!("bad sketch flag {v}"))),
        };
        let modes = CountModes::from_bits(head[1]);

        let term_count = read_varint(r)?;
        let mut builder = GraphBuilder::new();
        let mut lexicals = Vec::with_capacity(term_count.min(1 << 20) as usize);
        for i in 0..term_count {
            let len = read_varint(r)?;
            if len > 1 << 24 {
                return Err(format_err("term longer than 16 MiB"));
            }
            let mut buf = vec![0u8; len as usize];
            r.read_exact(&mut buf)?;
            let lex = String::from_utf8(buf)
                .map_err(|_| format_err("term is not valid UTF-8"))?;
            let mut kind = [0u8; 1];
            r.read_exact(&mut kind)?;
            let id = builder.intern(&lex, KindSet::from_bits(kind[0]));
            if id.0 as u64 != i {
                return Err(format_err(format!("duplicate term {lex}")));
            }
            lexicals.push(lex);
        }

        let read_pairs = |r: &mut R| -> Result<Vec<(TermId, TermId)>, StoreError> {
            let n = read_varint(r)?;
            let mut pairs = Vec::with_capacity(n.min(1 << 20) as usize);
            for _ in 0..n {
                let a = read_term(r, term_count, "edge source")?;
                let b = read_term(r, term_count, "edge target")?;
                pairs.push((a, b));
            }
            Ok(pairs)
        };
        let typing = read_pairs(r)?;
        let subclass = read_pairs(r)?;
        let subproperty = read_pairs(r)?;
        let domain = read_pairs(r)?;
        let range = read_pairs(r)?;
        let datatypes = read_pairs(r)?;

        let mut add_edges = |pairs: &[(TermId, TermId)], pred: &str| {
            if pairs.is_empty() {
                return;
            }
            let p = builder.intern(pred, KindSet::PREDICATE);
            for &(s, o) in pairs {
                builder.insert(Triple::new(s, p, o));
            }
        };
        add_edges(&typing, "rdf:type");
        add_edges(&subclass, "rdfs:subClassOf");
        add_edges(&subproperty, "rdfs:subPropertyOf");
        add_edges(&domain, "rdfs:domain");
        add_edges(&range, "rdfs:range");
        for &(lit, dt) in &datatypes {
            builder.intern_literal(&lexicals[lit.index()], Some(&lexicals[dt.index()]));
        }

        let graph = builder
            .classify()
            .map_err(|e| format_err(format!("inconsistent ontology: {e}")))?;
        let hierarchy = Hierarchy::build(&graph, CycleMode::Collapse)
            .map_err(|e| format_err(format!("inconsistent ontology: {e}")))?;

        let bound = read_entries(r, modes, term_count)?;
        let unbound = read_entries(r, modes, term_count)?;

        let mut tail = [0u8; 1];
        match r.read(&mut tail)? {
            0 => {}
            _ => return Err(format_err("trailing data after index")),
        }

        Ok(LoadedIndex {
            index: StatIndex { bound, unbound, modes, sketched },
            graph,
            hierarchy,
        })
    }
}

/// An index read back from disk, with the ontology rebuilt alongside it.
pub struct LoadedIndex {
    pub index: StatIndex,
    pub graph: Graph,
    pub hierarchy: Hierarchy,
}
