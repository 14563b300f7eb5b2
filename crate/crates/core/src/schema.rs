//! Schema triples: class-level descriptions of ground triples.
//!
//! A schema triple (domain class, predicate, range class) describes every
//! ground triple whose components are at least as specific, component by
//! component. The stored schema is what `rdfs:domain`/`rdfs:range`
//! declarations span; predicates without full declarations are described by
//! the catch-all (owl:Thing, p, owl:Thing).

use std::collections::HashSet;

use crate::graph::{Graph, Triple, TriplePos};
use crate::hierarchy::Hierarchy;
use crate::term::TermId;

/// A triple of class/predicate/class ids used as a statistics key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SchemaTriple {
    pub s: TermId,
    pub p: TermId,
    pub o: TermId,
}

impl SchemaTriple {
    pub fn new(s: TermId, p: TermId, o: TermId) -> SchemaTriple {
        SchemaTriple { s, p, o }
    }

    pub fn get(&self, pos: TriplePos) -> TermId {
        match pos {
            TriplePos::Subject => self.s,
            TriplePos::Predicate => self.p,
            TriplePos::Object => self.o,
        }
    }

    pub fn render(&self, g: &Graph) -> String {
        format!(
            "{} {} {}",
            crate::ntriples::term_token(g, self.s),
            crate::ntriples::term_token(g, self.p),
            crate::ntriples::term_token(g, self.o)
        )
    }
}

/// The declared schema of a graph: one key triple per domain/range
/// combination, plus the hierarchy triples for dump purposes.
#[derive(Debug)]
pub struct StoredSchemaGraph {
    triples: Vec<SchemaTriple>,
    set: HashSet<SchemaTriple>,
    hierarchy_triples: Vec<Triple>,
}

impl StoredSchemaGraph {
    /// Derives the stored schema. Each predicate with declared domains and
    /// ranges contributes their Cartesian product; every other predicate
    /// contributes (owl:Thing, p, owl:Thing). The five typing/hierarchy
    /// predicates are excluded unless `include_meta` is set.
    pub fn extract(g: &Graph, h: &Hierarchy, include_meta: bool) -> StoredSchemaGraph {
        let well = g.well_known();
        let mut triples: Vec<SchemaTriple> = Vec::new();
        for p in g.term_ids() {
            if !g.is_predicate(p) {
                continue;
            }
            if !include_meta && well.is_meta_predicate(p) {
                continue;
            }
            triples.extend(predicate_schema(h, p));
        }
        triples.sort_unstable();
        triples.dedup();
        let set = triples.iter().copied().collect();

        let mut hierarchy_triples: Vec<Triple> = Vec::new();
        if let Some(sc) = well.subclass_of {
            hierarchy_triples.extend(g.triples_with_predicate(sc));
        }
        if let Some(sp) = well.subproperty_of {
            hierarchy_triples.extend(g.triples_with_predicate(sp));
        }
        hierarchy_triples.sort_unstable();

        StoredSchemaGraph {
            triples,
            set,
            hierarchy_triples,
        }
    }

    /// Domain/range-derived schema triples, sorted.
    pub fn triples(&self) -> &[SchemaTriple] {
        &self.triples
    }

    pub fn contains(&self, st: SchemaTriple) -> bool {
        self.set.contains(&st)
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    /// subClassOf/subPropertyOf triples, for dumps; not statistics keys.
    pub fn hierarchy_triples(&self) -> &[Triple] {
        &self.hierarchy_triples
    }
}

/// A predicate's effective domain and range classes: the declared ones, or
/// `owl:Thing` on both sides when either declaration is missing. Using the
/// catch-all for both sides keeps every consumer of declarations consistent.
pub fn declared_or_top(h: &Hierarchy, p: TermId) -> (&[TermId], &[TermId]) {
    let domains = h.domains(p);
    let ranges = h.ranges(p);
    if domains.is_empty() || ranges.is_empty() {
        (h.top_slice(), h.top_slice())
    } else {
        (domains, ranges)
    }
}

/// Schema triples describing one predicate: the Cartesian product of its
/// effective domains and ranges.
pub fn predicate_schema(h: &Hierarchy, p: TermId) -> Vec<SchemaTriple> {
    let (domains, ranges) = declared_or_top(h, p);
    let mut out = Vec::with_capacity(domains.len() * ranges.len());
    for &d in domains {
        for &r in ranges {
            out.push(SchemaTriple::new(d, h.rep(p), r));
        }
    }
    out
}

/// Componentwise specificity order between schema triples.
pub fn schema_leq(h: &Hierarchy, a: SchemaTriple, b: SchemaTriple) -> bool {
    h.leq(a.s, b.s) && h.leq(a.p, b.p) && h.leq(a.o, b.o)
}

/// True when the ground triple is described by the schema triple.
pub fn triple_below(h: &Hierarchy, t: Triple, st: SchemaTriple) -> bool {
    h.leq(t.s, st.s) && h.leq(t.p, st.p) && h.leq(t.o, st.o)
}

/// Membership in the schema-triple space: either stored, or comparable to a
/// stored schema triple in one direction or the other.
pub fn is_schema_triple(h: &Hierarchy, st: SchemaTriple, ssg: &StoredSchemaGraph) -> bool {
    ssg.contains(st)
        || ssg
            .triples()
            .iter()
            .any(|&ts| schema_leq(h, st, ts) || schema_leq(h, ts, st))
}

/// Which reading of "instances of a schema triple" to enumerate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterpretationMode {
    /// Components must be typed instances of the schema triple's classes.
    Plain,
    /// Components may be anything at least as specific (subclasses,
    /// subpredicates, typed instances, or the terms themselves).
    Natural,
}

/// Full-scan enumeration of the ground triples described by `st`.
///
/// This is the reference implementation the counting engine is checked
/// against in tests; it is linear in the graph and not used while counting.
pub fn interpretation(
    st: SchemaTriple,
    g: &Graph,
    h: &Hierarchy,
    mode: InterpretationMode,
) -> Vec<Triple> {
    match mode {
        InterpretationMode::Natural => g
            .triples()
            .iter()
            .copied()
            .filter(|&t| triple_below(h, t, st))
            .collect(),
        InterpretationMode::Plain => {
            let member_sets: Vec<Option<HashSet<TermId>>> = TriplePos::ALL
                .iter()
                .map(|&pos| {
                    h.interpretation(st.get(pos), g)
                        .ok()
                        .map(|v| v.into_iter().collect())
                })
                .collect();
            let (s_set, p_set, o_set) = match (&member_sets[0], &member_sets[1], &member_sets[2]) {
                (Some(s), Some(p), Some(o)) => (s, p, o),
                _ => return Vec::new(),
            };
            g.triples()
                .iter()
                .copied()
                .filter(|t| s_set.contains(&t.s) && p_set.contains(&t.p) && o_set.contains(&t.o))
                .collect()
        }
    }
}
