//! Triples, the graph container, and kind classification.
//!
//! A [`GraphBuilder`] accepts interned triples in any order; [`GraphBuilder::classify`]
//! derives kind flags from how each term is used and freezes the result into an
//! immutable [`Graph`] with subject/predicate/object adjacency indexes.

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::term::{vocab, Interner, KindSet, TermId};

/// One triple over interned term ids. Components are ordered (s, p, o).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub s: TermId,
    pub p: TermId,
    pub o: TermId,
}

impl Triple {
    pub fn new(s: TermId, p: TermId, o: TermId) -> Triple {
        Triple { s, p, o }
    }

    pub fn get(&self, pos: TriplePos) -> TermId {
        match pos {
            TriplePos::Subject => self.s,
            TriplePos::Predicate => self.p,
            TriplePos::Object => self.o,
        }
    }
}

/// Component position within a triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TriplePos {
    Subject,
    Predicate,
    Object,
}

impl TriplePos {
    pub const ALL: [TriplePos; 3] = [TriplePos::Subject, TriplePos::Predicate, TriplePos::Object];
}

#[derive(Debug, Error)]
pub enum ClassifyError {
    /// A term qualified as both a class and a literal; no consistent kind exists.
    #[error("term `{lexical}` is used both as a class and as a literal")]
    ConflictingKind { lexical: String },
}

/// Ids of the vocabulary terms that drive classification and hierarchy
/// extraction. Only `owl:Thing` is guaranteed to exist; the rest are present
/// when the data uses them.
#[derive(Debug, Clone, Copy)]
pub struct WellKnown {
    pub thing: TermId,
    pub rdf_type: Option<TermId>,
    pub subclass_of: Option<TermId>,
    pub subproperty_of: Option<TermId>,
    pub domain: Option<TermId>,
    pub range: Option<TermId>,
    pub property: Option<TermId>,
}

impl WellKnown {
    /// True for the five predicates that define typing and hierarchy rather
    /// than ground facts.
    pub fn is_meta_predicate(&self, p: TermId) -> bool {
        [
            self.rdf_type,
            self.subclass_of,
            self.subproperty_of,
            self.domain,
            self.range,
        ]
        .contains(&Some(p))
    }
}

/// Mutable accumulation stage: intern terms, insert triples, then classify.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    interner: Interner,
    triples: Vec<Triple>,
    seen: HashSet<Triple>,
    literal_datatypes: HashMap<TermId, TermId>,
}

impl GraphBuilder {
    pub fn new() -> GraphBuilder {
        GraphBuilder::default()
    }

    /// Interns a lexical form. IRIs from the standard namespaces are
    /// compacted first so both spellings land on one term.
    pub fn intern(&mut self, lexical: &str, hint: KindSet) -> TermId {
        match vocab::compact_iri(lexical) {
            Some(compact) => self.interner.intern(&compact, hint),
            None => self.interner.intern(lexical, hint),
        }
    }

    /// Interns a literal token and its datatype class, recording the link.
    /// `datatype` is `None` for plain literals, which are typed `rdfs:Literal`.
    pub fn intern_literal(&mut self, token: &str, datatype: Option<&str>) -> TermId {
        let dt = match datatype {
            Some(iri) => self.intern(iri, KindSet::CLASS),
            None => self.intern(vocab::RDFS_LITERAL, KindSet::CLASS),
        };
        let lit = self.interner.intern(token, KindSet::LITERAL);
        self.literal_datatypes.insert(lit, dt);
        lit
    }

    /// Inserts a triple; duplicates are a no-op (set semantics).
    pub fn insert(&mut self, t: Triple) {
        if self.seen.insert(t) {
            self.triples.push(t);
        }
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    /// Derives kind flags from usage and freezes the graph.
    ///
    /// Rules: predicate position implies Predicate; `rdfs:subClassOf` links
    /// classes; `rdf:type` objects are classes and subjects individuals;
    /// `rdfs:domain`/`rdfs:range` objects are classes and subjects predicates;
    /// `rdfs:subPropertyOf` links predicates; `rdf:type rdf:Property` marks a
    /// predicate. Terms left without any flag are individuals.
    pub fn classify(mut self) -> Result<Graph, ClassifyError> {
        let thing = self.interner.intern(vocab::OWL_THING, KindSet::CLASS);
        let well = WellKnown {
            thing,
            rdf_type: self.interner.lookup(vocab::RDF_TYPE),
            subclass_of: self.interner.lookup(vocab::RDFS_SUBCLASSOF),
            subproperty_of: self.interner.lookup(vocab::RDFS_SUBPROPERTYOF),
            domain: self.interner.lookup(vocab::RDFS_DOMAIN),
            range: self.interner.lookup(vocab::RDFS_RANGE),
            property: self.interner.lookup(vocab::RDF_PROPERTY),
        };

        for &Triple { s, p, o } in &self.triples {
            self.interner.add_kind(p, KindSet::PREDICATE);
            if Some(p) == well.rdf_type {
                self.interner.add_kind(o, KindSet::CLASS);
                self.interner.add_kind(s, KindSet::INDIVIDUAL);
                if Some(o) == well.property {
                    self.interner.add_kind(s, KindSet::PREDICATE);
                }
            } else if Some(p) == well.subclass_of {
                self.interner.add_kind(s, KindSet::CLASS);
                self.interner.add_kind(o, KindSet::CLASS);
            } else if Some(p) == well.subproperty_of {
                self.interner.add_kind(s, KindSet::PREDICATE);
                self.interner.add_kind(o, KindSet::PREDICATE);
            } else if Some(p) == well.domain || Some(p) == well.range {
                self.interner.add_kind(s, KindSet::PREDICATE);
                self.interner.add_kind(o, KindSet::CLASS);
            }
        }

        for id in self.interner.ids().collect::<Vec<_>>() {
            let kind = self.interner.kind(id);
            if kind.contains(KindSet::CLASS) && kind.contains(KindSet::LITERAL) {
                return Err(ClassifyError::ConflictingKind {
                    lexical: self.interner.lexical(id).to_owned(),
                });
            }
            if kind.is_empty() {
                self.interner.add_kind(id, KindSet::INDIVIDUAL);
            }
        }

        let mut by_s: HashMap<TermId, Vec<u32>> = HashMap::new();
        let mut by_p: HashMap<TermId, Vec<u32>> = HashMap::new();
        let mut by_o: HashMap<TermId, Vec<u32>> = HashMap::new();
        let mut by_po: HashMap<(TermId, TermId), Vec<u32>> = HashMap::new();
        for (i, t) in self.triples.iter().enumerate() {
            by_s.entry(t.s).or_default().push(i as u32);
            by_p.entry(t.p).or_default().push(i as u32);
            by_o.entry(t.o).or_default().push(i as u32);
            by_po.entry((t.p, t.o)).or_default().push(i as u32);
        }

        Ok(Graph {
            interner: self.interner,
            triples: self.triples,
            by_s,
            by_p,
            by_o,
            by_po,
            literal_datatypes: self.literal_datatypes,
            well,
        })
    }
}

/// Immutable, classified triple set with adjacency indexes.
#[derive(Debug)]
pub struct Graph {
    interner: Interner,
    triples: Vec<Triple>,
    by_s: HashMap<TermId, Vec<u32>>,
    by_p: HashMap<TermId, Vec<u32>>,
    by_o: HashMap<TermId, Vec<u32>>,
    by_po: HashMap<(TermId, TermId), Vec<u32>>,
    literal_datatypes: HashMap<TermId, TermId>,
    well: WellKnown,
}

impl Graph {
    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn contains(&self, t: Triple) -> bool {
        self.by_po
            .get(&(t.p, t.o))
            .is_some_and(|ix| ix.iter().any(|&i| self.triples[i as usize].s == t.s))
    }

    pub fn lexical(&self, id: TermId) -> &str {
        self.interner.lexical(id)
    }

    pub fn lookup(&self, lexical: &str) -> Option<TermId> {
        match vocab::compact_iri(lexical) {
            Some(compact) => self.interner.lookup(&compact),
            None => self.interner.lookup(lexical),
        }
    }

    pub fn kind(&self, id: TermId) -> KindSet {
        self.interner.kind(id)
    }

    pub fn is_class(&self, id: TermId) -> bool {
        self.kind(id).contains(KindSet::CLASS)
    }

    pub fn is_predicate(&self, id: TermId) -> bool {
        self.kind(id).contains(KindSet::PREDICATE)
    }

    pub fn is_literal(&self, id: TermId) -> bool {
        self.kind(id).contains(KindSet::LITERAL)
    }

    pub fn is_individual(&self, id: TermId) -> bool {
        self.kind(id).contains(KindSet::INDIVIDUAL)
    }

    /// Datatype class of a literal term, if the term is a literal.
    pub fn literal_datatype(&self, id: TermId) -> Option<TermId> {
        self.literal_datatypes.get(&id).copied()
    }

    pub fn literal_datatypes(&self) -> impl Iterator<Item = (TermId, TermId)> + '_ {
        self.literal_datatypes.iter().map(|(&l, &d)| (l, d))
    }

    pub fn well_known(&self) -> &WellKnown {
        &self.well
    }

    pub fn term_count(&self) -> usize {
        self.interner.len()
    }

    pub fn term_ids(&self) -> impl Iterator<Item = TermId> + '_ {
        self.interner.ids()
    }

    fn index_iter<'a>(&'a self, ix: Option<&'a Vec<u32>>) -> impl Iterator<Item = Triple> + 'a {
        ix.into_iter()
            .flatten()
            .map(move |&i| self.triples[i as usize])
    }

    pub fn triples_with_subject(&self, s: TermId) -> impl Iterator<Item = Triple> + '_ {
        self.index_iter(self.by_s.get(&s))
    }

    pub fn triples_with_predicate(&self, p: TermId) -> impl Iterator<Item = Triple> + '_ {
        self.index_iter(self.by_p.get(&p))
    }

    pub fn triples_with_object(&self, o: TermId) -> impl Iterator<Item = Triple> + '_ {
        self.index_iter(self.by_o.get(&o))
    }

    pub fn triples_with_po(&self, p: TermId, o: TermId) -> impl Iterator<Item = Triple> + '_ {
        self.index_iter(self.by_po.get(&(p, o)))
    }

    /// Human-readable rendering for error messages and logs.
    pub fn format_triple(&self, t: Triple) -> String {
        format!(
            "({}, {}, {})",
            self.lexical(t.s),
            self.lexical(t.p),
            self.lexical(t.o)
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triple(b: &mut GraphBuilder, s: &str, p: &str, o: &str) -> Triple {
        let s = b.intern(s, KindSet::EMPTY);
        let p = b.intern(p, KindSet::EMPTY);
        let o = b.intern(o, KindSet::EMPTY);
        Triple::new(s, p, o)
    }

    #[test]
    fn duplicate_insert_is_noop() {
        let mut b = GraphBuilder::new();
        let t = triple(&mut b, "plato", "wasBornIn", "athens");
        b.insert(t);
        b.insert(t);
        assert_eq!(b.len(), 1);
    }

    #[test]
    fn classification_covers_usage_patterns() {
        let mut b = GraphBuilder::new();
        let t1 = triple(&mut b, "plato", "rdf:type", "philosopher");
        let t2 = triple(&mut b, "philosopher", "rdfs:subClassOf", "person");
        let t3 = triple(&mut b, "wasBornIn", "rdfs:domain", "person");
        let t4 = triple(&mut b, "plato", "wasBornIn", "athens");
        for t in [t1, t2, t3, t4] {
            b.insert(t);
        }
        let g = b.classify().unwrap();

        let plato = g.lookup("plato").unwrap();
        let philosopher = g.lookup("philosopher").unwrap();
        let person = g.lookup("person").unwrap();
        let was_born_in = g.lookup("wasBornIn").unwrap();
        let athens = g.lookup("athens").unwrap();

        assert!(g.is_individual(plato) && !g.is_class(plato));
        assert!(g.is_class(philosopher));
        assert!(g.is_class(person));
        assert!(g.is_predicate(was_born_in) && !g.is_class(was_born_in));
        assert!(g.is_individual(athens), "untyped object defaults to individual");
    }

    #[test]
    fn class_with_own_type_is_also_individual() {
        let mut b = GraphBuilder::new();
        let t1 = triple(&mut b, "person", "rdf:type", "rdfs:Class");
        let t2 = triple(&mut b, "student", "rdfs:subClassOf", "person");
        b.insert(t1);
        b.insert(t2);
        let g = b.classify().unwrap();
        let person = g.lookup("person").unwrap();
        assert!(g.is_class(person));
        assert!(g.is_individual(person));
    }

    #[test]
    fn owl_thing_exists_even_when_absent_from_data() {
        let mut b = GraphBuilder::new();
        let t = triple(&mut b, "a", "p", "b");
        b.insert(t);
        let g = b.classify().unwrap();
        let thing = g.lookup("owl:Thing").unwrap();
        assert!(g.is_class(thing));
    }

    #[test]
    fn literal_used_as_class_is_rejected() {
        let mut b = GraphBuilder::new();
        let s = b.intern("x", KindSet::EMPTY);
        let p = b.intern("rdf:type", KindSet::EMPTY);
        let lit = b.intern_literal("\"42\"", None);
        b.insert(Triple::new(s, p, lit));
        let err = b.classify().unwrap_err();
        assert!(matches!(err, ClassifyError::ConflictingKind { .. }));
    }

    #[test]
    fn full_iris_and_prefixed_forms_intern_identically() {
        let mut b = GraphBuilder::new();
        let a = b.intern("http://www.w3.org/1999/02/22-rdf-syntax-ns#type", KindSet::EMPTY);
        let c = b.intern("rdf:type", KindSet::EMPTY);
        assert_eq!(a, c);
    }

    #[test]
    fn indexes_reach_every_triple() {
        let mut b = GraphBuilder::new();
        let t1 = triple(&mut b, "plato", "wasBornIn", "athens");
        let t2 = triple(&mut b, "leibniz", "wasBornIn", "leipzig");
        let t3 = triple(&mut b, "plato", "influences", "leibniz");
        for t in [t1, t2, t3] {
            b.insert(t);
        }
        let g = b.classify().unwrap();
        for &t in g.triples() {
            assert!(g.triples_with_subject(t.s).any(|x| x == t));
            assert!(g.triples_with_predicate(t.p).any(|x| x == t));
            assert!(g.triples_with_object(t.o).any(|x| x == t));
            assert!(g.triples_with_po(t.p, t.o).any(|x| x == t));
        }
        let p = g.lookup("wasBornIn").unwrap();
        assert_eq!(g.triples_with_predicate(p).count(), 2);
        assert!(g.contains(t1));
    }
}
