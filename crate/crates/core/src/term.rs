//! Term identifiers, kind flags, and the string interner.
//!
//! Every lexical form (IRI, blank node label, literal token) is interned once
//! and addressed by a dense [`TermId`]. Kinds are a bitset, not an enum: one
//! term can legitimately be both a class and an individual (a class that has
//! an `rdf:type` of its own), so the flags are independent.

use std::collections::HashMap;
use std::fmt;

/// Dense handle for an interned term. Ids are assigned in interning order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TermId(pub u32);

impl TermId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for TermId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Kind flags for a term. Stored as a bitset because kinds overlap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct KindSet(u8);

impl KindSet {
    pub const EMPTY: KindSet = KindSet(0);
    pub const INDIVIDUAL: KindSet = KindSet(1);
    pub const CLASS: KindSet = KindSet(2);
    pub const PREDICATE: KindSet = KindSet(4);
    pub const LITERAL: KindSet = KindSet(8);

    pub fn insert(&mut self, other: KindSet) {
        self.0 |= other.0;
    }

    pub fn contains(self, other: KindSet) -> bool {
        self.0 & other.0 == other.0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn from_bits(bits: u8) -> KindSet {
        KindSet(bits & 0x0f)
    }
}

/// Well-known vocabulary, kept in compact prefixed form after interning.
pub mod vocab {
    pub const RDF_TYPE: &str = "rdf:type";
    pub const RDF_PROPERTY: &str = "rdf:Property";
    pub const RDFS_SUBCLASSOF: &str = "rdfs:subClassOf";
    pub const RDFS_SUBPROPERTYOF: &str = "rdfs:subPropertyOf";
    pub const RDFS_DOMAIN: &str = "rdfs:domain";
    pub const RDFS_RANGE: &str = "rdfs:range";
    pub const RDFS_LITERAL: &str = "rdfs:Literal";
    pub const OWL_THING: &str = "owl:Thing";

    const NAMESPACES: [(&str, &str); 4] = [
        ("http://www.w3.org/1999/02/22-rdf-syntax-ns#", "rdf:"),
        ("http://www.w3.org/2000/01/rdf-schema#", "rdfs:"),
        ("http://www.w3.org/2002/07/owl#", "owl:"),
        ("http://www.w3.org/2001/XMLSchema#", "xsd:"),
    ];

    /// Rewrites IRIs from the four standard namespaces to their prefixed form
    /// so that `<http://...#type>` and `<rdf:type>` intern to the same term.
    pub fn compact_iri(iri: &str) -> Option<String> {
        for (ns, prefix) in NAMESPACES {
            if let Some(local) = iri.strip_prefix(ns) {
                return Some(format!("{prefix}{local}"));
            }
        }
        None
    }
}

/// Bijective mapping between lexical forms and dense ids.
///
/// Kind hints supplied at intern time are folded into the final kind set
/// during classification.
#[derive(Debug, Default, Clone)]
pub struct Interner {
    by_lexical: HashMap<String, TermId>,
    lexicals: Vec<String>,
    kinds: Vec<KindSet>,
}

impl Interner {
    pub fn new() -> Interner {
        Interner::default()
    }

    /// Interns `lexical`, folding `hint` into the term's kind flags.
    /// Standard-namespace IRIs must be compacted by the caller beforehand.
    pub fn intern(&mut self, lexical: &str, hint: KindSet) -> TermId {
        if let Some(&id) = self.by_lexical.get(lexical) {
            self.kinds[id.index()].insert(hint);
            return id;
        }
        let id = TermId(self.lexicals.len() as u32);
        self.by_lexical.insert(lexical.to_owned(), id);
        self.lexicals.push(lexical.to_owned());
        self.kinds.push(hint);
        id
    }

    pub fn lookup(&self, lexical: &str) -> Option<TermId> {
        self.by_lexical.get(lexical).copied()
    }

    pub fn lexical(&self, id: TermId) -> &str {
        &self.lexicals[id.index()]
    }

    pub fn kind(&self, id: TermId) -> KindSet {
        self.kinds[id.index()]
    }

    pub(crate) fn add_kind(&mut self, id: TermId, kind: KindSet) {
        self.kinds[id.index()].insert(kind);
    }

    pub fn len(&self) -> usize {
        self.lexicals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lexicals.is_empty()
    }

    /// All ids in interning order.
    pub fn ids(&self) -> impl Iterator<Item = TermId> + '_ {
        (0..self.lexicals.len() as u32).map(TermId)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interning_is_bijective() {
        let mut interner = Interner::new();
        let a = interner.intern("plato", KindSet::EMPTY);
        let b = interner.intern("athens", KindSet::EMPTY);
        let a2 = interner.intern("plato", KindSet::EMPTY);
        assert_eq!(a, a2, "same lexical form must yield the same id");
        assert_ne!(a, b);
        assert_eq!(interner.lexical(a), "plato");
        assert_eq!(interner.len(), 2);
    }

    #[test]
    fn hints_accumulate_across_interns() {
        let mut interner = Interner::new();
        let id = interner.intern("person", KindSet::CLASS);
        interner.intern("person", KindSet::INDIVIDUAL);
        assert!(interner.kind(id).contains(KindSet::CLASS));
        assert!(interner.kind(id).contains(KindSet::INDIVIDUAL));
    }

    #[test]
    fn standard_namespaces_compact_to_prefixes() {
        assert_eq!(
            vocab::compact_iri("http://www.w3.org/1999/02/22-rdf-syntax-ns#type").as_deref(),
            Some("rdf:type")
        );
        assert_eq!(
            vocab::compact_iri("http://www.w3.org/2001/XMLSchema#integer").as_deref(),
            Some("xsd:integer")
        );
        assert_eq!(vocab::compact_iri("http://example.org/person"), None);
    }

    #[test]
    fn kind_bits_overlap() {
        let mut k = KindSet::CLASS;
        k.insert(KindSet::INDIVIDUAL);
        assert!(k.contains(KindSet::CLASS));
        assert!(k.contains(KindSet::INDIVIDUAL));
        assert!(!k.contains(KindSet::LITERAL));
        assert_eq!(KindSet::from_bits(k.bits()), k);
    }
}
