//! Datasets shipped with the crate.

/// A small scholars-and-cities graph: a four-class hierarchy, four declared
/// predicates (one with a superpredicate, one integer-valued), and facts
/// about three people and four places. 33 triples. Small enough to verify
/// every statistic by hand, rich enough to exercise class and predicate
/// hierarchies, literals, and multi-typed individuals.
pub const SIMPLE_NT: &str = include_str!("../../../data/simple.nt");
