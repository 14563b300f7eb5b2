//! Knowledge-graph statistics: typed counters over RDF/RDFS schema triples.
//!
//! The pipeline reads N-Triples into an interned [`graph::Graph`], derives a
//! specificity order over its terms ([`hierarchy::Hierarchy`]), enumerates
//! the schema triples each data triple counts toward ([`engine`]), and keeps
//! per-key counters that can be persisted, queried with hierarchy-aware
//! fallback ([`store`]), and used for triple-pattern cardinality estimation
//! ([`estimate`]).

pub mod datasets;
pub mod engine;
pub mod estimate;
pub mod graph;
pub mod hierarchy;
pub mod keys;
pub mod ntriples;
pub mod schema;
pub mod sketch;
pub mod store;
pub mod synth;
pub mod term;

pub use engine::{compute, Algorithm, Config, CountModes};
pub use graph::{Graph, GraphBuilder, Triple, TriplePos};
pub use hierarchy::{CycleMode, Hierarchy};
pub use keys::PositionSet;
pub use ntriples::ParseMode;
pub use schema::{SchemaTriple, StoredSchemaGraph};
pub use store::{BindMode, CounterKind, StatIndex};
pub use term::TermId;
