//! Seeded random graph generation for tests and benchmarks.
//!
//! Generated data is schema-coherent: every fact's subject and object are
//! typed at or below the predicate's declared domain and range. In that
//! regime the declared schema describes the data exactly, which is what the
//! equivalence between the stored and zero-bound level algorithms relies on.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{Graph, GraphBuilder, Triple};
use crate::term::{vocab, KindSet};

#[derive(Debug, Clone)]
pub struct SynthConfig {
    /// Classes below owl:Thing.
    pub classes: usize,
    /// Maximum hierarchy depth (a root sits at depth 1).
    pub max_depth: u32,
    /// Chance that a class gets a second parent, turning the tree into a DAG.
    pub diamond_chance: f64,
    /// Declared predicates (each with one domain and one range).
    pub predicates: usize,
    /// Chance that a predicate gets an undeclared superpredicate.
    pub superpredicate_chance: f64,
    /// Chance that a predicate ranges over integer literals instead of a class.
    pub literal_chance: f64,
    pub individuals: usize,
    /// Fact triples to aim for (duplicates collapse, so totals can be lower).
    pub facts: usize,
    /// Chance that a fact uses a bare superpredicate instead of a declared one.
    pub superpredicate_fact_chance: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> SynthConfig {
        SynthConfig {
            classes: 12,
            max_depth: 4,
            diamond_chance: 0.15,
            predicates: 6,
            superpredicate_chance: 0.4,
            literal_chance: 0.2,
            individuals: 30,
            facts: 120,
            superpredicate_fact_chance: 0.1,
            seed: 0,
        }
    }
}

impl SynthConfig {
    /// A small graph in the acceptance-test regime, varied by seed.
    pub fn small(seed: u64) -> SynthConfig {
        SynthConfig {
            classes: 6 + (seed as usize % 15),
            max_depth: 3 + (seed as u32 % 3),
            diamond_chance: if seed % 2 == 0 { 0.0 } else { 0.25 },
            predicates: 3 + (seed as usize % 5),
            individuals: 20 + (seed as usize % 20),
            // Worst case stays below 200 triples in total: ~25 subclass edges,
            // ~21 predicate declarations, ~39 typings, and the facts.
            facts: 60 + (seed as usize % 50),
            seed,
            ..SynthConfig::default()
        }
    }
}

pub fn generate(cfg: &SynthConfig) -> Graph {
    // Seed-stable generator, so recorded seeds reproduce graphs exactly.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut b = GraphBuilder::new();

    let ns = "http://synth.example/";
    let rdf_type = b.intern(vocab::RDF_TYPE, KindSet::PREDICATE);
    let subclass = b.intern(vocab::RDFS_SUBCLASSOF, KindSet::PREDICATE);
    let subproperty = b.intern(vocab::RDFS_SUBPROPERTYOF, KindSet::PREDICATE);
    let domain = b.intern(vocab::RDFS_DOMAIN, KindSet::PREDICATE);
    let range = b.intern(vocab::RDFS_RANGE, KindSet::PREDICATE);
    let thing = b.intern(vocab::OWL_THING, KindSet::CLASS);
    let xsd_int = b.intern("xsd:integer", KindSet::CLASS);

    // Layered class DAG: parents always precede children, so ancestor sets
    // can be folded in index order.
    let n = cfg.classes.max(1);
    let classes: Vec<_> = (0..n)
        .map(|i| b.intern(&format!("{ns}c{i}"), KindSet::CLASS))
        .collect();
    let mut depth = vec![1u32; n];
    let mut ancestors: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let mut anc = vec![i];
        let parent = (i > 0 && depth[..i].iter().any(|&d| d < cfg.max_depth))
            .then(|| loop {
                let j = rng.gen_range(0..i);
                if depth[j] < cfg.max_depth {
                    break j;
                }
            });
        match parent {
            Some(j) => {
                depth[i] = depth[j] + 1;
                b.insert(Triple::new(classes[i], subclass, classes[j]));
                anc.extend(&ancestors[j]);
                if rng.gen_bool(cfg.diamond_chance) {
                    let k = rng.gen_range(0..i);
                    if depth[k] < cfg.max_depth && k != j {
                        b.insert(Triple::new(classes[i], subclass, classes[k]));
                        anc.extend(&ancestors[k]);
                    }
                }
            }
            None => {
                b.insert(Triple::new(classes[i], subclass, thing));
            }
        }
        anc.sort_unstable();
        anc.dedup();
        ancestors[i] = anc;
    }

    // Declared predicates, some with undeclared superpredicates.
    struct Pred {
        id: crate::term::TermId,
        dom: usize,
        rng_class: Option<usize>,
        sup: Option<crate::term::TermId>,
    }
    let preds: Vec<Pred> = (0..cfg.predicates.max(1))
        .map(|i| {
            let id = b.intern(&format!("{ns}p{i}"), KindSet::PREDICATE);
            let dom = rng.gen_range(0..n);
            let rng_class =
                (!rng.gen_bool(cfg.literal_chance)).then(|| rng.gen_range(0..n));
            b.insert(Triple::new(id, domain, classes[dom]));
            match rng_class {
                Some(c) => b.insert(Triple::new(id, range, classes[c])),
                None => b.insert(Triple::new(id, range, xsd_int)),
            }
            let sup = rng.gen_bool(cfg.superpredicate_chance).then(|| {
                let sup = b.intern(&format!("{ns}sp{i}"), KindSet::PREDICATE);
                b.insert(Triple::new(id, subproperty, sup));
                sup
            });
            Pred { id, dom, rng_class, sup }
        })
        .collect();

    // Individuals: the first pass seeds every class so no declared domain or
    // range is left without instances.
    let m = cfg.individuals.max(n);
    let mut pool: Vec<Vec<crate::term::TermId>> = vec![Vec::new(); n];
    for i in 0..m {
        let id = b.intern(&format!("{ns}x{i}"), KindSet::INDIVIDUAL);
        let home = if i < n { i } else { rng.gen_range(0..n) };
        b.insert(Triple::new(id, rdf_type, classes[home]));
        for &a in &ancestors[home] {
            pool[a].push(id);
        }
    }
    let literals: Vec<_> = (0..100)
        .map(|v| b.intern_literal(&format!("\"{v}\"^^<xsd:integer>"), Some("xsd:integer")))
        .collect();

    for _ in 0..cfg.facts {
        let p = &preds[rng.gen_range(0..preds.len())];
        let s = pool[p.dom][rng.gen_range(0..pool[p.dom].len())];
        let o = match p.rng_class {
            Some(c) => pool[c][rng.gen_range(0..pool[c].len())],
            None => literals[rng.gen_range(0..literals.len())],
        };
        let pred = match p.sup {
            Some(sup) if rng.gen_bool(cfg.superpredicate_fact_chance) => sup,
            _ => p.id,
        };
        b.insert(Triple::new(s, pred, o));
    }

    b.classify().expect("generated graphs classify cleanly")
}
