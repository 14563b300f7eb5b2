//! End-to-end acceptance checks, one per shipped guarantee.
//!
//! Every test prints a single `AC-n PASS` or `AC-n FAIL` line (visible with
//! `cargo test --test acceptance -- --nocapture`) before asserting, so the
//! suite doubles as a checklist.

use std::collections::{HashMap, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use kgstats_core::engine::{compute, enumerate, Algorithm, Config, CountModes};
use kgstats_core::hierarchy::{CycleMode, Hierarchy};
use kgstats_core::keys::{normalize, project, PositionSet};
use kgstats_core::ntriples::{parse_graph, ParseMode};
use kgstats_core::schema::{schema_leq, triple_below, SchemaTriple, StoredSchemaGraph};
use kgstats_core::store::{BindMode, CounterKind, Provenance, StatIndex};
use kgstats_core::synth::{generate, SynthConfig};
use kgstats_core::term::TermId;
use kgstats_core::{datasets, Graph};

macro_rules! ensure {
    ($cond:expr, $($arg:tt)+) => {
        if !$cond {
            return Err(format!($($arg)+));
        }
    };
}

/// Runs one criterion body and prints its pass/fail line.
fn criterion<F>(n: u32, body: F)
where
    F: FnOnce() -> Result<(), String>,
{
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => println!("AC-{n} PASS"),
        Ok(Err(msg)) => {
            println!("AC-{n} FAIL");
            panic!("AC-{n}: {msg}");
        }
        Err(payload) => {
            println!("AC-{n} FAIL");
            std::panic::resume_unwind(payload);
        }
    }
}

fn simple() -> (Graph, Hierarchy) {
    let g = parse_graph(datasets::SIMPLE_NT, ParseMode::Strict).expect("shipped dataset parses");
    let h = Hierarchy::build(&g, CycleMode::Collapse).expect("shipped dataset has no cycles");
    (g, h)
}

fn hierarchy(g: &Graph) -> Hierarchy {
    Hierarchy::build(g, CycleMode::Collapse).expect("generated graphs are acyclic")
}

fn build(g: &Graph, h: &Hierarchy, alg: Algorithm, workers: usize) -> StatIndex {
    let cfg = Config { algorithm: alg, workers, ..Config::default() };
    compute(g, h, &cfg).expect("computation succeeds").index
}

fn term(g: &Graph, name: &str) -> TermId {
    g.lookup(name).unwrap_or_else(|| panic!("term {name} not in graph"))
}

fn key3(g: &Graph, s: &str, p: &str, o: &str) -> SchemaTriple {
    SchemaTriple::new(term(g, s), term(g, p), term(g, o))
}

fn save_bytes(index: &StatIndex, g: &Graph) -> Vec<u8> {
    let mut buf = Vec::new();
    index.save(g, &mut buf).expect("serialization succeeds");
    buf
}

fn bound_keyset(index: &StatIndex) -> HashSet<SchemaTriple> {
    index.bound_keys().into_iter().collect()
}

#[test]
fn ac1_shipped_dataset_counters() {
    criterion(1, || {
        let (g, h) = simple();
        let start = Instant::now();
        let index = build(&g, &h, Algorithm::Stored, 1);
        let elapsed = start.elapsed();
        let expected = [
            (key3(&g, "person", "wasBornIn", "location"), 3),
            (key3(&g, "person", "influences", "person"), 2),
            (key3(&g, "philosopher", "hasAge", "xsd:integer"), 2),
        ];
        for (key, want) in expected {
            let got = index.slot_value(key, PositionSet::SPO, CounterKind::All, BindMode::Bound);
            ensure!(got == Some(want), "{}: got {got:?}, want {want}", key.render(&g));
        }
        ensure!(elapsed.as_secs_f64() < 1.0, "stored run took {elapsed:?}");
        Ok(())
    });
}

#[test]
fn ac2_stored_equals_zero_levels() {
    criterion(2, || {
        let mut graphs = vec![simple().0];
        graphs.extend((0..100).map(|seed| generate(&SynthConfig::small(seed))));
        for (i, g) in graphs.iter().enumerate() {
            ensure!(g.len() <= 200, "graph {i} has {} triples, regime is <= 200", g.len());
            let h = hierarchy(g);
            let st = build(g, &h, Algorithm::Stored, 1);
            let lv = build(g, &h, Algorithm::Levels { up: 0, down: 0 }, 1);
            ensure!(st == lv, "graph {i}: stored and zero-level indexes differ");
            ensure!(
                save_bytes(&st, g) == save_bytes(&lv, g),
                "graph {i}: serialized indexes differ"
            );
        }
        Ok(())
    });
}

/// Independent recount of one counter entry: plain tallies and exact
/// projection sets, written without the engine's accumulator machinery.
struct OracleEntry {
    all: [u64; 7],
    distinct: [HashSet<[u32; 3]>; 7],
    touched: u8,
}

impl OracleEntry {
    fn new() -> OracleEntry {
        OracleEntry {
            all: [0; 7],
            distinct: std::array::from_fn(|_| HashSet::new()),
            touched: 0,
        }
    }

    fn hit(&mut self, set: PositionSet, proj: [u32; 3]) {
        let slot = set.slot();
        self.touched |= 1 << slot;
        self.all[slot] += 1;
        self.distinct[slot].insert(proj);
    }
}

type OracleSide = HashMap<SchemaTriple, OracleEntry>;

/// Full-scan recount: every data triple, every key its enumerator emits,
/// bound gated by containment and unbound keyed by normalization.
fn oracle(g: &Graph, h: &Hierarchy, alg: Algorithm) -> (OracleSide, OracleSide) {
    let wk = g.well_known();
    let mut bound: OracleSide = HashMap::new();
    let mut unbound: OracleSide = HashMap::new();
    let mut emitted = Vec::new();
    for &t in g.triples() {
        if wk.is_meta_predicate(t.p) {
            continue;
        }
        enumerate(h, alg, t, &mut emitted);
        for &key in &emitted {
            let covers = triple_below(h, t, key);
            for set in PositionSet::all() {
                let proj = project(t, set);
                if covers {
                    bound.entry(key).or_insert_with(OracleEntry::new).hit(set, proj);
                }
                let norm = normalize(key, set, h.thing());
                unbound.entry(norm).or_insert_with(OracleEntry::new).hit(set, proj);
            }
        }
    }
    (bound, unbound)
}

fn compare_side(
    g: &Graph,
    index: &StatIndex,
    bind: BindMode,
    side: &OracleSide,
    label: &str,
) -> Result<(), String> {
    let keys: HashSet<SchemaTriple> = match bind {
        BindMode::Bound => index.bound_keys().into_iter().collect(),
        BindMode::Unbound => index.unbound_keys().into_iter().collect(),
    };
    let expected: HashSet<SchemaTriple> = side.keys().copied().collect();
    ensure!(
        keys == expected,
        "{label}: {bind:?} key sets differ ({} indexed vs {} recounted)",
        keys.len(),
        expected.len()
    );
    for (key, entry) in side {
        for set in PositionSet::all() {
            let slot = set.slot();
            let all = index.slot_value(*key, set, CounterKind::All, bind);
            let distinct = index.slot_value(*key, set, CounterKind::Distinct, bind);
            if entry.touched & (1 << slot) != 0 {
                ensure!(
                    all == Some(entry.all[slot]),
                    "{label}: {} {} all {bind:?}: got {all:?}, want {}",
                    key.render(g),
                    set.label(),
                    entry.all[slot]
                );
                let want = entry.distinct[slot].len() as u64;
                ensure!(
                    distinct == Some(want),
                    "{label}: {} {} distinct {bind:?}: got {distinct:?}, want {want}",
                    key.render(g),
                    set.label()
                );
            } else {
                ensure!(
                    all.is_none() && distinct.is_none(),
                    "{label}: {} {} {bind:?} should be untouched",
                    key.render(g),
                    set.label()
                );
            }
        }
    }
    Ok(())
}

#[test]
fn ac3_counters_match_full_scan_recount() {
    criterion(3, || {
        let start = Instant::now();
        let algorithms = [
            Algorithm::Stored,
            Algorithm::All,
            Algorithm::Levels { up: 0, down: 0 },
            Algorithm::Levels { up: 1, down: 1 },
            Algorithm::Levels { up: 2, down: 1 },
        ];
        let mut graphs = vec![simple().0];
        graphs.extend((0..100).map(|seed| generate(&SynthConfig::small(seed))));
        for (i, g) in graphs.iter().enumerate() {
            let h = hierarchy(g);
            for alg in algorithms {
                let index = build(g, &h, alg, 1);
                let (bound, unbound) = oracle(g, &h, alg);
                let label = format!("graph {i}, {}", alg.describe());
                compare_side(g, &index, BindMode::Bound, &bound, &label)?;
                compare_side(g, &index, BindMode::Unbound, &unbound, &label)?;
            }
        }
        let elapsed = start.elapsed();
        ensure!(elapsed.as_secs() < 60, "recount suite took {elapsed:?}");
        Ok(())
    });
}

#[test]
fn ac4_level_key_sets_grow_monotonically() {
    criterion(4, || {
        for seed in 0..25u64 {
            let g = generate(&SynthConfig::small(seed));
            let h = hierarchy(&g);
            let all_keys = bound_keyset(&build(&g, &h, Algorithm::All, 1));
            let mut grid: Vec<Vec<HashSet<SchemaTriple>>> = Vec::new();
            for up in 0..=4u32 {
                let mut row = Vec::new();
                for down in 0..=2u32 {
                    let keys =
                        bound_keyset(&build(&g, &h, Algorithm::Levels { up, down }, 1));
                    ensure!(
                        keys.is_subset(&all_keys),
                        "seed {seed}: levels({up},{down}) emits keys outside the full cross"
                    );
                    row.push(keys);
                }
                grid.push(row);
            }
            for up in 0..=4usize {
                for down in 0..=2usize {
                    if up > 0 {
                        ensure!(
                            grid[up - 1][down].is_subset(&grid[up][down]),
                            "seed {seed}: raising up {} -> {up} lost keys",
                            up - 1
                        );
                    }
                    if down > 0 {
                        ensure!(
                            grid[up][down - 1].is_subset(&grid[up][down]),
                            "seed {seed}: raising down {} -> {down} lost keys",
                            down - 1
                        );
                    }
                }
            }
        }
        Ok(())
    });
}

#[test]
fn ac5_order_properties_hold_exhaustively() {
    criterion(5, || {
        let mut graphs = vec![simple().0];
        graphs.extend((0..5).map(|seed| generate(&SynthConfig::small(seed))));
        for (i, g) in graphs.iter().enumerate() {
            let h = hierarchy(g);
            let terms: Vec<TermId> = g.term_ids().collect();

            // Reflexivity, then the full relation for the remaining laws.
            let mut below: HashMap<TermId, Vec<TermId>> = HashMap::new();
            let mut related: HashSet<(TermId, TermId)> = HashSet::new();
            for &a in &terms {
                ensure!(h.leq(a, a), "graph {i}: {} not below itself", g.lexical(a));
                for &b in &terms {
                    if h.leq(a, b) {
                        related.insert((a, b));
                        below.entry(b).or_default().push(a);
                    }
                }
            }
            for &(a, b) in &related {
                if a != b && related.contains(&(b, a)) {
                    ensure!(
                        h.rep(a) == h.rep(b),
                        "graph {i}: {} and {} comparable both ways without sharing a representative",
                        g.lexical(a),
                        g.lexical(b)
                    );
                }
                for &c in below.get(&a).map(Vec::as_slice).unwrap_or(&[]) {
                    ensure!(
                        related.contains(&(c, b)),
                        "graph {i}: order not transitive at {} <= {} <= {}",
                        g.lexical(c),
                        g.lexical(a),
                        g.lexical(b)
                    );
                }
            }

            // Comparable classes have nested instance sets.
            let classes: Vec<TermId> = h.classes().collect();
            for &c1 in &classes {
                let i1 = h.interpretation(c1, g).expect("classes interpret");
                for &c2 in &classes {
                    if !h.leq(c1, c2) {
                        continue;
                    }
                    let i2: HashSet<TermId> =
                        h.interpretation(c2, g).expect("classes interpret").into_iter().collect();
                    ensure!(
                        i1.iter().all(|x| i2.contains(x)),
                        "graph {i}: instances of {} not within {}",
                        g.lexical(c1),
                        g.lexical(c2)
                    );
                }
            }

            // Comparable schema triples subsume each other's covered data.
            let mut candidates: HashSet<SchemaTriple> =
                StoredSchemaGraph::extract(g, &h, false).triples().iter().copied().collect();
            candidates.extend(bound_keyset(&build(g, &h, Algorithm::All, 1)));
            let mut candidates: Vec<SchemaTriple> = candidates.into_iter().collect();
            candidates.sort_unstable();
            candidates.truncate(300);
            let wk = g.well_known();
            let data: Vec<_> = g
                .triples()
                .iter()
                .copied()
                .filter(|t| !wk.is_meta_predicate(t.p))
                .collect();
            for &k1 in &candidates {
                for &k2 in &candidates {
                    if !schema_leq(&h, k1, k2) {
                        continue;
                    }
                    for &t in &data {
                        if triple_below(&h, t, k1) {
                            ensure!(
                                triple_below(&h, t, k2),
                                "graph {i}: {} below {} but not below the more general {}",
                                g.format_triple(t),
                                k1.render(g),
                                k2.render(g)
                            );
                        }
                    }
                }
            }
        }
        Ok(())
    });
}

#[test]
fn ac6_retrieval_bounds_and_antichains() {
    criterion(6, || {
        let mut cases = Cases::default();
        let mut graphs = vec![simple().0];
        graphs.extend((0..12).map(|seed| generate(&SynthConfig::small(seed))));
        for (i, g) in graphs.iter().enumerate() {
            let h = hierarchy(g);
            for alg in [Algorithm::All, Algorithm::Stored] {
                let index = build(g, &h, alg, 1);
                check_retrievals(g, &h, &index, i, &mut cases)?;
            }
        }
        ensure!(cases.summed > 0, "no summed-from-above retrieval was exercised");
        ensure!(cases.min > 0, "no min-from-below retrieval was exercised");
        ensure!(cases.exact > 0, "no exact retrieval was exercised");
        ensure!(cases.not_covered > 0, "no uncovered retrieval was exercised");
        Ok(())
    });
}

#[derive(Default)]
struct Cases {
    exact: u64,
    summed: u64,
    min: u64,
    not_covered: u64,
}

/// Antichain filter: keep members with no strictly greater (or smaller)
/// element in the set.
fn frontier(h: &Hierarchy, set: &[SchemaTriple], keep_maximal: bool) -> Vec<SchemaTriple> {
    set.iter()
        .copied()
        .filter(|&a| {
            !set.iter().any(|&b| {
                b != a
                    && if keep_maximal { schema_leq(h, a, b) } else { schema_leq(h, b, a) }
            })
        })
        .collect()
}

fn check_retrievals(
    g: &Graph,
    h: &Hierarchy,
    index: &StatIndex,
    graph_no: usize,
    cases: &mut Cases,
) -> Result<(), String> {
    let spo = PositionSet::SPO;
    let stored = index.bound_keys();
    let wk = g.well_known();
    let true_count = |key: SchemaTriple| {
        g.triples()
            .iter()
            .filter(|t| !wk.is_meta_predicate(t.p) && triple_below(h, **t, key))
            .count() as u64
    };

    // Deterministic sample of the key space on both sides of the stored set.
    let mut classes: Vec<TermId> = h.classes().collect();
    classes.sort_unstable();
    let mut preds: Vec<TermId> = g.term_ids().filter(|&t| g.is_predicate(t)).collect();
    preds.sort_unstable();
    let pick = |v: &[TermId], cap: usize| -> Vec<TermId> {
        let step = v.len().div_ceil(cap).max(1);
        v.iter().step_by(step).copied().collect()
    };
    let mut sides = pick(&classes, 10);
    sides.push(h.thing());
    let preds = pick(&preds, 8);

    for &s in &sides {
        for &p in &preds {
            for &o in &sides {
                let query = SchemaTriple::new(s, p, o);
                let got = index.retrieve(h, query, spo, CounterKind::All, BindMode::Bound);
                let fail = |msg: &str| {
                    format!("graph {graph_no}, query {}: {msg}", query.render(g))
                };
                match got.provenance {
                    Provenance::Exact => {
                        cases.exact += 1;
                        let direct =
                            index.slot_value(query, spo, CounterKind::All, BindMode::Bound);
                        ensure!(direct == Some(got.value), "{}", fail("exact hit mismatch"));
                    }
                    Provenance::SummedAbove { parts } => {
                        cases.summed += 1;
                        let covered: Vec<SchemaTriple> = stored
                            .iter()
                            .copied()
                            .filter(|&k| k != query && schema_leq(h, k, query))
                            .collect();
                        let members = frontier(h, &covered, true);
                        ensure!(members.len() == parts, "{}", fail("summed part count differs"));
                        for (a, b) in pairs(&members) {
                            ensure!(
                                !schema_leq(h, a, b) && !schema_leq(h, b, a),
                                "{}",
                                fail("summed members are not an antichain")
                            );
                        }
                        let total: u64 = members
                            .iter()
                            .filter_map(|&k| {
                                index.slot_value(k, spo, CounterKind::All, BindMode::Bound)
                            })
                            .sum();
                        ensure!(got.value == total, "{}", fail("summed value differs"));
                        let max = members
                            .iter()
                            .filter_map(|&k| {
                                index.slot_value(k, spo, CounterKind::All, BindMode::Bound)
                            })
                            .max()
                            .unwrap_or(0);
                        ensure!(got.value >= max, "{}", fail("sum below its largest member"));
                    }
                    Provenance::MinBelow { parts } => {
                        cases.min += 1;
                        let covering: Vec<SchemaTriple> = stored
                            .iter()
                            .copied()
                            .filter(|&k| k != query && schema_leq(h, query, k))
                            .collect();
                        let members = frontier(h, &covering, false);
                        ensure!(members.len() == parts, "{}", fail("min part count differs"));
                        for (a, b) in pairs(&members) {
                            ensure!(
                                !schema_leq(h, a, b) && !schema_leq(h, b, a),
                                "{}",
                                fail("min members are not an antichain")
                            );
                        }
                        let min = members
                            .iter()
                            .filter_map(|&k| {
                                index.slot_value(k, spo, CounterKind::All, BindMode::Bound)
                            })
                            .min()
                            .unwrap_or(0);
                        ensure!(got.value == min, "{}", fail("min value differs"));
                        ensure!(
                            got.value >= true_count(query),
                            "{}",
                            fail("approximation fell below the true count")
                        );
                    }
                    Provenance::NotCovered => {
                        cases.not_covered += 1;
                        ensure!(got.value == 0, "{}", fail("uncovered key answered nonzero"));
                    }
                }
            }
        }
    }
    Ok(())
}

fn pairs(v: &[SchemaTriple]) -> impl Iterator<Item = (SchemaTriple, SchemaTriple)> + '_ {
    v.iter()
        .enumerate()
        .flat_map(|(i, &a)| v[i + 1..].iter().map(move |&b| (a, b)))
}

#[test]
fn ac7_unbound_counters_see_nonconforming_data() {
    criterion(7, || {
        let mut text = datasets::SIMPLE_NT.to_owned();
        text.push_str("<tom> <rdf:type> <cat> .\n<tom> <wasBornIn> <paris> .\n");
        let g = parse_graph(&text, ParseMode::Strict).expect("extended dataset parses");
        let h = hierarchy(&g);
        let index = build(&g, &h, Algorithm::Stored, 1);
        let po = PositionSet::parse("po").expect("po is a valid subset");
        let bound = index.slot_value(
            key3(&g, "person", "wasBornIn", "location"),
            po,
            CounterKind::All,
            BindMode::Bound,
        );
        let unbound = index.slot_value(
            key3(&g, "owl:Thing", "wasBornIn", "location"),
            po,
            CounterKind::All,
            BindMode::Unbound,
        );
        ensure!(bound == Some(3), "bound side counted {bound:?}, want 3");
        ensure!(
            unbound == Some(4),
            "unbound side counted {unbound:?}, want bound + 1 = 4"
        );
        Ok(())
    });
}

#[test]
fn ac8_scales_to_a_million_triples() {
    criterion(8, || {
        let cfg = SynthConfig {
            classes: 1000,
            max_depth: 5,
            diamond_chance: 0.15,
            predicates: 300,
            superpredicate_chance: 0.4,
            literal_chance: 0.2,
            individuals: 140_000,
            facts: 1_000_000,
            superpredicate_fact_chance: 0.1,
            seed: 8,
        };
        let g = generate(&cfg);
        ensure!(g.len() >= 1_000_000, "generated only {} triples", g.len());
        let h = hierarchy(&g);
        ensure!(h.classes().count() >= 1000, "hierarchy lost classes");
        for c in h.classes() {
            if let Some(d) = h.dist(c, h.thing()) {
                ensure!(d <= 5, "class {} sits {d} levels deep", g.lexical(c));
            }
        }

        let workers = std::thread::available_parallelism().map_or(4, |n| n.get()).min(8);
        let start = Instant::now();
        let stored_cfg = Config {
            algorithm: Algorithm::Stored,
            workers,
            sketch: true,
            ..Config::default()
        };
        let stored = compute(&g, &h, &stored_cfg).expect("stored run succeeds").index;
        let elapsed = start.elapsed();
        ensure!(elapsed.as_secs() < 300, "stored run took {elapsed:?}");

        // Key-set comparisons need no distinct tracking.
        let lean = CountModes { all: true, distinct: false, bound: true, unbound: true };
        let level = |up, down| {
            let cfg = Config {
                algorithm: Algorithm::Levels { up, down },
                modes: lean,
                workers,
                ..Config::default()
            };
            compute(&g, &h, &cfg).expect("level run succeeds").index
        };
        let lv0 = level(0, 0);
        let lv1 = level(1, 1);
        ensure!(
            lv1.key_count(BindMode::Bound) > lv0.key_count(BindMode::Bound),
            "widening levels did not grow the key set ({} vs {})",
            lv1.key_count(BindMode::Bound),
            lv0.key_count(BindMode::Bound)
        );
        for (name, index) in [("stored", &stored), ("levels(0,0)", &lv0), ("levels(1,1)", &lv1)] {
            ensure!(
                index.slot_count(BindMode::Unbound) <= index.slot_count(BindMode::Bound),
                "{name}: unbound key types exceed bound ones"
            );
        }
        Ok(())
    });
}

#[test]
fn ac9_worker_count_never_changes_the_bytes() {
    criterion(9, || {
        let mut graphs = vec![simple().0];
        graphs.push(generate(&SynthConfig {
            classes: 40,
            predicates: 12,
            individuals: 500,
            facts: 5000,
            seed: 11,
            ..SynthConfig::default()
        }));
        for (i, g) in graphs.iter().enumerate() {
            let h = hierarchy(g);
            for alg in [
                Algorithm::Stored,
                Algorithm::All,
                Algorithm::Levels { up: 1, down: 1 },
            ] {
                for sketch in [false, true] {
                    let run = |workers| {
                        let cfg = Config { algorithm: alg, workers, sketch, ..Config::default() };
                        compute(g, &h, &cfg).expect("run succeeds").index
                    };
                    let one = run(1);
                    let eight = run(8);
                    ensure!(
                        one == eight,
                        "graph {i}, {}, sketch={sketch}: worker count changed the index",
                        alg.describe()
                    );
                    let bytes = save_bytes(&one, g);
                    ensure!(
                        bytes == save_bytes(&eight, g),
                        "graph {i}, {}, sketch={sketch}: worker count changed the bytes",
                        alg.describe()
                    );
                    let loaded = StatIndex::load(&mut bytes.as_slice())
                        .expect("saved index loads back");
                    ensure!(
                        loaded.index == one,
                        "graph {i}, {}, sketch={sketch}: round trip changed the index",
                        alg.describe()
                    );
                    ensure!(
                        save_bytes(&loaded.index, &loaded.graph) == bytes,
                        "graph {i}, {}, sketch={sketch}: round trip changed the bytes",
                        alg.describe()
                    );
                }
            }
        }
        Ok(())
    });
}
