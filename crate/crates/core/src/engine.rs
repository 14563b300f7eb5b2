//! The statistics engine: enumerates the schema triples each data triple
//! counts toward and maintains per-key-type counters.
//!
//! Three enumeration strategies are supported. `Stored` charges a triple to
//! the declared schema of its predicate and its superpredicates. `All`
//! charges it to every combination of types its components have. `Levels`
//! sits between the two: it keeps only those combinations within a bounded
//! hierarchy distance of the declared schema, so `Levels(0, 0)` produces
//! exactly the stored schema keys and growing the bounds approaches `All`.

use std::collections::hash_map::Entry;
use std::collections::{HashMap, HashSet};
use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

use crate::graph::{Graph, Triple};
use crate::hierarchy::Hierarchy;
use crate::keys::{normalize, project, PositionSet};
use crate::schema::{declared_or_top, SchemaTriple};
use crate::sketch::CardinalitySketch;
use crate::store::{StatEntry, StatIndex};
use crate::term::TermId;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("invalid configuration: {reason}")]
    InvalidConfig { reason: String },
    #[error(
        "distinct-key tracking reached ~{used_mb} MiB against a budget of {budget_mb} MiB; \
         raise KGSTATS_MEM_BUDGET_MB, drop distinct counters, or switch to sketched counting"
    )]
    MemoryBudget { used_mb: u64, budget_mb: u64 },
}

/// Which enumeration strategy charges data triples to schema triples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Stored,
    All,
    /// Keep type combinations within `up` superclass steps or `down`
    /// subclass steps of a declared domain or range.
    Levels { up: u32, down: u32 },
}

impl Algorithm {
    pub fn describe(self) -> String {
        match self {
            Algorithm::Stored => "stored".into(),
            Algorithm::All => "all".into(),
            Algorithm::Levels { up, down } => format!("levels(u={up}, l={down})"),
        }
    }
}

/// Which of the four counter families to maintain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CountModes {
    pub all: bool,
    pub distinct: bool,
    pub bound: bool,
    pub unbound: bool,
}

impl CountModes {
    pub fn everything() -> CountModes {
        CountModes { all: true, distinct: true, bound: true, unbound: true }
    }

    pub fn bits(self) -> u8 {
        (self.all as u8)
            | (self.distinct as u8) << 1
            | (self.bound as u8) << 2
            | (self.unbound as u8) << 3
    }

    pub fn from_bits(bits: u8) -> CountModes {
        CountModes {
            all: bits & 1 != 0,
            distinct: bits & 2 != 0,
            bound: bits & 4 != 0,
            unbound: bits & 8 != 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Config {
    pub algorithm: Algorithm,
    pub modes: CountModes,
    /// Count hierarchy and declaration triples too, and give the five
    /// vocabulary predicates schema keys of their own.
    pub include_meta: bool,
    pub workers: usize,
    /// Estimate distinct counts with fixed-size sketches instead of exact
    /// key sets.
    pub sketch: bool,
    /// Upper bound on distinct-key tracking memory, in bytes.
    pub mem_budget: Option<u64>,
}

impl Default for Config {
    fn default() -> Config {
        Config {
            algorithm: Algorithm::Stored,
            modes: CountModes::everything(),
            include_meta: false,
            workers: 1,
            sketch: false,
            mem_budget: None,
        }
    }
}

impl Config {
    pub fn validate(&self) -> Result<(), StatsError> {
        let m = self.modes;
        if !m.all && !m.distinct {
            return Err(StatsError::InvalidConfig {
                reason: "at least one of the all/distinct counters must be enabled".into(),
            });
        }
        if !m.bound && !m.unbound {
            return Err(StatsError::InvalidConfig {
                reason: "at least one of the bound/unbound counters must be enabled".into(),
            });
        }
        if self.workers == 0 {
            return Err(StatsError::InvalidConfig { reason: "workers must be at least 1".into() });
        }
        Ok(())
    }

    /// Reads the memory budget from `KGSTATS_MEM_BUDGET_MB` when set.
    pub fn budget_from_env(mut self) -> Config {
        if let Ok(v) = std::env::var("KGSTATS_MEM_BUDGET_MB") {
            if let Ok(mb) = v.trim().parse::<u64>() {
                self.mem_budget = Some(mb * 1024 * 1024);
            }
        }
        self
    }
}

/// Upward type sets for one triple component: classes use their own
/// superclass closure, everything else the closure of its types.
fn component_types(h: &Hierarchy, id: TermId) -> &[TermId] {
    if h.is_class(id) {
        h.class_and_ancestors(id)
    } else {
        h.upward_types(id)
    }
}

/// Schema triples of the predicate and its superpredicates: the declared
/// domain/range products, with owl:Thing on both sides where either is
/// missing.
pub fn stored_types(h: &Hierarchy, t: Triple, out: &mut Vec<SchemaTriple>) {
    for &pg in h.pred_and_ancestors(t.p) {
        let (ds, rs) = declared_or_top(h, pg);
        for &d in ds {
            for &r in rs {
                out.push(SchemaTriple::new(d, pg, r));
            }
        }
    }
    out.sort_unstable();
    out.dedup();
}

/// Every combination of the components' upward types.
pub fn all_types(h: &Hierarchy, t: Triple, out: &mut Vec<SchemaTriple>) {
    let gs = component_types(h, t.s);
    let go = component_types(h, t.o);
    for &pg in h.pred_and_ancestors(t.p) {
        for &s in gs {
            for &o in go {
                out.push(SchemaTriple::new(s, pg, o));
            }
        }
    }
    out.sort_unstable();
    out.dedup();
}

fn near_declaration(h: &Hierarchy, c: TermId, declared: &[TermId], up: u32, down: u32) -> bool {
    declared.iter().any(|&dc| match h.dist(c, dc) {
        Some(steps) => {
            (h.leq(dc, c) && steps <= up) || (h.leq(c, dc) && steps <= down)
        }
        None => false,
    })
}

/// The `All` combinations filtered, per superpredicate, to types within
/// `up`/`down` hierarchy steps of that predicate's declared schema.
pub fn level_types(h: &Hierarchy, t: Triple, up: u32, down: u32, out: &mut Vec<SchemaTriple>) {
    let gs = component_types(h, t.s);
    let go = component_types(h, t.o);
    for &pg in h.pred_and_ancestors(t.p) {
        let (ds, rs) = declared_or_top(h, pg);
        for &s in gs.iter().filter(|&&c| near_declaration(h, c, ds, up, down)) {
            for &o in go.iter().filter(|&&c| near_declaration(h, c, rs, up, down)) {
                out.push(SchemaTriple::new(s, pg, o));
            }
        }
    }
    out.sort_unstable();
    out.dedup();
}

/// Distinct-key tracker for one counter slot.
enum Distinct {
    Exact(HashSet<[u32; 3]>),
    Sketch(CardinalitySketch),
}

impl Distinct {
    fn new(sketch: bool) -> Distinct {
        if sketch {
            Distinct::Sketch(CardinalitySketch::new())
        } else {
            Distinct::Exact(HashSet::new())
        }
    }

    /// Records a key and returns the approximate bytes newly retained.
    fn insert(&mut self, key: [u32; 3]) -> u64 {
        match self {
            Distinct::Exact(set) => {
                if set.insert(key) {
                    ENTRY_BYTES
                } else {
                    0
                }
            }
            Distinct::Sketch(s) => {
                let fresh = s.is_empty();
                s.insert(&key);
                if fresh {
                    CardinalitySketch::BYTES
                } else {
                    0
                }
            }
        }
    }

    fn count(&self) -> u64 {
        match self {
            Distinct::Exact(set) => set.len() as u64,
            Distinct::Sketch(s) => s.estimate(),
        }
    }

    fn merge(&mut self, other: Distinct) {
        match (self, other) {
            (Distinct::Exact(a), Distinct::Exact(b)) => a.extend(b),
            (Distinct::Sketch(a), Distinct::Sketch(b)) => a.merge(&b),
            _ => unreachable!("distinct trackers of one run share a representation"),
        }
    }
}

/// Approximate cost of one retained exact key (three ids plus set overhead).
const ENTRY_BYTES: u64 = 32;

struct Acc {
    all: [u64; 7],
    distinct: [Option<Box<Distinct>>; 7],
    touched: u8,
}

impl Acc {
    fn new() -> Acc {
        Acc { all: [0; 7], distinct: Default::default(), touched: 0 }
    }

    fn update(&mut self, slot: usize, t: Triple, set: PositionSet, modes: CountModes, sketch: bool) -> u64 {
        self.touched |= 1 << slot;
        let mut retained = 0;
        if modes.all {
            self.all[slot] += 1;
        }
        if modes.distinct {
            let d = self.distinct[slot].get_or_insert_with(|| Box::new(Distinct::new(sketch)));
            retained += d.insert(project(t, set));
        }
        retained
    }

    fn merge(&mut self, other: Acc) {
        let Acc { all, distinct, touched } = other;
        self.touched |= touched;
        for (i, d) in distinct.into_iter().enumerate() {
            self.all[i] += all[i];
            match (&mut self.distinct[i], d) {
                (Some(a), Some(b)) => a.merge(*b),
                (slot @ None, Some(b)) => *slot = Some(b),
                _ => {}
            }
        }
    }

    fn finish(self) -> StatEntry {
        let mut distinct = [0u64; 7];
        for (i, d) in self.distinct.iter().enumerate() {
            if let Some(d) = d {
                distinct[i] = d.count();
            }
        }
        StatEntry { all: self.all, distinct, touched: self.touched }
    }
}

struct Shard<'a> {
    h: &'a Hierarchy,
    modes: CountModes,
    sketch: bool,
    top: TermId,
    bound: HashMap<SchemaTriple, Acc>,
    unbound: HashMap<SchemaTriple, Acc>,
    /// Bytes retained locally but not yet published to the shared total.
    pending: u64,
}

impl<'a> Shard<'a> {
    fn new(h: &'a Hierarchy, cfg: &Config) -> Shard<'a> {
        Shard {
            h,
            modes: cfg.modes,
            sketch: cfg.sketch,
            top: h.thing(),
            bound: HashMap::new(),
            unbound: HashMap::new(),
            pending: 0,
        }
    }

    fn record(&mut self, t: Triple, emitted: &[SchemaTriple]) {
        for &tt in emitted {
            // One containment check per component, reused by all seven slots.
            let covers = self.h.leq(t.s, tt.s)
                && self.h.leq(t.p, tt.p)
                && self.h.leq(t.o, tt.o);
            for set in PositionSet::all() {
                let slot = set.slot();
                if self.modes.bound && covers {
                    let acc = self.bound.entry(tt).or_insert_with(Acc::new);
                    self.pending += acc.update(slot, t, set, self.modes, self.sketch);
                }
                if self.modes.unbound {
                    let key = normalize(tt, set, self.top);
                    let acc = self.unbound.entry(key).or_insert_with(Acc::new);
                    self.pending += acc.update(slot, t, set, self.modes, self.sketch);
                }
            }
        }
    }

    fn publish(&mut self, used: &AtomicU64, budget: Option<u64>) -> Result<(), StatsError> {
        if self.pending == 0 {
            return Ok(());
        }
        let total = used.fetch_add(self.pending, Ordering::Relaxed) + self.pending;
        self.pending = 0;
        if let Some(budget) = budget {
            if total > budget {
                return Err(StatsError::MemoryBudget {
                    used_mb: total >> 20,
                    budget_mb: budget >> 20,
                });
            }
        }
        Ok(())
    }

    fn merge(&mut self, other: Shard<'a>) {
        for (k, acc) in other.bound {
            match self.bound.entry(k) {
                Entry::Occupied(mut e) => e.get_mut().merge(acc),
                Entry::Vacant(e) => {
                    e.insert(acc);
                }
            }
        }
        for (k, acc) in other.unbound {
            match self.unbound.entry(k) {
                Entry::Occupied(mut e) => e.get_mut().merge(acc),
                Entry::Vacant(e) => {
                    e.insert(acc);
                }
            }
        }
    }
}

/// Emits the schema triples a data triple counts toward under `alg`.
pub fn enumerate(h: &Hierarchy, alg: Algorithm, t: Triple, out: &mut Vec<SchemaTriple>) {
    out.clear();
    match alg {
        Algorithm::Stored => stored_types(h, t, out),
        Algorithm::All => all_types(h, t, out),
        Algorithm::Levels { up, down } => level_types(h, t, up, down, out),
    }
}

#[derive(Debug)]
pub struct ComputeOutcome {
    pub index: StatIndex,
    /// Data triples charged to counters (meta triples excluded by default).
    pub counted_triples: usize,
}

/// Runs the configured algorithm over the whole graph.
pub fn compute(g: &Graph, h: &Hierarchy, cfg: &Config) -> Result<ComputeOutcome, StatsError> {
    cfg.validate()?;
    let wk = g.well_known();
    let triples: Vec<Triple> = g
        .triples()
        .iter()
        .copied()
        .filter(|t| cfg.include_meta || !wk.is_meta_predicate(t.p))
        .collect();
    let counted = triples.len();
    let used = AtomicU64::new(0);

    let workers = cfg.workers.min(triples.len().max(1));
    let chunk_len = triples.len().div_ceil(workers);
    let shard = if workers <= 1 {
        let mut shard = Shard::new(h, cfg);
        run_chunk(&mut shard, &triples, cfg, &used)?;
        shard
    } else {
        let shards: Vec<Result<Shard, StatsError>> = std::thread::scope(|scope| {
            let handles: Vec<_> = triples
                .chunks(chunk_len)
                .map(|chunk| {
                    scope.spawn(|| {
                        let mut shard = Shard::new(h, cfg);
                        run_chunk(&mut shard, chunk, cfg, &used)?;
                        Ok(shard)
                    })
                })
                .collect();
            handles.into_iter().map(|j| j.join().expect("worker panicked")).collect()
        });
        let mut merged: Option<Shard> = None;
        for r in shards {
            let shard = r?;
            match &mut merged {
                Some(m) => m.merge(shard),
                None => merged = Some(shard),
            }
        }
        merged.unwrap_or_else(|| Shard::new(h, cfg))
    };

    let finish = |map: HashMap<SchemaTriple, Acc>| {
        map.into_iter().map(|(k, acc)| (k, acc.finish())).collect()
    };
    let index = StatIndex::new(finish(shard.bound), finish(shard.unbound), cfg.modes, cfg.sketch);
    Ok(ComputeOutcome { index, counted_triples: counted })
}

fn run_chunk(
    shard: &mut Shard,
    chunk: &[Triple],
    cfg: &Config,
    used: &AtomicU64,
) -> Result<(), StatsError> {
    let mut emitted = Vec::new();
    for &t in chunk {
        enumerate(shard.h, cfg.algorithm, t, &mut emitted);
        shard.record(t, &emitted);
        shard.publish(used, cfg.mem_budget)?;
    }
    Ok(())
}
