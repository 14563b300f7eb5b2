//! Class and predicate hierarchies: transitive closures, typing, instance
//! lookup, the specificity order over terms, and hierarchy distance.
//!
//! Closures are materialized eagerly at build time; every query afterwards is
//! a hash lookup. `owl:Thing` sits above everything: classes without declared
//! superclasses (including literal datatype classes) get a direct edge to it.
//!
//! Hierarchy cycles are a hard error by default. [`CycleMode::Collapse`]
//! instead merges each strongly connected component into its lowest-id member
//! and answers all hierarchy queries in terms of those representatives.

use std::collections::{HashMap, HashSet};

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use thiserror::Error;

use crate::graph::Graph;
use crate::term::{KindSet, TermId};

#[derive(Debug, Error)]
pub enum HierarchyError {
    #[error("subClassOf cycle through: {}", members.join(", "))]
    ClassCycle { members: Vec<String> },
    #[error("subPropertyOf cycle through: {}", members.join(", "))]
    PredicateCycle { members: Vec<String> },
    #[error("`{lexical}` is not a class")]
    UnknownClass { lexical: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CycleMode {
    #[default]
    Error,
    Collapse,
}

/// Immutable hierarchy index over one classified graph.
#[derive(Debug)]
pub struct Hierarchy {
    thing: TermId,
    kinds: Vec<KindSet>,
    classes: HashSet<TermId>,
    class_rep: HashMap<TermId, TermId>,
    pred_rep: HashMap<TermId, TermId>,
    /// Proper ancestors with shortest edge distance, keyed by representative.
    class_up: HashMap<TermId, HashMap<TermId, u32>>,
    pred_up: HashMap<TermId, HashMap<TermId, u32>>,
    /// Proper descendants, keyed by representative.
    class_down: HashMap<TermId, Vec<TermId>>,
    /// `{c} ∪ ancestors(c)`, sorted, keyed by representative.
    class_closure: HashMap<TermId, Vec<TermId>>,
    pred_closure: HashMap<TermId, Vec<TermId>>,
    /// Direct types per subject (fallback `owl:Thing` applied for individuals).
    types: HashMap<TermId, Vec<TermId>>,
    /// Direct types closed upward, per subject.
    type_closure: HashMap<TermId, Vec<TermId>>,
    /// Direct instances per class representative.
    instances: HashMap<TermId, Vec<TermId>>,
    domains: HashMap<TermId, Vec<TermId>>,
    ranges: HashMap<TermId, Vec<TermId>>,
    thing_slice: Vec<TermId>,
    thing_closure: Vec<TermId>,
}

impl Hierarchy {
    pub fn build(g: &Graph, mode: CycleMode) -> Result<Hierarchy, HierarchyError> {
        let well = *g.well_known();
        let thing = well.thing;
        let kinds: Vec<KindSet> = g.term_ids().map(|id| g.kind(id)).collect();

        let classes: HashSet<TermId> = g
            .term_ids()
            .filter(|&id| g.kind(id).contains(KindSet::CLASS))
            .collect();
        let predicates: HashSet<TermId> = g
            .term_ids()
            .filter(|&id| g.kind(id).contains(KindSet::PREDICATE))
            .collect();

        let class_edges = edge_list(g, well.subclass_of);
        let pred_edges = edge_list(g, well.subproperty_of);

        let class_rep = resolve_cycles(&classes, &class_edges, mode).map_err(|members| {
            HierarchyError::ClassCycle {
                members: members.iter().map(|&m| g.lexical(m).to_owned()).collect(),
            }
        })?;
        let pred_rep = resolve_cycles(&predicates, &pred_edges, mode).map_err(|members| {
            HierarchyError::PredicateCycle {
                members: members.iter().map(|&m| g.lexical(m).to_owned()).collect(),
            }
        })?;

        let thing_rep = rep_of(&class_rep, thing);

        // Parent adjacency over representatives; orphan classes hang off
        // owl:Thing so that every class reaches the top.
        let mut class_parents: HashMap<TermId, Vec<TermId>> = HashMap::new();
        for &(s, o) in &class_edges {
            let (rs, ro) = (rep_of(&class_rep, s), rep_of(&class_rep, o));
            if rs != ro {
                class_parents.entry(rs).or_default().push(ro);
            }
        }
        let class_reps: HashSet<TermId> = classes.iter().map(|&c| rep_of(&class_rep, c)).collect();
        for &c in &class_reps {
            if c != thing_rep && class_parents.get(&c).map_or(true, |ps| ps.is_empty()) {
                class_parents.entry(c).or_default().push(thing_rep);
            }
        }

        let mut pred_parents: HashMap<TermId, Vec<TermId>> = HashMap::new();
        for &(s, o) in &pred_edges {
            let (rs, ro) = (rep_of(&pred_rep, s), rep_of(&pred_rep, o));
            if rs != ro {
                pred_parents.entry(rs).or_default().push(ro);
            }
        }
        let pred_reps: HashSet<TermId> = predicates.iter().map(|&p| rep_of(&pred_rep, p)).collect();

        let class_up = ancestor_tables(&class_reps, &class_parents);
        let pred_up = ancestor_tables(&pred_reps, &pred_parents);

        let mut class_down: HashMap<TermId, Vec<TermId>> = HashMap::new();
        for (&c, ups) in &class_up {
            for &a in ups.keys() {
                class_down.entry(a).or_default().push(c);
            }
        }
        for v in class_down.values_mut() {
            v.sort_unstable();
        }

        let closure_of = |ups: &HashMap<TermId, HashMap<TermId, u32>>, id: TermId| {
            let mut v: Vec<TermId> = vec![id];
            if let Some(a) = ups.get(&id) {
                v.extend(a.keys().copied());
            }
            v.sort_unstable();
            v
        };
        let class_closure: HashMap<TermId, Vec<TermId>> = class_reps
            .iter()
            .map(|&c| (c, closure_of(&class_up, c)))
            .collect();
        let pred_closure: HashMap<TermId, Vec<TermId>> = pred_reps
            .iter()
            .map(|&p| (p, closure_of(&pred_up, p)))
            .collect();

        // Direct typing: rdf:type triples, literal datatypes, and the
        // owl:Thing fallback for individuals that carry no type at all.
        let mut types: HashMap<TermId, Vec<TermId>> = HashMap::new();
        if let Some(rdf_type) = well.rdf_type {
            for t in g.triples_with_predicate(rdf_type) {
                types.entry(t.s).or_default().push(rep_of(&class_rep, t.o));
            }
        }
        for (lit, dt) in g.literal_datatypes() {
            types.entry(lit).or_default().push(rep_of(&class_rep, dt));
        }
        for id in g.term_ids() {
            if g.kind(id).contains(KindSet::INDIVIDUAL) && !types.contains_key(&id) {
                types.insert(id, vec![thing_rep]);
            }
        }
        for v in types.values_mut() {
            v.sort_unstable();
            v.dedup();
        }

        let mut type_closure: HashMap<TermId, Vec<TermId>> = HashMap::new();
        for (&i, ts) in &types {
            let mut v: Vec<TermId> = Vec::with_capacity(ts.len() * 2);
            for &t in ts {
                v.push(t);
                if let Some(a) = class_up.get(&t) {
                    v.extend(a.keys().copied());
                }
            }
            v.sort_unstable();
            v.dedup();
            type_closure.insert(i, v);
        }

        let mut instances: HashMap<TermId, Vec<TermId>> = HashMap::new();
        for (&i, ts) in &types {
            for &t in ts {
                instances.entry(t).or_default().push(i);
            }
        }
        for v in instances.values_mut() {
            v.sort_unstable();
            v.dedup();
        }

        let declared = |pred: Option<TermId>| {
            let mut map: HashMap<TermId, Vec<TermId>> = HashMap::new();
            if let Some(p) = pred {
                for t in g.triples_with_predicate(p) {
                    map.entry(t.s).or_default().push(rep_of(&class_rep, t.o));
                }
            }
            for v in map.values_mut() {
                v.sort_unstable();
                v.dedup();
            }
            map
        };
        let domains = declared(well.domain);
        let ranges = declared(well.range);

        let thing_closure = closure_of(&class_up, thing_rep);
        Ok(Hierarchy {
            thing,
            kinds,
            classes,
            class_rep,
            pred_rep,
            class_up,
            pred_up,
            class_down,
            class_closure,
            pred_closure,
            types,
            type_closure,
            instances,
            domains,
            ranges,
            thing_slice: vec![thing_rep],
            thing_closure,
        })
    }

    pub fn thing(&self) -> TermId {
        rep_of(&self.class_rep, self.thing)
    }

    /// One-element slice holding `owl:Thing`, handy as a declaration fallback.
    pub fn top_slice(&self) -> &[TermId] {
        &self.thing_slice
    }

    fn kind(&self, id: TermId) -> KindSet {
        self.kinds
            .get(id.index())
            .copied()
            .unwrap_or(KindSet::EMPTY)
    }

    pub fn is_class(&self, id: TermId) -> bool {
        self.kind(id).contains(KindSet::CLASS)
    }

    pub fn is_predicate(&self, id: TermId) -> bool {
        self.kind(id).contains(KindSet::PREDICATE)
    }

    /// Hierarchy representative of a term (identity unless cycles collapsed).
    pub fn rep(&self, id: TermId) -> TermId {
        if self.kind(id).contains(KindSet::CLASS) {
            rep_of(&self.class_rep, id)
        } else if self.kind(id).contains(KindSet::PREDICATE) {
            rep_of(&self.pred_rep, id)
        } else {
            id
        }
    }

    /// Direct types of a term. Individuals without declared types answer
    /// `[owl:Thing]`; literals answer their datatype class.
    pub fn types_of(&self, id: TermId) -> &[TermId] {
        match self.types.get(&id) {
            Some(v) => v,
            None => &self.thing_slice,
        }
    }

    /// Direct types closed upward through the class hierarchy.
    pub fn upward_types(&self, id: TermId) -> &[TermId] {
        match self.type_closure.get(&id) {
            Some(v) => v,
            None => &self.thing_closure,
        }
    }

    /// Proper superclasses (transitive, excluding the class itself).
    pub fn up_class(&self, c: TermId) -> Vec<TermId> {
        let rc = rep_of(&self.class_rep, c);
        let mut v: Vec<TermId> = self
            .class_up
            .get(&rc)
            .map(|m| m.keys().copied().collect())
            .unwrap_or_default();
        v.sort_unstable();
        v
    }

    /// Proper superpredicates (transitive, excluding the predicate itself).
    pub fn up_pred(&self, p: TermId) -> Vec<TermId> {
        let rp = rep_of(&self.pred_rep, p);
        let mut v: Vec<TermId> = self
            .pred_up
            .get(&rp)
            .map(|m| m.keys().copied().collect())
            .unwrap_or_default();
        v.sort_unstable();
        v
    }

    /// `{c} ∪ superclasses(c)`, sorted.
    pub fn class_and_ancestors(&self, c: TermId) -> &[TermId] {
        match self.class_closure.get(&rep_of(&self.class_rep, c)) {
            Some(v) => v,
            None => &self.thing_slice,
        }
    }

    /// `{p} ∪ superpredicates(p)`, sorted. Empty for non-predicates.
    pub fn pred_and_ancestors(&self, p: TermId) -> &[TermId] {
        self.pred_closure
            .get(&rep_of(&self.pred_rep, p))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Direct instances of a class.
    pub fn instances_of(&self, c: TermId) -> &[TermId] {
        self.instances
            .get(&rep_of(&self.class_rep, c))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// All instances of `c`: direct ones plus those of every subclass.
    pub fn interpretation(&self, c: TermId, g: &Graph) -> Result<Vec<TermId>, HierarchyError> {
        if !self.is_class(c) {
            return Err(HierarchyError::UnknownClass {
                lexical: g.lexical(c).to_owned(),
            });
        }
        let rc = rep_of(&self.class_rep, c);
        let mut out: Vec<TermId> = self.instances_of(rc).to_vec();
        if let Some(subs) = self.class_down.get(&rc) {
            for &sub in subs {
                out.extend_from_slice(self.instances_of(sub));
            }
        }
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    /// Everything at least as specific as `i`: subclasses, instances, and the
    /// term itself, depending on its kind.
    pub fn natural_interpretation(&self, i: TermId) -> Vec<TermId> {
        let mut out: Vec<TermId> = (0..self.kinds.len() as u32)
            .map(TermId)
            .filter(|&j| self.leq(j, i))
            .collect();
        out.sort_unstable();
        out
    }

    /// Specificity order: `a` is at least as specific as `b`.
    ///
    /// Cases: identity; everything is below `owl:Thing`; class pairs compare
    /// by subclass closure; predicate pairs by subproperty closure; an
    /// individual or literal is below a class when one of its types is.
    pub fn leq(&self, a: TermId, b: TermId) -> bool {
        if a == b || b == self.thing {
            return true;
        }
        let (ka, kb) = (self.kind(a), self.kind(b));
        if kb.contains(KindSet::CLASS) {
            if ka.contains(KindSet::CLASS) && self.class_leq(a, b) {
                return true;
            }
            let rb = rep_of(&self.class_rep, b);
            if (ka.contains(KindSet::INDIVIDUAL) || ka.contains(KindSet::LITERAL))
                && self.types_of(a).iter().any(|&t| self.class_leq(t, rb))
            {
                return true;
            }
        }
        if ka.contains(KindSet::PREDICATE) && kb.contains(KindSet::PREDICATE) {
            let (ra, rb) = (rep_of(&self.pred_rep, a), rep_of(&self.pred_rep, b));
            if ra == rb {
                return true;
            }
            return self
                .pred_up
                .get(&ra)
                .is_some_and(|ups| ups.contains_key(&rb));
        }
        false
    }

    fn class_leq(&self, a: TermId, b: TermId) -> bool {
        let (ra, rb) = (rep_of(&self.class_rep, a), rep_of(&self.class_rep, b));
        ra == rb
            || self
                .class_up
                .get(&ra)
                .is_some_and(|ups| ups.contains_key(&rb))
    }

    /// Shortest subClassOf path length between two comparable classes.
    /// `None` when the classes are incomparable.
    pub fn dist(&self, a: TermId, b: TermId) -> Option<u32> {
        let (ra, rb) = (rep_of(&self.class_rep, a), rep_of(&self.class_rep, b));
        if ra == rb {
            return Some(0);
        }
        if let Some(d) = self.class_up.get(&ra).and_then(|ups| ups.get(&rb)) {
            return Some(*d);
        }
        self.class_up
            .get(&rb)
            .and_then(|ups| ups.get(&ra))
            .copied()
    }

    /// Declared domain classes of a predicate.
    pub fn domains(&self, p: TermId) -> &[TermId] {
        self.domains
            .get(&rep_of(&self.pred_rep, p))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Declared range classes of a predicate.
    pub fn ranges(&self, p: TermId) -> &[TermId] {
        self.ranges
            .get(&rep_of(&self.pred_rep, p))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn classes(&self) -> impl Iterator<Item = TermId> + '_ {
        self.classes.iter().copied()
    }

    pub fn term_count(&self) -> usize {
        self.kinds.len()
    }
}

fn edge_list(g: &Graph, pred: Option<TermId>) -> Vec<(TermId, TermId)> {
    match pred {
        Some(p) => g.triples_with_predicate(p).map(|t| (t.s, t.o)).collect(),
        None => Vec::new(),
    }
}

fn rep_of(rep: &HashMap<TermId, TermId>, id: TermId) -> TermId {
    rep.get(&id).copied().unwrap_or(id)
}

/// Finds strongly connected components among the declared edges. Returns the
/// member-to-representative map in collapse mode, or the members of the first
/// non-trivial component as the error payload.
fn resolve_cycles(
    nodes: &HashSet<TermId>,
    edges: &[(TermId, TermId)],
    mode: CycleMode,
) -> Result<HashMap<TermId, TermId>, Vec<TermId>> {
    let mut graph: DiGraph<TermId, ()> = DiGraph::new();
    let mut index: HashMap<TermId, NodeIndex> = HashMap::new();
    let mut sorted: Vec<TermId> = nodes.iter().copied().collect();
    sorted.sort_unstable();
    for id in sorted {
        index.insert(id, graph.add_node(id));
    }
    for &(s, o) in edges {
        if let (Some(&a), Some(&b)) = (index.get(&s), index.get(&o)) {
            graph.add_edge(a, b, ());
        }
    }

    let mut rep = HashMap::new();
    for component in tarjan_scc(&graph) {
        let cyclic = component.len() > 1
            || graph
                .find_edge(component[0], component[0])
                .is_some();
        if !cyclic {
            continue;
        }
        let mut members: Vec<TermId> = component.iter().map(|&n| graph[n]).collect();
        members.sort_unstable();
        match mode {
            CycleMode::Error => return Err(members),
            CycleMode::Collapse => {
                let r = members[0];
                for &m in &members {
                    if m != r {
                        rep.insert(m, r);
                    }
                }
            }
        }
    }
    Ok(rep)
}

/// Per-node shortest distances to every ancestor, via upward BFS.
fn ancestor_tables(
    nodes: &HashSet<TermId>,
    parents: &HashMap<TermId, Vec<TermId>>,
) -> HashMap<TermId, HashMap<TermId, u32>> {
    let mut tables = HashMap::with_capacity(nodes.len());
    for &start in nodes {
        let mut dist: HashMap<TermId, u32> = HashMap::new();
        let mut frontier = vec![start];
        let mut depth = 0u32;
        while !frontier.is_empty() {
            depth += 1;
            let mut next = Vec::new();
            for node in frontier.drain(..) {
                for &p in parents.get(&node).map(Vec::as_slice).unwrap_or(&[]) {
                    if p != start && !dist.contains_key(&p) {
                        dist.insert(p, depth);
                        next.push(p);
                    }
                }
            }
            frontier = next;
        }
        tables.insert(start, dist);
    }
    tables
}
