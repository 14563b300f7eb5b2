//! Triple-pattern cardinality estimation from stored statistics.
//!
//! A pattern's bound components are typed by their most specific known
//! types, its variables by the predicate's declared domain or range, and the
//! resulting schema triple addresses the index: the all-count of the key
//! divided by the distinct count at the pattern's bound positions gives the
//! average number of triples per concrete key, which is the estimate.

use std::collections::HashMap;

use thiserror::Error;

use crate::graph::{Graph, TriplePos};
use crate::hierarchy::Hierarchy;
use crate::keys::PositionSet;
use crate::ntriples::{self, PatternTerm, Term};
use crate::schema::{declared_or_top, SchemaTriple};
use crate::store::{BindMode, CounterKind, Provenance, Retrieved, StatIndex};
use crate::term::TermId;

#[derive(Debug, Error)]
pub enum PatternError {
    #[error("malformed pattern: {reason}")]
    Malformed { reason: String },
    #[error("pattern has no variable")]
    NoVariable,
}

/// A triple with variables in place of some components.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriplePattern {
    terms: [PatternTerm; 3],
}

impl TriplePattern {
    pub fn parse(input: &str) -> Result<TriplePattern, PatternError> {
        let terms = ntriples::parse_pattern(input).map_err(|e| PatternError::Malformed {
            reason: match e {
                ntriples::NtError::Syntax { reason, .. } => reason,
                other => other.to_string(),
            },
        })?;
        if !terms.iter().any(|t| matches!(t, PatternTerm::Variable(_))) {
            return Err(PatternError::NoVariable);
        }
        Ok(TriplePattern { terms })
    }

    pub fn term(&self, pos: TriplePos) -> &PatternTerm {
        &self.terms[pos as usize]
    }

    /// Position set of the bound components, `None` when all are variables.
    pub fn bound_positions(&self) -> Option<PositionSet> {
        let mut bits = 0u8;
        for (i, t) in self.terms.iter().enumerate() {
            if matches!(t, PatternTerm::Term(_)) {
                bits |= 1 << i;
            }
        }
        PositionSet::from_bits(bits)
    }

    pub fn variables(&self) -> impl Iterator<Item = (TriplePos, &str)> {
        TriplePos::ALL.iter().filter_map(move |&pos| match self.term(pos) {
            PatternTerm::Variable(name) => Some((pos, name.as_str())),
            PatternTerm::Term(_) => None,
        })
    }

    pub fn render(&self) -> String {
        let token = |t: &PatternTerm| match t {
            PatternTerm::Variable(name) => format!("?{name}"),
            PatternTerm::Term(Term::Iri(iri)) => format!("<{iri}>"),
            PatternTerm::Term(Term::Blank(label)) => format!("_:{label}"),
            PatternTerm::Term(Term::Literal { value, datatype }) => {
                crate::ntriples::literal_token(value, datatype.as_deref())
            }
        };
        format!(
            "{} {} {}",
            token(&self.terms[0]),
            token(&self.terms[1]),
            token(&self.terms[2])
        )
    }
}

/// The schema triple addressed by a pattern, with notes on fallbacks taken.
#[derive(Debug)]
pub struct PatternType {
    pub key: SchemaTriple,
    pub warnings: Vec<String>,
}

fn resolve(g: &Graph, term: &Term) -> Option<TermId> {
    ntriples::lookup_term(g, term)
}

/// The ⪯-minimal candidate; ties go to the smaller interpretation, then the
/// smaller id, so the choice is deterministic.
fn most_specific(g: &Graph, h: &Hierarchy, candidates: &[TermId]) -> TermId {
    debug_assert!(!candidates.is_empty());
    let minimal: Vec<TermId> = candidates
        .iter()
        .copied()
        .filter(|&c| {
            !candidates
                .iter()
                .any(|&d| d != c && h.leq(d, c) && !h.leq(c, d))
        })
        .collect();
    if minimal.len() == 1 {
        return minimal[0];
    }
    let size = |c: TermId| {
        h.interpretation(c, g)
            .map(|v| v.len())
            .unwrap_or(usize::MAX)
    };
    minimal
        .into_iter()
        .min_by_key(|&c| (size(c), c.0))
        .expect("candidate list is nonempty")
}

/// Most specific type of a bound component. Classes stand for themselves,
/// mirroring how enumeration treats class components.
fn component_type(g: &Graph, h: &Hierarchy, id: TermId) -> TermId {
    if h.is_class(id) {
        h.rep(id)
    } else {
        most_specific(g, h, h.types_of(id))
    }
}

/// Computes the pattern's type. `overrides` pins chosen variables to types,
/// which join estimation uses to specialize a pattern.
pub fn pattern_type_with(
    g: &Graph,
    h: &Hierarchy,
    tp: &TriplePattern,
    overrides: &HashMap<String, TermId>,
) -> PatternType {
    let mut warnings = Vec::new();
    let top = h.thing();

    let bound_predicate = match tp.term(TriplePos::Predicate) {
        PatternTerm::Term(t) => {
            let id = resolve(g, t);
            if id.is_none() {
                warnings.push("predicate is not in the graph; using owl:Thing".into());
            }
            id
        }
        PatternTerm::Variable(_) => None,
    };
    let is_typing = bound_predicate.is_some() && bound_predicate == g.well_known().rdf_type;

    let mut component = |pos: TriplePos| -> TermId {
        match tp.term(pos) {
            PatternTerm::Variable(name) => {
                if let Some(&forced) = overrides.get(name) {
                    return forced;
                }
                match (pos, bound_predicate) {
                    // A typing pattern declares its subject's type outright.
                    (TriplePos::Subject, _) if is_typing => {
                        match tp.term(TriplePos::Object) {
                            PatternTerm::Term(t) => resolve(g, t)
                                .filter(|&c| h.is_class(c))
                                .map(|c| h.rep(c))
                                .unwrap_or(top),
                            PatternTerm::Variable(_) => top,
                        }
                    }
                    (TriplePos::Subject, Some(p)) => {
                        most_specific(g, h, declared_or_top(h, p).0)
                    }
                    (TriplePos::Object, Some(p)) => {
                        most_specific(g, h, declared_or_top(h, p).1)
                    }
                    _ => top,
                }
            }
            PatternTerm::Term(t) => match resolve(g, t) {
                Some(id) => {
                    if pos == TriplePos::Predicate {
                        h.rep(id)
                    } else {
                        component_type(g, h, id)
                    }
                }
                None => {
                    // Unseen literals still carry a datatype to type by.
                    let fallback = match t {
                        Term::Literal { datatype: Some(dt), .. } => g
                            .lookup(dt)
                            .filter(|&c| h.is_class(c))
                            .unwrap_or(top),
                        _ => top,
                    };
                    warnings.push(format!(
                        "{} is not in the graph; typed as {}",
                        render_term(t),
                        g.lexical(fallback)
                    ));
                    fallback
                }
            },
        }
    };

    let s = component(TriplePos::Subject);
    let p = component(TriplePos::Predicate);
    let o = component(TriplePos::Object);
    PatternType { key: SchemaTriple::new(s, p, o), warnings }
}

pub fn pattern_type(g: &Graph, h: &Hierarchy, tp: &TriplePattern) -> PatternType {
    pattern_type_with(g, h, tp, &HashMap::new())
}

fn render_term(t: &Term) -> String {
    match t {
        Term::Iri(iri) => format!("<{iri}>"),
        Term::Blank(label) => format!("_:{label}"),
        Term::Literal { value, datatype } => {
            ntriples::literal_token(value, datatype.as_deref())
        }
    }
}

#[derive(Debug)]
pub struct Estimate {
    pub pattern: String,
    pub key: SchemaTriple,
    pub value: f64,
    pub numerator: Retrieved,
    /// Distinct-count divisor; absent when the pattern has no bound position.
    pub denominator: Option<Retrieved>,
    pub warnings: Vec<String>,
}

fn estimate_with(
    g: &Graph,
    h: &Hierarchy,
    index: &StatIndex,
    tp: &TriplePattern,
    overrides: &HashMap<String, TermId>,
) -> Estimate {
    let PatternType { key, mut warnings } = pattern_type_with(g, h, tp, overrides);
    let bind = if index.modes().bound { BindMode::Bound } else { BindMode::Unbound };

    // Typing patterns are answered from the ontology itself: the class
    // interpretation size is exact, no counter needed.
    if let (PatternTerm::Variable(_), PatternTerm::Term(Term::Iri(_))) =
        (tp.term(TriplePos::Subject), tp.term(TriplePos::Predicate))
    {
        let pred = resolve_pred(g, tp);
        let is_typing = pred.is_some() && pred == g.well_known().rdf_type;
        if is_typing {
            if let PatternTerm::Term(t) = tp.term(TriplePos::Object) {
                if let Some(class) = resolve(g, t).filter(|&c| h.is_class(c)) {
                    let value = h.interpretation(class, g).map(|v| v.len()).unwrap_or(0);
                    warnings.push("typing pattern answered from class instance count".into());
                    return Estimate {
                        pattern: tp.render(),
                        key,
                        value: value as f64,
                        numerator: Retrieved {
                            value: value as u64,
                            provenance: Provenance::Exact,
                        },
                        denominator: None,
                        warnings,
                    };
                }
            }
        }
    }

    let numerator = index.retrieve(h, key, PositionSet::SPO, CounterKind::All, bind);
    if numerator.provenance == Provenance::NotCovered {
        warnings.push(format!("{} is not covered by stored statistics", key.render(g)));
    }
    let (value, denominator) = match tp.bound_positions() {
        None => (numerator.value as f64, None),
        Some(set) => {
            let den = index.retrieve(h, key, set, CounterKind::Distinct, bind);
            if den.provenance == Provenance::NotCovered {
                warnings.push(format!(
                    "distinct counter at {} not covered for {}",
                    set.label(),
                    key.render(g)
                ));
            }
            let value = if den.value == 0 {
                0.0
            } else {
                numerator.value as f64 / den.value as f64
            };
            (value, Some(den))
        }
    };
    Estimate { pattern: tp.render(), key, value, numerator, denominator, warnings }
}

fn resolve_pred(g: &Graph, tp: &TriplePattern) -> Option<TermId> {
    match tp.term(TriplePos::Predicate) {
        PatternTerm::Term(t) => resolve(g, t),
        PatternTerm::Variable(_) => None,
    }
}

/// Estimates how many triples match the pattern.
pub fn estimate(g: &Graph, h: &Hierarchy, index: &StatIndex, tp: &TriplePattern) -> Estimate {
    estimate_with(g, h, index, tp, &HashMap::new())
}

/// One shared variable's typing on both sides of a join.
#[derive(Debug)]
pub struct SharedVariable {
    pub name: String,
    pub left_type: TermId,
    pub right_type: TermId,
    /// Types the variable is specialized to: one when comparable, both
    /// candidates when not.
    pub chosen: Vec<TermId>,
}

/// A heuristic two-pattern join estimate.
#[derive(Debug)]
pub struct JoinEstimate {
    pub shared: Vec<SharedVariable>,
    /// One estimate per specialization choice; several when some shared
    /// variable's types were incomparable.
    pub candidates: Vec<JoinCandidate>,
}

#[derive(Debug)]
pub struct JoinCandidate {
    pub value: f64,
    pub left: Estimate,
    pub right: Estimate,
    /// The specialization applied to both sides, per shared variable.
    pub assignment: Vec<(String, TermId)>,
}

/// Estimates a join of two patterns over their shared variables by
/// specializing each shared variable to the more specific of its two types
/// and multiplying the single-pattern estimates under an independence
/// assumption, scaled by the shared domain size. This goes beyond what the
/// statistics define, so results are candidates, not guarantees.
pub fn estimate_join(
    g: &Graph,
    h: &Hierarchy,
    index: &StatIndex,
    left: &TriplePattern,
    right: &TriplePattern,
) -> JoinEstimate {
    let lt = pattern_type(g, h, left);
    let rt = pattern_type(g, h, right);

    let mut shared = Vec::new();
    for (lpos, name) in left.variables() {
        for (rpos, rname) in right.variables() {
            if name != rname {
                continue;
            }
            let a = lt.key.get(lpos);
            let b = rt.key.get(rpos);
            let chosen = if h.leq(a, b) {
                vec![a]
            } else if h.leq(b, a) {
                vec![b]
            } else {
                vec![a, b]
            };
            shared.push(SharedVariable {
                name: name.to_owned(),
                left_type: a,
                right_type: b,
                chosen,
            });
        }
    }

    // Cartesian product over per-variable choices; incomparable types are
    // rare, so this stays tiny.
    let mut assignments: Vec<Vec<(String, TermId)>> = vec![Vec::new()];
    for sv in &shared {
        let mut next = Vec::new();
        for base in &assignments {
            for &ty in &sv.chosen {
                let mut a = base.clone();
                a.push((sv.name.clone(), ty));
                next.push(a);
            }
        }
        assignments = next;
    }

    let mut candidates = Vec::new();
    for assignment in assignments {
        let overrides: HashMap<String, TermId> =
            assignment.iter().cloned().collect();
        let le = estimate_with(g, h, index, left, &overrides);
        let re = estimate_with(g, h, index, right, &overrides);
        let mut value = le.value * re.value;
        for (_, ty) in &assignment {
            let dom = h.interpretation(*ty, g).map(|v| v.len()).unwrap_or(0);
            if dom == 0 {
                value = 0.0;
            } else {
                value /= dom as f64;
            }
        }
        candidates.push(JoinCandidate { value, left: le, right: re, assignment });
    }

    JoinEstimate { shared, candidates }
}
