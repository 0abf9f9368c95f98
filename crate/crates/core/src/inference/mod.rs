//! Strict-rate facts about message subsets, their closure, and verdicts.
//!
//! A fact `(S, D)` says: in every length-3 code solving the problem, the
//! vectors of `S` span a space whose dimension lies in `D`. Facts are seeded
//! from detected patterns, closed under stitching and monotonicity rules, and
//! a contradiction between facts is a certificate that no length-3 scalar
//! linear code exists.
//!
//! Messages nobody demands can always be given the zero vector, so the
//! analysis runs on the problem with those messages moved into every
//! receiver's side information (`Problem::absorb_undemanded`). Labels are
//! unchanged by that step.

mod rules;

use std::collections::BTreeSet;

use serde::{Serialize, Serializer};

use crate::dims::DimSet;
use crate::model::{MessageSet, Problem};
use crate::structure::{
    alignment_sets, restricted_internal_conflicts, ConflictStructure, InternalConflict, PatternInventory,
    PatternMatch, Witness,
};

pub use rules::{find_contradiction, seed_facts, stitch_closure};

/// How a fact was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    ConflictingPair,
    InterferingSet,
    TriangularSet,
    Type2Set,
    Xtype2Set,
    SpicAlignmentSet,
    SticInnerTriple,
    SticTriangle,
    SpicCore,
    SpicDiagonal,
    SpicAlignedPair,
    /// Two planes sharing a two-dimensional subset are the same plane.
    Stitch,
    /// A subset spans at most what its superset spans.
    SubsetBound,
    /// A subset of a plane that itself spans two dimensions is that plane.
    SubsetOfPlane,
    /// Two facts on the same subset.
    Combined,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::ConflictingPair => "conflicting pair",
            Rule::InterferingSet => "interfering set",
            Rule::TriangularSet => "triangular interfering set",
            Rule::Type2Set => "type-2 alignment set",
            Rule::Xtype2Set => "extended type-2 set",
            Rule::SpicAlignmentSet => "SPIC alignment set",
            Rule::SticInnerTriple => "STIC inner triple",
            Rule::SticTriangle => "STIC triangle",
            Rule::SpicCore => "SPIC core",
            Rule::SpicDiagonal => "SPIC diagonal pair",
            Rule::SpicAlignedPair => "SPIC aligned pair",
            Rule::Stitch => "stitched planes",
            Rule::SubsetBound => "subset bound",
            Rule::SubsetOfPlane => "two-dimensional subset of a plane",
            Rule::Combined => "combined facts",
        }
    }
}

impl Serialize for Rule {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

/// `subset` spans a dimension in `allowed_dims` in every length-3 code.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StrictRateFact {
    pub subset: MessageSet,
    pub allowed_dims: DimSet,
    pub rule: Rule,
    /// Indices of earlier facts in the same list.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub premises: Vec<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub witnesses: Vec<Witness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pattern: Option<PatternMatch>,
}

impl StrictRateFact {
    pub fn describe(&self) -> String {
        let mut s = format!("{} spans {} [{}", self.subset, self.allowed_dims, self.rule.name());
        if let Some(m) = &self.pattern {
            s.push_str(&format!(" from {}", m.describe()));
        }
        if !self.premises.is_empty() {
            let ps: Vec<String> = self.premises.iter().map(|i| format!("#{i}")).collect();
            s.push_str(&format!(" using {}", ps.join(", ")));
        }
        for w in &self.witnesses {
            s.push_str(&format!("; {}", w.describe()));
        }
        s.push(']');
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Rate1Feasible,
    RateHalfFeasible,
    RateThirdInfeasible,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Reason {
    /// No demanded message interferes anywhere.
    NoConflicts,
    /// No alignment set contains a conflict and, over GF(q) with `q` known
    /// and small, the sets can be given distinct lines: `colouring[i]` is the
    /// line used for `alignment_sets[i]`.
    NoInternalConflicts {
        alignment_sets: Vec<MessageSet>,
        #[serde(skip_serializing_if = "Option::is_none")]
        q: Option<u32>,
        #[serde(skip_serializing_if = "Option::is_none")]
        colouring: Option<Vec<usize>>,
    },
    /// Facts (indices into `facts_used`) on one subset with no common dimension.
    DisjointFacts { subset: MessageSet, facts: Vec<usize> },
    /// A two-dimensional fact whose restriction has a conflict inside an
    /// alignment set, so it cannot be solved in two dimensions.
    RestrictedInternalConflict { fact: usize, conflict: InternalConflict },
    /// Closure finished without a contradiction.
    NoContradiction { facts_derived: usize },
}

#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub verdict: Verdict,
    pub reason: Reason,
    /// Closed under premises; `premises` index into this list.
    pub facts_used: Vec<StrictRateFact>,
}

impl Certificate {
    /// One human-readable line per fact followed by the conclusion.
    pub fn rule_chain(&self) -> Vec<String> {
        let mut out: Vec<String> = self.facts_used.iter().enumerate().map(|(i, f)| format!("#{i} {}", f.describe())).collect();
        out.push(match &self.reason {
            Reason::NoConflicts => "no demanded message interferes: one shared symbol suffices".to_string(),
            Reason::NoInternalConflicts { alignment_sets, q, colouring } => {
                let mut s = format!("no conflicts inside the {} alignment sets", alignment_sets.len());
                if let (Some(q), Some(_)) = (q, colouring) {
                    s.push_str(&format!("; conflicting sets get distinct lines of GF({q})^2"));
                }
                s
            }
            Reason::DisjointFacts { subset, facts } => {
                let ps: Vec<String> = facts.iter().map(|i| format!("#{i}")).collect();
                format!("contradiction: {} leave no possible dimension for {subset}", ps.join(" and "))
            }
            Reason::RestrictedInternalConflict { fact, conflict } => format!(
                "contradiction: #{fact} must be two-dimensional, but {} and {} conflict inside alignment set {} of its restriction",
                conflict.a + 1,
                conflict.b + 1,
                conflict.alignment_set
            ),
            Reason::NoContradiction { facts_derived } => {
                format!("no contradiction among {facts_derived} derived facts")
            }
        });
        out
    }

    /// Subset of the contradiction, for infeasibility certificates.
    pub fn contradiction_subset(&self) -> Option<&MessageSet> {
        match &self.reason {
            Reason::DisjointFacts { subset, .. } => Some(subset),
            Reason::RestrictedInternalConflict { fact, .. } => Some(&self.facts_used[*fact].subset),
            _ => None,
        }
    }
}

/// Largest field for which the line-colouring check is attempted; beyond
/// this the projective line has more points than any desk-scale problem has
/// alignment sets.
const COLOURING_LIMIT: u32 = 64;

/// Verdict using the problem's field hint (if any) for the rate-1/2 check.
pub fn quick_verdict(p: &Problem) -> Certificate {
    quick_verdict_over(p, p.field_hint())
}

/// Rate 1 and rate 1/2 are decided exactly; otherwise the fact engine looks
/// for a contradiction. With `q = None` the field is assumed large enough that
/// the rate-1/2 check reduces to the absence of internal conflicts.
pub fn quick_verdict_over(p: &Problem, q: Option<u32>) -> Certificate {
    let pa = p.absorb_undemanded();
    if pa.conflict_pairs().is_empty() {
        return Certificate { verdict: Verdict::Rate1Feasible, reason: Reason::NoConflicts, facts_used: Vec::new() };
    }
    let cs = ConflictStructure::new(&pa);
    let (sets, _) = alignment_sets(&pa);
    if sets.iter().all(|s| cs.has_internal_conflict(s).is_none()) {
        let q = q.filter(|&q| q <= COLOURING_LIMIT && (q as usize + 1) < sets.len());
        let colouring = match q {
            Some(q) => colour_lines(&cs, &sets, q as usize + 1),
            None => None,
        };
        if q.is_none() || colouring.is_some() {
            return Certificate {
                verdict: Verdict::RateHalfFeasible,
                reason: Reason::NoInternalConflicts { alignment_sets: sets, q, colouring },
                facts_used: Vec::new(),
            };
        }
    }
    let inventory = PatternInventory::detect(&pa);
    let facts = stitch_closure(seed_facts(&pa, &inventory), &pa);
    match find_contradiction(&facts, &pa) {
        Some(c) => c,
        None => Certificate {
            verdict: Verdict::Inconclusive,
            reason: Reason::NoContradiction { facts_derived: facts.len() },
            facts_used: Vec::new(),
        },
    }
}

/// Proper colouring of the alignment sets' conflict graph with `k` colours.
fn colour_lines(cs: &ConflictStructure, sets: &[MessageSet], k: usize) -> Option<Vec<usize>> {
    let m = sets.len();
    let mut adj = vec![BTreeSet::new(); m];
    for i in 0..m {
        for j in i + 1..m {
            if sets[i].iter().any(|&a| sets[j].iter().any(|&b| cs.conflicts(a, b))) {
                adj[i].insert(j);
                adj[j].insert(i);
            }
        }
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by_key(|&i| (usize::MAX - adj[i].len(), i));
    let mut colour = vec![usize::MAX; m];
    fn go(t: usize, order: &[usize], adj: &[BTreeSet<usize>], colour: &mut [usize], k: usize) -> bool {
        if t == order.len() {
            return true;
        }
        let v = order[t];
        // colours are interchangeable: never open more than one new colour
        let used = order[..t].iter().map(|&u| colour[u] + 1).max().unwrap_or(0);
        for c in 0..k.min(used + 1) {
            if adj[v].iter().all(|&u| colour[u] != c) {
                colour[v] = c;
                if go(t + 1, order, adj, colour, k) {
                    return true;
                }
            }
        }
        colour[v] = usize::MAX;
        false
    }
    go(0, &order, &adj, &mut colour, k).then_some(colour)
}

/// Re-derives every step of a certificate against `p`.
pub fn check_certificate(p: &Problem, cert: &Certificate) -> Result<(), String> {
    let pa = p.absorb_undemanded();
    let cs = ConflictStructure::new(&pa);
    match &cert.reason {
        Reason::NoConflicts => {
            return if pa.conflict_pairs().is_empty() { Ok(()) } else { Err("the problem has conflicts".into()) };
        }
        Reason::NoInternalConflicts { alignment_sets: sets, q, colouring } => {
            if *sets != alignment_sets(&pa).0 {
                return Err("alignment sets do not match the problem".into());
            }
            if let Some((a, b)) = sets.iter().find_map(|s| cs.has_internal_conflict(s)) {
                return Err(format!("{} and {} conflict inside an alignment set", a + 1, b + 1));
            }
            if let (Some(q), Some(col)) = (q, colouring) {
                if col.len() != sets.len() || col.iter().any(|&c| c > *q as usize) {
                    return Err("colouring uses too many lines".into());
                }
                for i in 0..sets.len() {
                    for j in i + 1..sets.len() {
                        let clash = sets[i].iter().any(|&a| sets[j].iter().any(|&b| cs.conflicts(a, b)));
                        if clash && col[i] == col[j] {
                            return Err(format!("conflicting sets {} and {} share a line", sets[i], sets[j]));
                        }
                    }
                }
            }
            return Ok(());
        }
        _ => {}
    }
    let rate1_pairs = PatternInventory::detect(&pa).rate1_infeasible_pairs;
    for i in 0..cert.facts_used.len() {
        rules::check_fact(&pa, &cs, &rate1_pairs, &cert.facts_used, i).map_err(|e| format!("fact #{i}: {e}"))?;
    }
    match &cert.reason {
        Reason::DisjointFacts { subset, facts } => {
            let mut dims = DimSet::RATE_THIRD;
            for &i in facts {
                let f = cert.facts_used.get(i).ok_or("fact index out of range")?;
                if &f.subset != subset {
                    return Err(format!("fact #{i} is about {}, not {subset}", f.subset));
                }
                dims = dims.intersect(f.allowed_dims);
            }
            if !dims.is_empty() {
                return Err(format!("facts still allow {dims}"));
            }
        }
        Reason::RestrictedInternalConflict { fact, conflict } => {
            let f = cert.facts_used.get(*fact).ok_or("fact index out of range")?;
            if f.allowed_dims != DimSet::only(2) {
                return Err("the fact does not force two dimensions".into());
            }
            if !restricted_internal_conflicts(&pa, &f.subset).contains(conflict) {
                return Err("the claimed internal conflict does not occur".into());
            }
        }
        Reason::NoContradiction { .. } => {}
        _ => unreachable!(),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, InstanceBuilder};

    #[test]
    fn exact_low_rates() {
        let mut b = InstanceBuilder::new(3);
        b.raw(&[1], &[2, 3]).raw(&[2], &[1, 3]);
        assert_eq!(quick_verdict(&b.build()).verdict, Verdict::Rate1Feasible);
        let pair = quick_verdict(&fixtures::p_pair());
        assert_eq!(pair.verdict, Verdict::RateHalfFeasible);
        check_certificate(&fixtures::p_pair(), &pair).unwrap();
    }

    #[test]
    fn small_fields_need_enough_lines() {
        // four pairwise conflicting messages: fine over a large field, but
        // GF(2)^2 has only three lines
        let mut b = InstanceBuilder::new(4);
        for x in 1..=4 {
            for y in 1..=4 {
                if x != y {
                    b.conflict(x, y);
                }
            }
        }
        let p = b.build();
        assert_eq!(quick_verdict_over(&p, None).verdict, Verdict::RateHalfFeasible);
        assert_eq!(quick_verdict_over(&p, Some(3)).verdict, Verdict::RateHalfFeasible);
        let c = quick_verdict_over(&p, Some(2));
        assert_ne!(c.verdict, Verdict::RateHalfFeasible, "{:?}", c.reason);
    }

    #[test]
    fn double_stic_is_infeasible() {
        let p = fixtures::p_2stic();
        let cert = quick_verdict(&p);
        assert_eq!(cert.verdict, Verdict::RateThirdInfeasible);
        assert_eq!(cert.contradiction_subset(), Some(&MessageSet::from_labels(&[2, 4, 5])));
        let Reason::DisjointFacts { facts, .. } = &cert.reason else { panic!("{:?}", cert.reason) };
        let mut dims: Vec<DimSet> = facts.iter().map(|&i| cert.facts_used[i].allowed_dims).collect();
        dims.sort();
        assert_eq!(dims, vec![DimSet::only(2), DimSet::from_dims(&[1, 3])]);
        check_certificate(&p, &cert).unwrap();
        assert!(cert.rule_chain().last().unwrap().starts_with("contradiction"));
    }

    #[test]
    fn single_configurations_are_not_refuted() {
        for p in [fixtures::p_stic(), fixtures::p_spic(), fixtures::p_tri()] {
            let cert = quick_verdict(&p);
            assert_ne!(cert.verdict, Verdict::RateThirdInfeasible, "{}", cert.rule_chain().join("\n"));
        }
    }

    #[test]
    fn tampered_certificates_are_rejected() {
        let p = fixtures::p_2stic();
        let mut cert = quick_verdict(&p);
        let Reason::DisjointFacts { facts, .. } = &cert.reason else { panic!() };
        let i = facts[0];
        cert.facts_used[i].allowed_dims = DimSet::RATE_THIRD;
        assert!(check_certificate(&p, &cert).is_err());
    }
}
