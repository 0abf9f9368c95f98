//! Explicit length-3 codes through maximal contraction.
//!
//! On a maximal contraction whose extended type-2 sets (a) have no
//! restricted internal conflicts, (b) never overlap three at a time and
//! (c) intersect only in non-conflicting messages, every set is placed in a
//! plane of GF(q)^3 so that intersecting sets share exactly the vector of
//! their intersection; everything else is random. Random choices can fail
//! over small fields, so every code is verified, and retried with fresh
//! randomness when it does not verify.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

pub use crate::code::{verify_code, PrecodingAssignment, Violation};
use crate::contraction::{is_maximal, lift_code, maximal_contraction, ContractionMap, ContractionPolicy};
use crate::gf::{random_nonzero, sample_nonzero, sample_outside, span_of, FVector, Field, GfError, Subspace};
use crate::model::{serialize_label, MessageSet, Problem};
use crate::structure::{
    alignment_sets, build_etig, fork_cycle_flags, restricted_internal_conflicts, type2_sets, xtype2_sets,
    ConflictStructure, Etig, ForkCycle, InternalConflict,
};

const L: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConstructError {
    #[error("no explored maximal contraction satisfies the sufficient conditions")]
    NoQualifyingContraction { reports: Vec<(ContractionPolicy, ConditionReport)> },
    #[error("no verified code after {retries} attempts on each of {policies} qualifying contractions")]
    RetryExhausted { policies: usize, retries: usize },
    #[error("the problem is not maximally contracted: {0} and {1} can still be merged")]
    NotMaximal(usize, usize),
    #[error("the sufficient conditions do not hold on this contraction")]
    ConditionViolation(Box<ConditionReport>),
    #[error("a code verified on the contraction failed on the original problem")]
    LiftingFailed,
    #[error(transparent)]
    Field(#[from] GfError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TripleOverlap {
    #[serde(serialize_with = "serialize_label")]
    pub message: usize,
    /// Indices into `xtype2_sets`.
    pub sets: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IntersectionConflict {
    pub sets: (usize, usize),
    #[serde(serialize_with = "serialize_label")]
    pub a: usize,
    #[serde(serialize_with = "serialize_label")]
    pub b: usize,
}

/// The three sufficient conditions evaluated on a maximal contraction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConditionReport {
    pub xtype2_sets: Vec<MessageSet>,
    /// (a): conflicts inside alignment sets of each set's restriction.
    pub internal_conflicts: Vec<InternalConflict>,
    /// (b): messages in three or more sets.
    pub triple_overlaps: Vec<TripleOverlap>,
    /// (c): conflicting pairs inside an intersection of two sets.
    pub intersection_conflicts: Vec<IntersectionConflict>,
}

impl ConditionReport {
    pub fn holds(&self) -> bool {
        self.internal_conflicts.is_empty() && self.triple_overlaps.is_empty() && self.intersection_conflicts.is_empty()
    }
}

/// Evaluates conditions (a)–(c) on `pc`, which must be maximally contracted.
pub fn sufficiency_conditions(pc: &Problem) -> Result<ConditionReport, ConstructError> {
    if !is_maximal(pc) {
        let (a, b) = crate::contraction::contractible_edges(pc)[0];
        return Err(ConstructError::NotMaximal(a + 1, b + 1));
    }
    let cs = ConflictStructure::new(pc);
    let sets: Vec<MessageSet> = xtype2_sets(pc).into_iter().map(|m| m.members).collect();
    let internal_conflicts = sets.iter().flat_map(|s| restricted_internal_conflicts(pc, s)).collect();
    let triple_overlaps = (0..pc.n())
        .filter_map(|m| {
            let holding: Vec<usize> = (0..sets.len()).filter(|&i| sets[i].contains(&m)).collect();
            (holding.len() >= 3).then_some(TripleOverlap { message: m, sets: holding })
        })
        .collect();
    let mut intersection_conflicts = Vec::new();
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            let shared: Vec<usize> = sets[i].intersection(&sets[j]).iter().copied().collect();
            for (x, &a) in shared.iter().enumerate() {
                for &b in &shared[x + 1..] {
                    if cs.conflicts(a, b) {
                        intersection_conflicts.push(IntersectionConflict { sets: (i, j), a, b });
                    }
                }
            }
        }
    }
    Ok(ConditionReport { xtype2_sets: sets, internal_conflicts, triple_overlaps, intersection_conflicts })
}

/// Assigns a vector to every edge so that the edges at each vertex span at
/// most a plane. Edges in `order` (vertex index pairs) go first, the rest
/// lexicographically.
pub fn assign_etig_vectors<R: Rng + ?Sized>(
    etig: &mut Etig,
    field: Field,
    rng: &mut R,
    order: Option<&[(usize, usize)]>,
) -> Result<(), GfError> {
    let zero = Subspace::zero(field, L)?;
    let mut spans: Vec<Subspace> = etig.vertex_spans.iter().map(|s| s.clone().unwrap_or_else(|| zero.clone())).collect();
    let mut sequence: Vec<usize> = Vec::new();
    for &(a, b) in order.unwrap_or(&[]) {
        let (a, b) = (a.min(b), a.max(b));
        if let Some(e) = etig.edges.iter().position(|e| e.a == a && e.b == b) {
            if !sequence.contains(&e) {
                sequence.push(e);
            }
        }
    }
    let rest: Vec<usize> = (0..etig.edges.len()).filter(|e| !sequence.contains(e)).collect();
    sequence.extend(rest);
    for e in sequence {
        if etig.edges[e].vector.is_some() {
            continue;
        }
        let (a, b) = (etig.edges[e].a, etig.edges[e].b);
        let v = match (spans[a].dim() == 2, spans[b].dim() == 2) {
            (false, false) => random_nonzero(field, L, rng)?,
            (true, false) => sample_nonzero(&spans[a], rng)?,
            (false, true) => sample_nonzero(&spans[b], rng)?,
            (true, true) => sample_nonzero(&spans[a].intersect(&spans[b])?, rng)?,
        };
        spans[a] = spans[a].extend(&v)?;
        spans[b] = spans[b].extend(&v)?;
        etig.edges[e].vector = Some(v);
    }
    etig.vertex_spans = spans.into_iter().map(Some).collect();
    Ok(())
}

/// A random plane containing `within` (dimension 0, 1 or 2).
fn plane_through<R: Rng + ?Sized>(within: &Subspace, rng: &mut R) -> Result<Subspace, GfError> {
    let mut s = within.clone();
    while s.dim() < 2 {
        let v = sample_outside(&s, rng)?;
        s = s.extend(&v)?;
    }
    Ok(s)
}

/// Message vectors from an assigned intersection graph: intersections take
/// their edge's vector, every set fills in from its plane, and all other
/// messages are random.
pub fn assign_message_vectors<R: Rng + ?Sized>(
    pc: &Problem,
    xsets: &[MessageSet],
    etig: &Etig,
    field: Field,
    rng: &mut R,
) -> Result<PrecodingAssignment, ConstructError> {
    let report = sufficiency_conditions(pc)?;
    if !report.holds() {
        return Err(ConstructError::ConditionViolation(Box::new(report)));
    }
    let mut vectors: Vec<Option<FVector>> = vec![None; pc.n()];
    for e in &etig.edges {
        let v = e.vector.ok_or(GfError::ZeroSubspace)?;
        for &m in xsets[e.a].intersection(&xsets[e.b]).iter() {
            vectors[m] = Some(v);
        }
    }
    for (i, set) in xsets.iter().enumerate() {
        let incident: Vec<FVector> =
            etig.edges.iter().filter(|e| e.a == i || e.b == i).filter_map(|e| e.vector).collect();
        let plane = plane_through(&span_of(field, L, &incident)?, rng)?;
        for &m in set.iter() {
            if vectors[m].is_none() {
                vectors[m] = Some(sample_nonzero(&plane, rng)?);
            }
        }
    }
    let vectors = vectors
        .into_iter()
        .map(|v| match v {
            Some(v) => Ok(v),
            None => random_nonzero(field, L, rng),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PrecodingAssignment::new(field, L, vectors).expect("all vectors have length 3"))
}

#[derive(Clone, Debug)]
pub struct ConstructConfig {
    pub q: u32,
    pub seed: u64,
    pub retries: usize,
    pub policies: Vec<ContractionPolicy>,
    /// Intersection-graph edges to process first (vertex index pairs).
    pub etig_order: Option<Vec<(usize, usize)>>,
}

impl Default for ConstructConfig {
    fn default() -> Self {
        ConstructConfig { q: 101, seed: 0, retries: 32, policies: vec![ContractionPolicy::Lexicographic], etig_order: None }
    }
}

impl ConstructConfig {
    /// The lexicographic policy followed by `extra` seeded random ones.
    pub fn policies_from_seed(seed: u64, extra: usize) -> Vec<ContractionPolicy> {
        std::iter::once(ContractionPolicy::Lexicographic)
            .chain((0..extra as u64).map(|i| ContractionPolicy::Random { seed: seed.wrapping_add(i) }))
            .collect()
    }
}

/// A verified code and how it was obtained.
#[derive(Clone, Debug, Serialize)]
pub struct Construction {
    pub code: PrecodingAssignment,
    pub seed: u64,
    pub policy: ContractionPolicy,
    pub retries_used: usize,
    pub contraction: ContractionMap,
    pub conditions: ConditionReport,
}

/// Random generator for one attempt: the seed picks the key, the attempt the stream.
pub fn attempt_rng(seed: u64, attempt: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(attempt as u64);
    rng
}

/// Tries each policy in turn; on the first contraction meeting the
/// conditions, draws codes until one verifies, and lifts it.
pub fn construct_rate_third(p: &Problem, config: &ConstructConfig) -> Result<Construction, ConstructError> {
    let field = Field::new(config.q as u64)?;
    let mut reports = Vec::new();
    let mut qualifying = 0;
    for &policy in &config.policies {
        let (pc, map) = maximal_contraction(p, policy);
        let report = sufficiency_conditions(&pc)?;
        if !report.holds() {
            reports.push((policy, report));
            continue;
        }
        qualifying += 1;
        let xsets = report.xtype2_sets.clone();
        for attempt in 0..config.retries {
            let mut rng = attempt_rng(config.seed, attempt);
            let mut etig = build_etig(&xsets);
            assign_etig_vectors(&mut etig, field, &mut rng, config.etig_order.as_deref())?;
            let code = assign_message_vectors(&pc, &xsets, &etig, field, &mut rng)?;
            if !verify_code(&pc, &code).expect("code covers the contraction").is_empty() {
                continue;
            }
            let lifted = lift_code(&code, &map).expect("code indexes the contraction");
            if !verify_code(p, &lifted).expect("lifted code covers the problem").is_empty() {
                return Err(ConstructError::LiftingFailed);
            }
            return Ok(Construction {
                code: lifted,
                seed: config.seed,
                policy,
                retries_used: attempt + 1,
                contraction: map,
                conditions: report,
            });
        }
    }
    if qualifying == 0 {
        Err(ConstructError::NoQualifyingContraction { reports })
    } else {
        Err(ConstructError::RetryExhausted { policies: qualifying, retries: config.retries })
    }
}

/// How one alignment set meets the fork/cycle and clean type-2 conditions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AlignmentShape {
    pub alignment_set: MessageSet,
    #[serde(flatten)]
    pub flags: ForkCycle,
    /// Not both a fork and a cycle.
    pub fork_or_cycle_only: bool,
    /// A type-2 set without restricted internal conflicts.
    pub clean_type2: bool,
}

impl AlignmentShape {
    pub fn ok(&self) -> bool {
        self.fork_or_cycle_only || self.clean_type2
    }
}

/// Per alignment set: whether it avoids having both forks and cycles, or is
/// a type-2 set without restricted internal conflicts. A check only; codes
/// are always built through contraction.
pub fn alignment_shapes(p: &Problem) -> Vec<AlignmentShape> {
    let type2: Vec<MessageSet> = type2_sets(p).into_iter().map(|m| m.members).collect();
    alignment_sets(p)
        .0
        .into_iter()
        .map(|set| {
            let flags = fork_cycle_flags(p, &set).expect("set comes from the problem");
            let clean_type2 = type2.contains(&set) && restricted_internal_conflicts(p, &set).is_empty();
            AlignmentShape { fork_or_cycle_only: !(flags.has_fork && flags.has_cycle), clean_type2, flags, alignment_set: set }
        })
        .collect()
}

/// True iff every alignment set satisfies one of the two shape conditions.
pub fn alignment_shape_predicate(p: &Problem) -> bool {
    alignment_shapes(p).iter().all(AlignmentShape::ok)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, InstanceBuilder};
    use crate::gf::rank;

    #[test]
    fn triangle_construction() {
        let p = fixtures::p_tri();
        let c = construct_rate_third(&p, &ConstructConfig { seed: 7, ..Default::default() }).unwrap();
        assert!(verify_code(&p, &c.code).unwrap().is_empty());
        assert!(c.conditions.xtype2_sets.is_empty());
    }

    #[test]
    fn double_stic_does_not_construct() {
        let r = construct_rate_third(&fixtures::p_2stic(), &ConstructConfig::default());
        assert!(matches!(r, Err(ConstructError::NoQualifyingContraction { .. }) | Err(ConstructError::RetryExhausted { .. })));
    }

    #[test]
    fn six_set_arrangement_in_stated_order() {
        let p = fixtures::six_set_arrangement();
        let report = sufficiency_conditions(&p).unwrap();
        assert!(report.holds(), "{report:?}");
        let order = [(0, 1), (0, 2), (0, 3), (0, 4), (1, 4), (1, 2), (2, 4)];
        let f = Field::new(101).unwrap();
        let mut etig = build_etig(&report.xtype2_sets);
        let mut rng = attempt_rng(3, 0);
        assign_etig_vectors(&mut etig, f, &mut rng, Some(&order)).unwrap();
        let v = |a: usize, b: usize| etig.edge(a, b).unwrap().vector.unwrap();
        let plane01 = span_of(f, 3, &[v(0, 1), v(0, 2)]).unwrap();
        assert_eq!(plane01.dim(), 2);
        assert!(plane01.contains(&v(0, 3)).unwrap() && plane01.contains(&v(0, 4)).unwrap());
        for i in 0..6 {
            assert!(etig.vertex_spans[i].as_ref().unwrap().dim() <= 2);
        }
        let code = assign_message_vectors(&p, &report.xtype2_sets, &etig, f, &mut rng).unwrap();
        assert!(code.dim_of(&report.xtype2_sets[0]).unwrap() <= 2);
    }

    #[test]
    fn star_edges_stay_in_a_plane() {
        let f = Field::new(101).unwrap();
        let sets: Vec<MessageSet> = vec![
            MessageSet::from_labels(&[1, 2, 3]),
            MessageSet::from_labels(&[1, 4]),
            MessageSet::from_labels(&[2, 5]),
            MessageSet::from_labels(&[3, 6]),
        ];
        for seed in 0..100 {
            let mut etig = build_etig(&sets);
            assign_etig_vectors(&mut etig, f, &mut attempt_rng(seed, 0), None).unwrap();
            let vs: Vec<FVector> = etig.edges.iter().map(|e| e.vector.unwrap()).collect();
            assert!(rank(f, 3, &vs).unwrap() <= 2);
        }
    }

    #[test]
    fn condition_b_violation_is_reported() {
        let (mut b, _) = fixtures::fan_arrangement(&fixtures::FanLayout { sets: 3, shared: vec![], private: vec![0; 3] });
        let hub = b.fresh();
        // one port shared by all three fans
        let bases = [(1, 2), (3, 4), (5, 6)];
        for (x, y) in bases {
            b.interfere_at_dummy(&[x, y, hub]);
            b.conflict(hub, x).conflict(hub, y);
        }
        b.demand_all_undemanded();
        let report = sufficiency_conditions(&b.build()).unwrap();
        assert_eq!(report.triple_overlaps.len(), 1);
        assert!(!report.holds());
    }

    #[test]
    fn shapes() {
        assert!(alignment_shape_predicate(&fixtures::p_tri()));
        // a triangle with a pendant edge: fork and cycle, not type-2
        let mut b = InstanceBuilder::new(4);
        b.interfere_at_dummy(&[1, 2]);
        b.interfere_at_dummy(&[2, 3]);
        b.interfere_at_dummy(&[1, 3]);
        b.interfere_at_dummy(&[3, 4]);
        b.demand_all_undemanded();
        assert!(!alignment_shape_predicate(&b.build()));
    }

    #[test]
    fn non_maximal_input_is_rejected() {
        assert!(matches!(sufficiency_conditions(&fixtures::split_port()), Err(ConstructError::NotMaximal(..))));
    }
}
