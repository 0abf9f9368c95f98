//! Structural objects derived from a problem: the alignment graph, triangular
//! interfering sets and their unions, STIC/SPIC configurations, and the
//! intersection graph of extended type-2 sets.

mod dot;
mod etig;
mod patterns;
mod triangles;

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::model::{serialize_label, MessageSet, Problem};

pub use dot::export_dot;
pub use etig::{build_etig, Etig, EtigEdge};
pub use patterns::{detect_spic, detect_stic, pattern_automorphisms, spic_alignment_sets, PatternSpec};
pub use triangles::{triangular_sets, type2_sets, xtype2_sets};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error("{0} is not an alignment set of the problem")]
    NotAnAlignmentSet(MessageSet),
}

/// Evidence, checkable against the problem, for one interference or conflict.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Witness {
    /// `members ⊆ Interf_demand(receiver)`.
    Interference {
        #[serde(serialize_with = "serialize_label")]
        receiver: usize,
        #[serde(serialize_with = "serialize_label")]
        demand: usize,
        members: MessageSet,
    },
    /// `interferer ∈ Interf_demand(receiver)`, so the two messages conflict.
    Conflict {
        #[serde(serialize_with = "serialize_label")]
        receiver: usize,
        #[serde(serialize_with = "serialize_label")]
        demand: usize,
        #[serde(serialize_with = "serialize_label")]
        interferer: usize,
    },
}

impl Witness {
    /// Re-checks the witness against `p`.
    pub fn holds(&self, p: &Problem) -> bool {
        match self {
            Witness::Interference { receiver, demand, members } => {
                *receiver < p.receivers().len() && members.is_subset(&p.interfering_set(*receiver, *demand))
            }
            Witness::Conflict { receiver, demand, interferer } => {
                *receiver < p.receivers().len() && p.interfering_set(*receiver, *demand).contains(interferer)
            }
        }
    }

    /// The (unordered) conflicting pair, for conflict witnesses.
    pub fn pair(&self) -> Option<(usize, usize)> {
        match self {
            Witness::Conflict { demand, interferer, .. } => {
                Some(((*demand).min(*interferer), (*demand).max(*interferer)))
            }
            Witness::Interference { .. } => None,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Witness::Interference { receiver, demand, members } => {
                format!("{members} interferes at receiver {} (demand {})", receiver + 1, demand + 1)
            }
            Witness::Conflict { receiver, demand, interferer } => format!(
                "{} interferes at receiver {} (demand {})",
                interferer + 1,
                receiver + 1,
                demand + 1
            ),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternKind {
    Triangular,
    Type2,
    Xtype2,
    Stic,
    Spic,
    SpicAlignment,
}

impl PatternKind {
    pub fn name(self) -> &'static str {
        match self {
            PatternKind::Triangular => "triangular interfering set",
            PatternKind::Type2 => "type-2 alignment set",
            PatternKind::Xtype2 => "extended type-2 set",
            PatternKind::Stic => "STIC",
            PatternKind::Spic => "SPIC",
            PatternKind::SpicAlignment => "SPIC alignment set",
        }
    }
}

fn serialize_roles<S: serde::Serializer>(roles: &Option<Vec<usize>>, s: S) -> Result<S::Ok, S::Error> {
    match roles {
        Some(r) => s.collect_seq(r.iter().map(|m| m + 1)),
        None => s.serialize_none(),
    }
}

/// One detected configuration with its evidence.
///
/// Composite patterns (type-2, extended type-2, SPIC alignment sets) list the
/// matches they are built from in `parts`, in the order they were joined, and
/// carry the conflict witnesses that justify each join.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PatternMatch {
    pub kind: PatternKind,
    pub members: MessageSet,
    #[serde(serialize_with = "serialize_roles", skip_serializing_if = "Option::is_none")]
    pub role_map: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub parts: Vec<PatternMatch>,
    pub witnesses: Vec<Witness>,
}

impl PatternMatch {
    pub fn describe(&self) -> String {
        match &self.role_map {
            Some(r) => {
                let roles: Vec<String> = r.iter().map(|m| (m + 1).to_string()).collect();
                format!("{} {} (roles {})", self.kind.name(), self.members, roles.join(","))
            }
            None => format!("{} {}", self.kind.name(), self.members),
        }
    }

    /// Re-validates the match against `p`. `rate1_pairs` is only consulted for
    /// SPIC alignment sets.
    pub fn validate(&self, p: &Problem, rate1_pairs: &BTreeSet<(usize, usize)>) -> Result<(), String> {
        for w in &self.witnesses {
            if !w.holds(p) {
                return Err(format!("witness does not hold: {}", w.describe()));
            }
        }
        let conflict_witnessed = |a: usize, b: usize| {
            self.witnesses.iter().any(|w| w.pair() == Some((a.min(b), a.max(b))))
        };
        match self.kind {
            PatternKind::Triangular => {
                if self.members.len() != 3 {
                    return Err("triangular set must have three members".into());
                }
                let covered = self.witnesses.iter().any(|w| {
                    matches!(w, Witness::Interference { members, .. } if *members == self.members)
                });
                let v: Vec<usize> = self.members.iter().copied().collect();
                let conflict = [(v[0], v[1]), (v[0], v[2]), (v[1], v[2])]
                    .iter()
                    .any(|&(a, b)| conflict_witnessed(a, b));
                if !covered || !conflict {
                    return Err(format!("{} lacks interference or conflict evidence", self.members));
                }
            }
            PatternKind::Stic | PatternKind::Spic => {
                let spec = if self.kind == PatternKind::Stic { PatternSpec::stic() } else { PatternSpec::spic() };
                let roles = self.role_map.as_ref().ok_or("configuration without role map")?;
                let image: MessageSet = roles.iter().copied().collect();
                if image.len() != roles.len() || image != self.members {
                    return Err("role map is not injective onto the members".into());
                }
                spec.check(&ConflictStructure::new(p), roles)?;
            }
            PatternKind::Type2 | PatternKind::Xtype2 | PatternKind::SpicAlignment => {
                let union = self.parts.iter().fold(MessageSet::new(), |acc, part| acc.union(&part.members));
                if union != self.members || self.parts.is_empty() {
                    return Err("members are not the union of the parts".into());
                }
                for part in &self.parts {
                    part.validate(p, rate1_pairs)?;
                }
                // each part after the first must join what came before
                let mut acc = self.parts[0].members.clone();
                for part in &self.parts[1..] {
                    let joined = match self.kind {
                        PatternKind::Type2 => {
                            // adjacent to some earlier triangle through a conflicting pair
                            self.parts.iter().take_while(|q| !std::ptr::eq(*q, part)).any(|q| {
                                let i = q.members.intersection(&part.members);
                                let v: Vec<usize> = i.iter().copied().collect();
                                v.len() == 2 && conflict_witnessed(v[0], v[1])
                            })
                        }
                        PatternKind::Xtype2 => {
                            let i: Vec<usize> = acc.intersection(&part.members).iter().copied().collect();
                            pairs_of(&i).any(|(a, b)| conflict_witnessed(a, b))
                        }
                        _ => self.parts.iter().take_while(|q| !std::ptr::eq(*q, part)).any(|q| {
                            let i: Vec<usize> = q.members.intersection(&part.members).iter().copied().collect();
                            pairs_of(&i).any(|pr| rate1_pairs.contains(&pr))
                        }),
                    };
                    if !joined {
                        return Err(format!("part {} is not joined to the earlier parts", part.members));
                    }
                    acc = acc.union(&part.members);
                }
            }
        }
        Ok(())
    }
}

/// All unordered pairs `(min, max)` of distinct positions of `v`.
pub(crate) fn pairs_of(v: &[usize]) -> std::vec::IntoIter<(usize, usize)> {
    let mut out = Vec::with_capacity(v.len() * v.len().saturating_sub(1) / 2);
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            out.push((v[i].min(v[j]), v[i].max(v[j])));
        }
    }
    out.into_iter()
}

/// Conflict and alignment relations of a problem, precomputed once.
#[derive(Clone, Debug)]
pub struct ConflictStructure {
    n: usize,
    pub hyperedges: Vec<crate::model::ConflictHyperedge>,
    conflict: Vec<Vec<bool>>,
    align: Vec<Vec<bool>>,
    conflict_witness: Vec<Vec<Option<(usize, usize, usize)>>>,
}

impl ConflictStructure {
    pub fn new(p: &Problem) -> Self {
        let n = p.n();
        let hyperedges = p.hyperedges();
        let mut conflict = vec![vec![false; n]; n];
        let mut align = vec![vec![false; n]; n];
        let mut conflict_witness = vec![vec![None; n]; n];
        for h in &hyperedges {
            let members: Vec<usize> = h.interference.iter().copied().collect();
            for &a in &members {
                conflict[a][h.demand] = true;
                conflict[h.demand][a] = true;
                if conflict_witness[a][h.demand].is_none() {
                    conflict_witness[a][h.demand] = Some((h.receiver, h.demand, a));
                    conflict_witness[h.demand][a] = Some((h.receiver, h.demand, a));
                }
            }
            for (a, b) in pairs_of(&members) {
                align[a][b] = true;
                align[b][a] = true;
            }
        }
        ConflictStructure { n, hyperedges, conflict, align, conflict_witness }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn conflicts(&self, a: usize, b: usize) -> bool {
        self.conflict[a][b]
    }

    pub fn aligned(&self, a: usize, b: usize) -> bool {
        self.align[a][b]
    }

    pub fn conflict_neighbours(&self, a: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&b| self.conflict[a][b])
    }

    pub fn conflict_witness(&self, a: usize, b: usize) -> Option<Witness> {
        self.conflict_witness[a][b].map(|(receiver, demand, interferer)| Witness::Conflict {
            receiver,
            demand,
            interferer,
        })
    }

    /// First interfering set containing `set` whose demand lies outside `avoid`.
    pub fn interference_witness(&self, set: &MessageSet, avoid: &MessageSet) -> Option<Witness> {
        self.hyperedges
            .iter()
            .find(|h| !avoid.contains(&h.demand) && set.is_subset(&h.interference))
            .map(|h| Witness::Interference { receiver: h.receiver, demand: h.demand, members: set.clone() })
    }

    /// Interfering set at a receiver demanding exactly `demand` that contains `set`.
    pub fn interference_at(&self, set: &MessageSet, demand: usize) -> Option<Witness> {
        self.hyperedges
            .iter()
            .find(|h| h.demand == demand && set.is_subset(&h.interference))
            .map(|h| Witness::Interference { receiver: h.receiver, demand: h.demand, members: set.clone() })
    }

    pub fn conflict_pairs(&self) -> BTreeSet<(usize, usize)> {
        (0..self.n)
            .flat_map(|a| (a + 1..self.n).filter(move |&b| self.conflict[a][b]).map(move |b| (a, b)))
            .collect()
    }

    /// Whether some conflicting pair lies inside `set`.
    pub fn has_internal_conflict(&self, set: &MessageSet) -> Option<(usize, usize)> {
        let v: Vec<usize> = set.iter().copied().collect();
        pairs_of(&v).find(|&(a, b)| self.conflict[a][b])
    }
}

/// The alignment graph: `a`–`b` whenever both interfere at one receiver.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AlignmentGraph {
    pub n: usize,
    #[serde(serialize_with = "serialize_pairs")]
    pub edges: BTreeSet<(usize, usize)>,
}

pub(crate) fn serialize_pairs<S: serde::Serializer>(pairs: &BTreeSet<(usize, usize)>, s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(pairs.iter().map(|&(a, b)| [a + 1, b + 1]))
}

impl AlignmentGraph {
    pub fn new(cs: &ConflictStructure) -> Self {
        let n = cs.n();
        let edges = (0..n)
            .flat_map(|a| (a + 1..n).filter(move |&b| cs.aligned(a, b)).map(move |b| (a, b)))
            .collect();
        AlignmentGraph { n, edges }
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == v || b == v).count()
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<MessageSet> {
        let mut uf = UnionFind::new(self.n);
        for &(a, b) in &self.edges {
            uf.union(a, b);
        }
        uf.classes().into_iter().map(|c| c.into_iter().collect()).collect()
    }
}

/// Alignment sets (connected components, singletons included) and the graph.
pub fn alignment_sets(p: &Problem) -> (Vec<MessageSet>, AlignmentGraph) {
    let g = AlignmentGraph::new(&ConflictStructure::new(p));
    (g.components(), g)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ForkCycle {
    pub has_fork: bool,
    pub has_cycle: bool,
}

/// Whether the alignment set `aset` has a vertex of degree ≥ 3 and whether it
/// contains a cycle.
pub fn fork_cycle_flags(p: &Problem, aset: &MessageSet) -> Result<ForkCycle, StructureError> {
    let (sets, g) = alignment_sets(p);
    if !sets.contains(aset) {
        return Err(StructureError::NotAnAlignmentSet(aset.clone()));
    }
    let edges = g.edges.iter().filter(|(a, _)| aset.contains(a)).count();
    Ok(ForkCycle {
        has_fork: aset.iter().any(|&v| g.degree(v) >= 3),
        has_cycle: edges >= aset.len(),
    })
}

/// A conflict between two messages of one alignment set of a restricted
/// problem, reported in the original labels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InternalConflict {
    pub alignment_set: MessageSet,
    #[serde(serialize_with = "serialize_label")]
    pub a: usize,
    #[serde(serialize_with = "serialize_label")]
    pub b: usize,
    pub witness: Witness,
}

/// Conflicts inside alignment sets of the problem restricted to `subset`.
pub fn restricted_internal_conflicts(p: &Problem, subset: &MessageSet) -> Vec<InternalConflict> {
    let Ok((r, back)) = p.restrict(subset) else { return Vec::new() };
    let receiver_back: Vec<usize> = p
        .receivers()
        .iter()
        .enumerate()
        .filter(|(_, rc)| !rc.demands.is_disjoint(subset))
        .map(|(j, _)| j)
        .collect();
    let cs = ConflictStructure::new(&r);
    let mut out = Vec::new();
    for set in AlignmentGraph::new(&cs).components() {
        let v: Vec<usize> = set.iter().copied().collect();
        for (a, b) in pairs_of(&v) {
            if let Some(Witness::Conflict { receiver, demand, interferer }) = cs.conflict_witness(a, b) {
                out.push(InternalConflict {
                    alignment_set: set.map(&back),
                    a: back[a],
                    b: back[b],
                    witness: Witness::Conflict {
                        receiver: receiver_back[receiver],
                        demand: back[demand],
                        interferer: back[interferer],
                    },
                });
            }
        }
    }
    out
}

/// Everything the detectors find on one problem.
#[derive(Clone, Debug, Serialize)]
pub struct PatternInventory {
    pub triangular: Vec<PatternMatch>,
    pub type2: Vec<PatternMatch>,
    pub xtype2: Vec<PatternMatch>,
    pub stic: Vec<PatternMatch>,
    pub spic: Vec<PatternMatch>,
    pub spic_alignment: Vec<PatternMatch>,
    /// Pairs known to span two dimensions: conflicts plus SPIC diagonals.
    #[serde(serialize_with = "serialize_pairs")]
    pub rate1_infeasible_pairs: BTreeSet<(usize, usize)>,
}

impl PatternInventory {
    pub fn detect(p: &Problem) -> Self {
        let cs = ConflictStructure::new(p);
        let triangular = triangles::triangular_with(&cs);
        let type2 = triangles::type2_with(&cs, &triangular);
        let xtype2 = triangles::xtype2_with(&cs, &type2);
        let stic = patterns::detect_with(&cs, &PatternSpec::stic());
        let spic = patterns::detect_with(&cs, &PatternSpec::spic());
        let mut pairs = cs.conflict_pairs();
        for m in &spic {
            let r = m.role_map.as_ref().expect("SPIC matches carry role maps");
            for (a, b) in [(r[0], r[3]), (r[1], r[4])] {
                pairs.insert((a.min(b), a.max(b)));
            }
        }
        let spic_alignment = patterns::spic_alignment_from(&spic, &pairs);
        PatternInventory { triangular, type2, xtype2, stic, spic, spic_alignment, rate1_infeasible_pairs: pairs }
    }

    pub fn all(&self) -> impl Iterator<Item = &PatternMatch> {
        self.triangular
            .iter()
            .chain(&self.type2)
            .chain(&self.xtype2)
            .chain(&self.stic)
            .chain(&self.spic)
            .chain(&self.spic_alignment)
    }
}

/// Minimal union-find with deterministic class ordering.
#[derive(Clone, Debug)]
pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    pub fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut y = x;
        while self.parent[y] != r {
            let next = self.parent[y];
            self.parent[y] = r;
            y = next;
        }
        r
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }

    /// Classes as sorted index lists, ordered by smallest element.
    pub fn classes(&mut self) -> Vec<Vec<usize>> {
        let n = self.parent.len();
        let mut by_root: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for x in 0..n {
            let r = self.find(x);
            by_root.entry(r).or_default().push(x);
        }
        let mut out: Vec<Vec<usize>> = by_root.into_values().collect();
        out.sort_by_key(|c| c[0]);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, InstanceBuilder};

    fn pairs(list: &[(usize, usize)]) -> BTreeSet<(usize, usize)> {
        list.iter().map(|&(a, b)| (a - 1, b - 1)).collect()
    }

    #[test]
    fn alignment_of_small_fixtures() {
        let (sets, g) = alignment_sets(&fixtures::p_pair());
        assert!(g.edges.is_empty());
        assert_eq!(sets, vec![MessageSet::from_labels(&[1]), MessageSet::from_labels(&[2])]);

        let (sets, g) = alignment_sets(&fixtures::p_tri());
        assert_eq!(g.edges, pairs(&[(1, 2), (1, 3), (2, 3)]));
        assert_eq!(sets, vec![MessageSet::from_labels(&[1, 2, 3])]);
    }

    #[test]
    fn stic_alignment_edges() {
        let (_, g) = alignment_sets(&fixtures::p_stic());
        for e in pairs(&[(1, 2), (1, 3), (2, 3), (2, 4), (2, 5), (4, 5), (3, 5), (3, 6), (5, 6)]) {
            assert!(g.edges.contains(&e), "missing {e:?}");
        }
    }

    #[test]
    fn fork_and_cycle_flags() {
        let p = fixtures::p_tri();
        let flags = fork_cycle_flags(&p, &p.all_messages()).unwrap();
        assert_eq!(flags, ForkCycle { has_fork: false, has_cycle: true });

        let mut b = InstanceBuilder::new(3);
        b.interfere_at_dummy(&[1, 2]);
        b.interfere_at_dummy(&[2, 3]);
        let path = b.build();
        let flags = fork_cycle_flags(&path, &MessageSet::from_labels(&[1, 2, 3])).unwrap();
        assert_eq!(flags, ForkCycle { has_fork: false, has_cycle: false });

        let mut b = InstanceBuilder::new(4);
        for leaf in 2..=4 {
            b.interfere_at_dummy(&[1, leaf]);
        }
        let star = b.build();
        let flags = fork_cycle_flags(&star, &MessageSet::from_labels(&[1, 2, 3, 4])).unwrap();
        assert_eq!(flags, ForkCycle { has_fork: true, has_cycle: false });

        assert!(fork_cycle_flags(&star, &MessageSet::from_labels(&[1, 2])).is_err());
    }

    #[test]
    fn spic_core_has_no_restricted_internal_conflicts_but_spoiled_strip_does() {
        let p = fixtures::p_spic();
        assert!(restricted_internal_conflicts(&p, &MessageSet::from_labels(&[1, 2, 3, 4])).is_empty());
        let (name, spoiled) = fixtures::type2_suite().into_iter().find(|(n, _)| n == "strip-1-spoiled").unwrap();
        let found = restricted_internal_conflicts(&spoiled, &MessageSet::from_labels(&[1, 2, 3]));
        assert_eq!(found.len(), 1, "{name}");
        assert_eq!((found[0].a, found[0].b), (1, 2));
        assert!(found[0].witness.holds(&spoiled));
    }
}
