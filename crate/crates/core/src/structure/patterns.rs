//! STIC and SPIC detection by exact role matching, plus SPIC alignment sets.
//!
//! A configuration is described by roles `0..r` and three kinds of
//! requirement: triples that interfere at a receiver demanding a message
//! outside the image, pairs that interfere at a receiver demanding a given
//! role, and extra conflicts. The conflict relation on the image must equal the
//! one the requirements imply; conflicts with messages outside the image are
//! allowed.

use std::collections::{BTreeSet, VecDeque};

use super::{pairs_of, ConflictStructure, PatternKind, PatternMatch, UnionFind, Witness};
use crate::model::{MessageSet, Problem};

#[derive(Clone, Debug)]
pub struct PatternSpec {
    pub kind: PatternKind,
    pub roles: usize,
    /// Role triples interfering at a receiver whose demand is outside the image.
    pub external: Vec<[usize; 3]>,
    /// Role pairs interfering at a receiver demanding the given role.
    pub at_role: Vec<([usize; 2], usize)>,
    /// Conflicts required beyond those implied by `at_role`.
    pub extra_conflicts: Vec<[usize; 2]>,
}

impl PatternSpec {
    /// Six roles: triples {1,2,3},{2,4,5},{3,5,6}; {1,2},{2,4} at 6;
    /// {1,3},{3,6} at 4; {4,5},{5,6} at 1.
    pub fn stic() -> Self {
        PatternSpec {
            kind: PatternKind::Stic,
            roles: 6,
            external: vec![[0, 1, 2], [1, 3, 4], [2, 4, 5]],
            at_role: vec![([0, 1], 5), ([1, 3], 5), ([0, 2], 3), ([2, 5], 3), ([3, 4], 0), ([4, 5], 0)],
            extra_conflicts: vec![],
        }
    }

    /// Five roles: triples {1,2,3},{1,3,4},{3,4,5},{2,3,5}; {1,2} at 5;
    /// {4,5} at 2; 1 and 3 conflict.
    pub fn spic() -> Self {
        PatternSpec {
            kind: PatternKind::Spic,
            roles: 5,
            external: vec![[0, 1, 2], [0, 2, 3], [2, 3, 4], [1, 2, 4]],
            at_role: vec![([0, 1], 4), ([3, 4], 1)],
            extra_conflicts: vec![[0, 2]],
        }
    }

    /// Conflicting role pairs `(a, b)`, `a < b`.
    pub fn conflicts(&self) -> BTreeSet<(usize, usize)> {
        let mut out = BTreeSet::new();
        for &(pair, r) in &self.at_role {
            for x in pair {
                out.insert((x.min(r), x.max(r)));
            }
        }
        for &[a, b] in &self.extra_conflicts {
            out.insert((a.min(b), a.max(b)));
        }
        out
    }

    /// Role pairs that must be alignment edges.
    fn aligned(&self) -> BTreeSet<(usize, usize)> {
        let mut out = BTreeSet::new();
        for t in &self.external {
            out.extend(pairs_of(t));
        }
        for (pair, _) in &self.at_role {
            out.extend(pairs_of(pair));
        }
        out
    }

    /// Checks every requirement for the role map `roles` (role -> message)
    /// and returns the witnesses.
    pub fn check(&self, cs: &ConflictStructure, roles: &[usize]) -> Result<Vec<Witness>, String> {
        if roles.len() != self.roles {
            return Err(format!("expected {} roles", self.roles));
        }
        let image: MessageSet = roles.iter().copied().collect();
        if image.len() != roles.len() || roles.iter().any(|&m| m >= cs.n()) {
            return Err("role map is not injective".into());
        }
        let want = self.conflicts();
        let mut witnesses = Vec::new();
        for a in 0..self.roles {
            for b in a + 1..self.roles {
                let has = cs.conflicts(roles[a], roles[b]);
                if has != want.contains(&(a, b)) {
                    return Err(format!(
                        "conflict between {} and {} is {}",
                        roles[a] + 1,
                        roles[b] + 1,
                        if has { "unexpected" } else { "missing" }
                    ));
                }
                if has {
                    witnesses.push(cs.conflict_witness(roles[a], roles[b]).expect("conflict has a witness"));
                }
            }
        }
        for t in &self.external {
            let set: MessageSet = t.iter().map(|&r| roles[r]).collect();
            let w = cs
                .interference_witness(&set, &image)
                .ok_or_else(|| format!("{set} does not interfere at an outside receiver"))?;
            witnesses.push(w);
        }
        for &(pair, r) in &self.at_role {
            let set: MessageSet = pair.iter().map(|&x| roles[x]).collect();
            let w = cs
                .interference_at(&set, roles[r])
                .ok_or_else(|| format!("{set} does not interfere at a receiver demanding {}", roles[r] + 1))?;
            witnesses.push(w);
        }
        Ok(witnesses)
    }

    /// Search order: breadth-first over the role conflict graph from the
    /// highest-degree role, so most roles are drawn from conflict neighbours.
    fn search_order(&self) -> Vec<(usize, Option<usize>)> {
        let conflicts = self.conflicts();
        let degree = |r: usize| conflicts.iter().filter(|&&(a, b)| a == r || b == r).count();
        let mut order: Vec<(usize, Option<usize>)> = Vec::new();
        let mut placed = vec![false; self.roles];
        while order.len() < self.roles {
            let start = (0..self.roles).filter(|&r| !placed[r]).max_by_key(|&r| (degree(r), usize::MAX - r)).unwrap();
            placed[start] = true;
            let mut queue = VecDeque::from([start]);
            order.push((start, None));
            while let Some(r) = queue.pop_front() {
                for s in 0..self.roles {
                    if !placed[s] && conflicts.contains(&(r.min(s), r.max(s))) {
                        placed[s] = true;
                        order.push((s, Some(r)));
                        queue.push_back(s);
                    }
                }
            }
        }
        order
    }
}

/// All role permutations preserving every requirement of `spec`.
pub fn pattern_automorphisms(spec: &PatternSpec) -> Vec<Vec<usize>> {
    let norm3 = |t: [usize; 3]| {
        let mut t = t;
        t.sort();
        t
    };
    let externals: BTreeSet<[usize; 3]> = spec.external.iter().map(|&t| norm3(t)).collect();
    let at_role: BTreeSet<((usize, usize), usize)> =
        spec.at_role.iter().map(|&([a, b], r)| ((a.min(b), a.max(b)), r)).collect();
    let conflicts = spec.conflicts();
    let mut out = Vec::new();
    let mut perm: Vec<usize> = (0..spec.roles).collect();
    permutations(&mut perm, 0, &mut |tau| {
        let ext_ok = externals.iter().all(|t| externals.contains(&norm3([tau[t[0]], tau[t[1]], tau[t[2]]])));
        let at_ok = at_role.iter().all(|&((a, b), r)| {
            let (x, y) = (tau[a], tau[b]);
            at_role.contains(&((x.min(y), x.max(y)), tau[r]))
        });
        let c_ok = conflicts.iter().all(|&(a, b)| {
            let (x, y) = (tau[a], tau[b]);
            conflicts.contains(&(x.min(y), x.max(y)))
        });
        if ext_ok && at_ok && c_ok {
            out.push(tau.to_vec());
        }
    });
    out.sort();
    out
}

fn permutations(v: &mut Vec<usize>, k: usize, f: &mut dyn FnMut(&[usize])) {
    if k == v.len() {
        f(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permutations(v, k + 1, f);
        v.swap(k, i);
    }
}

/// Lexicographically smallest role map in the automorphism orbit of `roles`.
pub(crate) fn canonical_roles(autos: &[Vec<usize>], roles: &[usize]) -> Vec<usize> {
    autos
        .iter()
        .map(|tau| tau.iter().map(|&t| roles[t]).collect::<Vec<usize>>())
        .min()
        .unwrap_or_else(|| roles.to_vec())
}

/// All STIC configurations, one role map per automorphism orbit.
pub fn detect_stic(p: &Problem) -> Vec<PatternMatch> {
    detect_with(&ConflictStructure::new(p), &PatternSpec::stic())
}

/// All SPIC configurations, one role map per automorphism orbit.
pub fn detect_spic(p: &Problem) -> Vec<PatternMatch> {
    detect_with(&ConflictStructure::new(p), &PatternSpec::spic())
}

pub(crate) fn detect_with(cs: &ConflictStructure, spec: &PatternSpec) -> Vec<PatternMatch> {
    let order = spec.search_order();
    let conflicts = spec.conflicts();
    let aligned = spec.aligned();
    let autos = pattern_automorphisms(spec);
    let mut found: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut roles = vec![usize::MAX; spec.roles];
    search(cs, spec, &order, &conflicts, &aligned, 0, &mut roles, &mut |roles| {
        found.insert(canonical_roles(&autos, roles));
    });
    found
        .into_iter()
        .map(|roles| {
            let witnesses = spec.check(cs, &roles).expect("canonical representative is a match");
            PatternMatch {
                kind: spec.kind,
                members: roles.iter().copied().collect(),
                role_map: Some(roles),
                parts: Vec::new(),
                witnesses,
            }
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn search(
    cs: &ConflictStructure,
    spec: &PatternSpec,
    order: &[(usize, Option<usize>)],
    conflicts: &BTreeSet<(usize, usize)>,
    aligned: &BTreeSet<(usize, usize)>,
    depth: usize,
    roles: &mut Vec<usize>,
    emit: &mut dyn FnMut(&[usize]),
) {
    if depth == order.len() {
        if spec.check(cs, roles).is_ok() {
            emit(roles);
        }
        return;
    }
    let (role, anchor) = order[depth];
    let candidates: Vec<usize> = match anchor {
        Some(a) => cs.conflict_neighbours(roles[a]).collect(),
        None => (0..cs.n()).collect(),
    };
    'next: for m in candidates {
        for &(r, _) in &order[..depth] {
            let other = roles[r];
            if other == m {
                continue 'next;
            }
            let key = (r.min(role), r.max(role));
            if cs.conflicts(m, other) != conflicts.contains(&key) {
                continue 'next;
            }
            if aligned.contains(&key) && !cs.aligned(m, other) {
                continue 'next;
            }
        }
        roles[role] = m;
        search(cs, spec, order, conflicts, aligned, depth + 1, roles, emit);
        roles[role] = usize::MAX;
    }
}

/// Classes of SPIC matches connected by adjacency: two matches are adjacent
/// when their images share a pair from `rate1_infeasible_pairs`.
pub fn spic_alignment_sets(p: &Problem, rate1_infeasible_pairs: &BTreeSet<(usize, usize)>) -> Vec<PatternMatch> {
    spic_alignment_from(&detect_spic(p), rate1_infeasible_pairs)
}

pub(crate) fn spic_alignment_from(spics: &[PatternMatch], pairs: &BTreeSet<(usize, usize)>) -> Vec<PatternMatch> {
    let adjacent = |a: &PatternMatch, b: &PatternMatch| {
        let shared: Vec<usize> = a.members.intersection(&b.members).iter().copied().collect();
        pairs_of(&shared).any(|pr| pairs.contains(&pr))
    };
    let mut uf = UnionFind::new(spics.len());
    for i in 0..spics.len() {
        for j in i + 1..spics.len() {
            if adjacent(&spics[i], &spics[j]) {
                uf.union(i, j);
            }
        }
    }
    let mut out = Vec::new();
    for class in uf.classes() {
        let mut order = vec![class[0]];
        let mut rest: Vec<usize> = class[1..].to_vec();
        while !rest.is_empty() {
            let pos = rest
                .iter()
                .position(|&j| order.iter().any(|&i| adjacent(&spics[i], &spics[j])))
                .expect("class is connected");
            order.push(rest.remove(pos));
        }
        let members = order.iter().fold(MessageSet::new(), |acc, &i| acc.union(&spics[i].members));
        out.push(PatternMatch {
            kind: PatternKind::SpicAlignment,
            members,
            role_map: None,
            parts: order.iter().map(|&i| spics[i].clone()).collect(),
            witnesses: Vec::new(),
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, InstanceBuilder};

    fn labels(m: &PatternMatch) -> Vec<usize> {
        m.role_map.as_ref().unwrap().iter().map(|x| x + 1).collect()
    }

    fn orbit(spec: &PatternSpec, roles: &[usize]) -> BTreeSet<Vec<usize>> {
        pattern_automorphisms(spec).iter().map(|tau| tau.iter().map(|&t| roles[t]).collect()).collect()
    }

    #[test]
    fn automorphism_groups() {
        assert_eq!(pattern_automorphisms(&PatternSpec::stic()).len(), 6);
        // the (1,3) conflict breaks the (1,2)<->(4,5) swap
        assert_eq!(pattern_automorphisms(&PatternSpec::spic()), vec![vec![0, 1, 2, 3, 4]]);
    }

    #[test]
    fn single_configurations() {
        let stic = detect_stic(&fixtures::p_stic());
        assert_eq!(stic.len(), 1);
        assert!(orbit(&PatternSpec::stic(), &[1, 2, 3, 4, 5, 6]).contains(&labels(&stic[0])));
        let spic = detect_spic(&fixtures::p_spic());
        assert_eq!(spic.len(), 1);
        assert_eq!(labels(&spic[0]), vec![1, 2, 3, 4, 5]);
        assert!(detect_spic(&fixtures::p_stic()).is_empty());
        assert!(detect_stic(&fixtures::p_spic()).is_empty());
    }

    #[test]
    fn double_stic() {
        let p = fixtures::p_2stic();
        let found = detect_stic(&p);
        assert_eq!(found.len(), 2);
        let spec = PatternSpec::stic();
        let maps: Vec<Vec<usize>> = found.iter().map(labels).collect();
        assert!(maps.iter().any(|m| orbit(&spec, &[1, 2, 3, 4, 5, 6]).contains(m)));
        assert!(maps.iter().any(|m| orbit(&spec, &fixtures::STIC2_ROLES).contains(m)));
        for m in &found {
            m.validate(&p, &Default::default()).unwrap();
        }
    }

    #[test]
    fn chained_spics() {
        let p = fixtures::spic_chain();
        let found = detect_spic(&p);
        let maps: BTreeSet<Vec<usize>> = found.iter().map(labels).collect();
        let expected: BTreeSet<Vec<usize>> = fixtures::SPIC_CHAIN_ROLES.iter().map(|r| r.to_vec()).collect();
        assert_eq!(maps, expected);
    }

    #[test]
    fn spic_alignment_classes() {
        let single = fixtures::p_spic();
        let pairs = single.conflict_pairs();
        assert_eq!(spic_alignment_sets(&single, &pairs).len(), 1);

        let mut b = InstanceBuilder::new(10);
        b.spic([1, 2, 3, 4, 5]).spic([6, 7, 8, 9, 10]).demand_all_undemanded();
        let p = b.build();
        assert_eq!(spic_alignment_sets(&p, &p.conflict_pairs()).len(), 2);
    }
}
