use std::collections::{BTreeMap, BTreeSet};

use super::{Certificate, Reason, Rule, StrictRateFact, Verdict};
use crate::dims::DimSet;
use crate::model::{MessageSet, Problem};
use crate::structure::{restricted_internal_conflicts, ConflictStructure, PatternInventory, PatternKind, PatternMatch, Witness};

fn plane() -> DimSet {
    DimSet::only(2)
}

/// Fact list with deduplication on `(subset, dims)`; the first derivation wins.
struct FactBase {
    facts: Vec<StrictRateFact>,
    seen: BTreeSet<(MessageSet, DimSet)>,
    by_subset: BTreeMap<MessageSet, Vec<usize>>,
}

impl FactBase {
    fn new() -> Self {
        FactBase { facts: Vec::new(), seen: BTreeSet::new(), by_subset: BTreeMap::new() }
    }

    fn has(&self, subset: &MessageSet, dims: DimSet) -> bool {
        self.seen.contains(&(subset.clone(), dims))
    }

    fn push(&mut self, f: StrictRateFact) -> bool {
        if f.subset.is_empty() || f.allowed_dims.is_empty() || !self.seen.insert((f.subset.clone(), f.allowed_dims)) {
            return false;
        }
        self.by_subset.entry(f.subset.clone()).or_default().push(self.facts.len());
        self.facts.push(f);
        true
    }

    /// Intersection of all facts on `subset`.
    fn combined(&self, subset: &MessageSet) -> DimSet {
        self.by_subset
            .get(subset)
            .map(|ix| ix.iter().fold(DimSet::RATE_THIRD, |d, &i| d.intersect(self.facts[i].allowed_dims)))
            .unwrap_or(DimSet::RATE_THIRD)
    }
}

fn derived(subset: MessageSet, dims: DimSet, rule: Rule, premises: Vec<usize>) -> StrictRateFact {
    StrictRateFact { subset, allowed_dims: dims, rule, premises, witnesses: Vec::new(), pattern: None }
}

/// The facts a detected pattern implies, before any closure.
pub(crate) fn pattern_facts(m: &PatternMatch) -> Vec<(Rule, MessageSet, DimSet)> {
    let pick = |roles: &[usize], idx: &[usize]| -> MessageSet { idx.iter().map(|&i| roles[i - 1]).collect() };
    match m.kind {
        PatternKind::Triangular => vec![(Rule::TriangularSet, m.members.clone(), plane())],
        PatternKind::Type2 => vec![(Rule::Type2Set, m.members.clone(), plane())],
        PatternKind::Xtype2 => vec![(Rule::Xtype2Set, m.members.clone(), plane())],
        PatternKind::SpicAlignment => vec![(Rule::SpicAlignmentSet, m.members.clone(), plane())],
        PatternKind::Stic => {
            let r = m.role_map.as_deref().unwrap_or(&[]);
            if r.len() != 6 {
                return Vec::new();
            }
            vec![
                (Rule::SticInnerTriple, pick(r, &[2, 3, 5]), DimSet::from_dims(&[1, 3])),
                (Rule::SticTriangle, pick(r, &[1, 2, 3]), plane()),
                (Rule::SticTriangle, pick(r, &[2, 4, 5]), plane()),
                (Rule::SticTriangle, pick(r, &[3, 5, 6]), plane()),
            ]
        }
        PatternKind::Spic => {
            let r = m.role_map.as_deref().unwrap_or(&[]);
            if r.len() != 5 {
                return Vec::new();
            }
            vec![
                (Rule::SpicCore, pick(r, &[1, 2, 3, 4]), plane()),
                (Rule::SpicCore, pick(r, &[1, 2, 3, 4, 5]), plane()),
                (Rule::SpicDiagonal, pick(r, &[1, 4]), plane()),
                (Rule::SpicDiagonal, pick(r, &[2, 5]), plane()),
                (Rule::SpicAlignedPair, pick(r, &[4, 5]), DimSet::only(1)),
                (Rule::SpicAlignedPair, pick(r, &[1, 2]), DimSet::only(1)),
            ]
        }
    }
}

/// Facts read directly off conflicts, interfering sets and detected patterns.
pub fn seed_facts(p: &Problem, inventory: &PatternInventory) -> Vec<StrictRateFact> {
    let cs = ConflictStructure::new(p);
    let mut base = FactBase::new();
    for (a, b) in cs.conflict_pairs() {
        base.push(StrictRateFact {
            subset: [a, b].into_iter().collect(),
            allowed_dims: plane(),
            rule: Rule::ConflictingPair,
            premises: Vec::new(),
            witnesses: cs.conflict_witness(a, b).into_iter().collect(),
            pattern: None,
        });
    }
    let mut interfering: BTreeMap<(usize, Vec<usize>), Witness> = BTreeMap::new();
    for h in &cs.hyperedges {
        if h.interference.len() >= 2 {
            interfering.entry(h.interference.size_lex_key()).or_insert_with(|| Witness::Interference {
                receiver: h.receiver,
                demand: h.demand,
                members: h.interference.clone(),
            });
        }
    }
    for w in interfering.into_values() {
        let Witness::Interference { members, .. } = &w else { unreachable!() };
        base.push(StrictRateFact {
            subset: members.clone(),
            allowed_dims: DimSet::from_dims(&[1, 2]),
            rule: Rule::InterferingSet,
            premises: Vec::new(),
            witnesses: vec![w],
            pattern: None,
        });
    }
    for m in inventory.all() {
        for (rule, subset, dims) in pattern_facts(m) {
            base.push(StrictRateFact {
                subset,
                allowed_dims: dims,
                rule,
                premises: Vec::new(),
                witnesses: Vec::new(),
                pattern: Some(m.clone()),
            });
        }
    }
    base.facts
}

/// Closes `facts` under:
/// - stitching: two plane facts whose intersection contains a subset known
///   to span at least two dimensions are the same plane, so their union is;
/// - subset bounds: a subset of a fact spans at most its maximum;
/// - a subset of a plane that contains a two-dimensional subset is a plane;
/// - combination of facts on the same subset.
///
/// Subset rules only fire for subsets that already carry facts, which keeps
/// the closure finite and small.
pub fn stitch_closure(facts: Vec<StrictRateFact>, p: &Problem) -> Vec<StrictRateFact> {
    let _ = p;
    let mut base = FactBase::new();
    for f in facts {
        base.push(f);
    }
    loop {
        let before = base.facts.len();
        let snapshot = base.facts.len();
        let planes: Vec<usize> = (0..snapshot).filter(|&i| base.facts[i].allowed_dims == plane()).collect();
        // smallest witness first, for short certificates
        let mut wide: Vec<usize> = (0..snapshot).filter(|&i| base.facts[i].allowed_dims.min() >= Some(2)).collect();
        wide.sort_by_key(|&i| (base.facts[i].subset.len(), i));
        let find_wide = |base: &FactBase, within: &MessageSet| -> Option<usize> {
            wide.iter().copied().find(|&i| base.facts[i].subset.is_subset(within))
        };

        for (x, &i) in planes.iter().enumerate() {
            for &j in &planes[x + 1..] {
                let (a, b) = (&base.facts[i].subset, &base.facts[j].subset);
                if a.is_subset(b) || b.is_subset(a) {
                    continue;
                }
                let union = a.union(b);
                if base.has(&union, plane()) {
                    continue;
                }
                let shared = a.intersection(b);
                if shared.len() < 2 {
                    continue;
                }
                if let Some(w) = find_wide(&base, &shared) {
                    base.push(derived(union, plane(), Rule::Stitch, vec![i, j, w]));
                }
            }
        }

        let subsets: Vec<MessageSet> = base.by_subset.keys().cloned().collect();
        for i in 0..snapshot {
            let (sup, dims) = (base.facts[i].subset.clone(), base.facts[i].allowed_dims);
            let Some(top) = dims.max().filter(|&m| m < 3) else { continue };
            for sub in subsets.iter().filter(|s| s.len() < sup.len() && s.is_subset(&sup)) {
                let bound = DimSet::range(1, top);
                let current = base.combined(sub);
                if !current.is_subset(bound) && !base.has(sub, bound) {
                    base.push(derived(sub.clone(), bound, Rule::SubsetBound, vec![i]));
                }
                if dims == plane() && base.combined(sub) != plane() && !base.has(sub, plane()) {
                    if let Some(w) = find_wide(&base, sub) {
                        base.push(derived(sub.clone(), plane(), Rule::SubsetOfPlane, vec![i, w]));
                    }
                }
            }
        }

        let groups: Vec<Vec<usize>> = base.by_subset.values().filter(|v| v.len() >= 2).cloned().collect();
        for ix in groups {
            for (x, &i) in ix.iter().enumerate() {
                for &j in &ix[x + 1..] {
                    let (di, dj) = (base.facts[i].allowed_dims, base.facts[j].allowed_dims);
                    let d = di.intersect(dj);
                    if d != di && d != dj && !d.is_empty() {
                        let s = base.facts[i].subset.clone();
                        base.push(derived(s, d, Rule::Combined, vec![i, j]));
                    }
                }
            }
        }

        if base.facts.len() == before {
            break;
        }
    }
    base.facts
}

/// Indices of `roots` and everything they depend on, ascending.
fn premise_closure(facts: &[StrictRateFact], roots: &[usize]) -> Vec<usize> {
    let mut seen = BTreeSet::new();
    let mut stack: Vec<usize> = roots.to_vec();
    while let Some(i) = stack.pop() {
        if seen.insert(i) {
            stack.extend(facts[i].premises.iter().copied());
        }
    }
    seen.into_iter().collect()
}

/// Copies the closure of `roots` with premises renumbered; returns the new
/// facts and the new index of each root.
fn extract(facts: &[StrictRateFact], roots: &[usize]) -> (Vec<StrictRateFact>, Vec<usize>) {
    let keep = premise_closure(facts, roots);
    let renumber: BTreeMap<usize, usize> = keep.iter().enumerate().map(|(n, &o)| (o, n)).collect();
    let used = keep
        .iter()
        .map(|&o| {
            let mut f = facts[o].clone();
            f.premises = f.premises.iter().map(|p| renumber[p]).collect();
            f
        })
        .collect();
    (used, roots.iter().map(|r| renumber[r]).collect())
}

/// Looks for (a) two facts on one subset with no common dimension, then
/// (b) a plane fact whose restriction has an internal conflict. Among
/// candidates of the same kind the one with the fewest supporting facts wins.
pub fn find_contradiction(facts: &[StrictRateFact], p: &Problem) -> Option<Certificate> {
    let mut by_subset: BTreeMap<&MessageSet, Vec<usize>> = BTreeMap::new();
    for (i, f) in facts.iter().enumerate() {
        by_subset.entry(&f.subset).or_default().push(i);
    }
    let mut best: Option<(usize, (usize, Vec<usize>), [usize; 2])> = None;
    for (subset, ix) in &by_subset {
        for (x, &i) in ix.iter().enumerate() {
            for &j in &ix[x + 1..] {
                if facts[i].allowed_dims.intersect(facts[j].allowed_dims).is_empty() {
                    let key = (premise_closure(facts, &[i, j]).len(), subset.size_lex_key());
                    if best.as_ref().is_none_or(|(c, k, _)| (*c, k) > (key.0, &key.1)) {
                        best = Some((key.0, key.1, [i, j]));
                    }
                }
            }
        }
    }
    if let Some((_, _, roots)) = best {
        let (facts_used, ix) = extract(facts, &roots);
        let subset = facts_used[ix[0]].subset.clone();
        return Some(Certificate {
            verdict: Verdict::RateThirdInfeasible,
            reason: Reason::DisjointFacts { subset, facts: ix },
            facts_used,
        });
    }

    let mut planes: Vec<usize> = (0..facts.len()).filter(|&i| facts[i].allowed_dims == plane()).collect();
    planes.sort_by_cached_key(|&i| (premise_closure(facts, &[i]).len(), facts[i].subset.size_lex_key()));
    for i in planes {
        if let Some(conflict) = restricted_internal_conflicts(p, &facts[i].subset).into_iter().next() {
            let (facts_used, ix) = extract(facts, &[i]);
            return Some(Certificate {
                verdict: Verdict::RateThirdInfeasible,
                reason: Reason::RestrictedInternalConflict { fact: ix[0], conflict },
                facts_used,
            });
        }
    }
    None
}

/// Re-derives fact `i` of `facts` from the problem and earlier facts.
pub(crate) fn check_fact(
    p: &Problem,
    cs: &ConflictStructure,
    rate1_pairs: &BTreeSet<(usize, usize)>,
    facts: &[StrictRateFact],
    i: usize,
) -> Result<(), String> {
    let f = &facts[i];
    let premise = |k: usize| -> Result<&StrictRateFact, String> {
        let ix = *f.premises.get(k).ok_or("missing premise")?;
        if ix >= i {
            return Err("premise does not precede the fact".into());
        }
        Ok(&facts[ix])
    };
    let expect = |ok: bool, what: &str| if ok { Ok(()) } else { Err(what.to_string()) };
    match f.rule {
        Rule::ConflictingPair => {
            let w = f.witnesses.first().ok_or("no witness")?;
            let v: Vec<usize> = f.subset.iter().copied().collect();
            expect(w.holds(p) && v.len() == 2 && w.pair() == Some((v[0], v[1])), "conflict witness does not hold")?;
            expect(f.allowed_dims == plane(), "a conflicting pair spans exactly two dimensions")
        }
        Rule::InterferingSet => {
            let w = f.witnesses.first().ok_or("no witness")?;
            let fits = matches!(w, crate::structure::Witness::Interference { members, .. } if *members == f.subset);
            expect(fits && w.holds(p), "interference witness does not hold")?;
            expect(f.allowed_dims == DimSet::from_dims(&[1, 2]), "an interfering set spans one or two dimensions")
        }
        Rule::Stitch => {
            let (a, b, w) = (premise(0)?, premise(1)?, premise(2)?);
            expect(a.allowed_dims == plane() && b.allowed_dims == plane(), "stitched facts must be planes")?;
            expect(w.allowed_dims.min() >= Some(2), "shared subset must span two dimensions")?;
            expect(w.subset.is_subset(&a.subset.intersection(&b.subset)), "shared subset is not shared")?;
            expect(f.subset == a.subset.union(&b.subset) && f.allowed_dims == plane(), "wrong union")
        }
        Rule::SubsetBound => {
            let a = premise(0)?;
            let top = a.allowed_dims.max().ok_or("empty premise")?;
            expect(f.subset.is_subset(&a.subset), "not a subset")?;
            expect(f.allowed_dims == DimSet::range(1, top), "wrong bound")
        }
        Rule::SubsetOfPlane => {
            let (a, w) = (premise(0)?, premise(1)?);
            expect(a.allowed_dims == plane() && f.subset.is_subset(&a.subset), "not a subset of a plane")?;
            expect(w.allowed_dims.min() >= Some(2) && w.subset.is_subset(&f.subset), "no two-dimensional part")?;
            expect(f.allowed_dims == plane(), "wrong dimensions")
        }
        Rule::Combined => {
            let (a, b) = (premise(0)?, premise(1)?);
            expect(a.subset == f.subset && b.subset == f.subset, "facts on different subsets")?;
            expect(f.allowed_dims == a.allowed_dims.intersect(b.allowed_dims), "wrong intersection")
        }
        _ => {
            let m = f.pattern.as_ref().ok_or("no pattern")?;
            m.validate(p, rate1_pairs)?;
            let _ = cs;
            expect(
                pattern_facts(m).iter().any(|(r, s, d)| *r == f.rule && *s == f.subset && *d == f.allowed_dims),
                "the pattern does not imply this fact",
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn closed(p: &Problem) -> Vec<StrictRateFact> {
        let pa = p.absorb_undemanded();
        stitch_closure(seed_facts(&pa, &PatternInventory::detect(&pa)), &pa)
    }

    fn has(facts: &[StrictRateFact], labels: &[usize], dims: &[usize]) -> bool {
        let s = MessageSet::from_labels(labels);
        facts.iter().any(|f| f.subset == s && f.allowed_dims == DimSet::from_dims(dims))
    }

    #[test]
    fn seeds_of_single_configurations() {
        let stic = fixtures::p_stic();
        let f = seed_facts(&stic, &PatternInventory::detect(&stic));
        assert!(has(&f, &[2, 3, 5], &[1, 3]));
        assert!(has(&f, &[2, 4, 5], &[2]));
        let spic = fixtures::p_spic();
        let f = seed_facts(&spic, &PatternInventory::detect(&spic));
        assert!(has(&f, &[4, 5], &[1]));
        assert!(has(&f, &[1, 2], &[1]));
        let pair = fixtures::p_pair();
        let f = seed_facts(&pair, &PatternInventory::detect(&pair));
        assert!(has(&f, &[1, 2], &[2]));
    }

    #[test]
    fn spic_chain_stitches_to_one_plane() {
        let facts = closed(&fixtures::spic_chain());
        let all: Vec<usize> = (1..=15).collect();
        assert!(has(&facts, &all, &[2]));
    }

    #[test]
    fn disjoint_planes_stay_apart() {
        let mut b = fixtures::InstanceBuilder::new(6);
        b.full_triangle(1, 2, 3).full_triangle(4, 5, 6);
        let facts = closed(&b.build());
        assert!(!facts.iter().any(|f| f.rule == Rule::Stitch));
    }

    #[test]
    fn every_closed_fact_rechecks() {
        for (_, p) in fixtures::named() {
            let pa = p.absorb_undemanded();
            let cs = ConflictStructure::new(&pa);
            let pairs = PatternInventory::detect(&pa).rate1_infeasible_pairs;
            let facts = closed(&p);
            for i in 0..facts.len() {
                check_fact(&pa, &cs, &pairs, &facts, i).unwrap_or_else(|e| panic!("{}: {e}", facts[i].describe()));
            }
        }
    }
}
