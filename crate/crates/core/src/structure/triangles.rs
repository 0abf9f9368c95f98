//! Triangular interfering sets, type-2 alignment sets and extended type-2 sets.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::{pairs_of, ConflictStructure, PatternKind, PatternMatch, UnionFind, Witness};
use crate::model::{MessageSet, Problem};

/// All 3-subsets of some interfering set that contain a conflicting pair.
pub fn triangular_sets(p: &Problem) -> Vec<PatternMatch> {
    triangular_with(&ConflictStructure::new(p))
}

pub(crate) fn triangular_with(cs: &ConflictStructure) -> Vec<PatternMatch> {
    let mut found: BTreeMap<[usize; 3], PatternMatch> = BTreeMap::new();
    for h in &cs.hyperedges {
        let v: Vec<usize> = h.interference.iter().copied().collect();
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                for k in j + 1..v.len() {
                    let key = [v[i], v[j], v[k]];
                    if found.contains_key(&key) {
                        continue;
                    }
                    let Some((a, b)) = [(v[i], v[j]), (v[i], v[k]), (v[j], v[k])]
                        .into_iter()
                        .find(|&(a, b)| cs.conflicts(a, b))
                    else {
                        continue;
                    };
                    let members: MessageSet = key.into_iter().collect();
                    let witnesses = vec![
                        Witness::Interference { receiver: h.receiver, demand: h.demand, members: members.clone() },
                        cs.conflict_witness(a, b).expect("conflicting pair has a witness"),
                    ];
                    found.insert(
                        key,
                        PatternMatch {
                            kind: PatternKind::Triangular,
                            members,
                            role_map: None,
                            parts: Vec::new(),
                            witnesses,
                        },
                    );
                }
            }
        }
    }
    found.into_values().collect()
}

/// Maximal classes of triangular sets connected by adjacency (two triangles
/// are adjacent when they share exactly a conflicting pair).
pub fn type2_sets(p: &Problem) -> Vec<PatternMatch> {
    let cs = ConflictStructure::new(p);
    type2_with(&cs, &triangular_with(&cs))
}

pub(crate) fn type2_with(cs: &ConflictStructure, triangles: &[PatternMatch]) -> Vec<PatternMatch> {
    // triangles through each conflicting pair
    let mut through: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (t, m) in triangles.iter().enumerate() {
        let v: Vec<usize> = m.members.iter().copied().collect();
        for pair in pairs_of(&v) {
            if cs.conflicts(pair.0, pair.1) {
                through.entry(pair).or_default().push(t);
            }
        }
    }
    let mut uf = UnionFind::new(triangles.len());
    for ts in through.values() {
        for w in ts.windows(2) {
            uf.union(w[0], w[1]);
        }
    }
    let mut out: Vec<PatternMatch> = Vec::new();
    let mut seen: BTreeSet<MessageSet> = BTreeSet::new();
    for class in uf.classes() {
        // breadth-first order so every part is adjacent to an earlier one
        let in_class: BTreeSet<usize> = class.iter().copied().collect();
        let mut order = Vec::new();
        let mut witnesses = Vec::new();
        let mut visited = BTreeSet::from([class[0]]);
        let mut queue = VecDeque::from([class[0]]);
        while let Some(t) = queue.pop_front() {
            order.push(t);
            let v: Vec<usize> = triangles[t].members.iter().copied().collect();
            for pair in pairs_of(&v) {
                for &u in through.get(&pair).map(|x| x.as_slice()).unwrap_or(&[]) {
                    if in_class.contains(&u) && visited.insert(u) {
                        queue.push_back(u);
                        witnesses.push(cs.conflict_witness(pair.0, pair.1).expect("conflicting pair"));
                    }
                }
            }
        }
        let members = order.iter().fold(MessageSet::new(), |acc, &t| acc.union(&triangles[t].members));
        if !seen.insert(members.clone()) {
            continue;
        }
        witnesses.sort();
        witnesses.dedup();
        out.push(PatternMatch {
            kind: PatternKind::Type2,
            members,
            role_map: None,
            parts: order.iter().map(|&t| triangles[t].clone()).collect(),
            witnesses,
        });
    }
    out.sort_by(|a, b| a.members.cmp(&b.members));
    out
}

/// Maximal unions of type-2 sets in which each absorbed set meets the union
/// so far in at least one conflicting pair.
pub fn xtype2_sets(p: &Problem) -> Vec<PatternMatch> {
    let cs = ConflictStructure::new(p);
    let t = triangular_with(&cs);
    xtype2_with(&cs, &type2_with(&cs, &t))
}

pub(crate) fn xtype2_with(cs: &ConflictStructure, type2: &[PatternMatch]) -> Vec<PatternMatch> {
    let mut closures: Vec<PatternMatch> = Vec::new();
    for start in 0..type2.len() {
        let mut members = type2[start].members.clone();
        let mut order = vec![start];
        let mut witnesses = Vec::new();
        loop {
            let next = (0..type2.len()).filter(|j| !order.contains(j)).find_map(|j| {
                let shared: Vec<usize> = members.intersection(&type2[j].members).iter().copied().collect();
                pairs_of(&shared).find(|&(a, b)| cs.conflicts(a, b)).map(|pair| (j, pair))
            });
            let Some((j, (a, b))) = next else { break };
            members = members.union(&type2[j].members);
            order.push(j);
            witnesses.push(cs.conflict_witness(a, b).expect("conflicting pair"));
        }
        closures.push(PatternMatch {
            kind: PatternKind::Xtype2,
            members,
            role_map: None,
            parts: order.iter().map(|&j| type2[j].clone()).collect(),
            witnesses,
        });
    }
    // keep one closure per member set, and only the maximal ones
    let mut out: Vec<PatternMatch> = Vec::new();
    for c in closures {
        if out.iter().any(|o| o.members == c.members) {
            continue;
        }
        out.push(c);
    }
    let maximal: Vec<PatternMatch> = out
        .iter()
        .filter(|c| !out.iter().any(|o| o.members != c.members && c.members.is_subset(&o.members)))
        .cloned()
        .collect();
    let mut maximal = maximal;
    maximal.sort_by(|a, b| a.members.cmp(&b.members));
    maximal
}
