//! Contraction of alignment edges and lifting of codes back through it.
//!
//! Merging two aligned, non-conflicting messages into one vertex gives a
//! problem with one message fewer; any code for it extends to the original by
//! giving both messages the merged vertex's vector.

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::code::PrecodingAssignment;
use crate::model::{MessageSet, Problem, Receiver};
use crate::structure::ConflictStructure;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ContractionError {
    #[error("{0} and {1} are not joined by an alignment edge")]
    NotAlignmentEdge(usize, usize),
    #[error("{0} and {1} are in conflict and cannot be merged")]
    EndpointsInConflict(usize, usize),
    #[error("code has {got} vectors but the contraction has {expected} vertices")]
    IndexMismatch { expected: usize, got: usize },
}

/// Where each original message ended up, and how.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContractionMap {
    /// Original message → vertex of the contracted problem.
    pub forward: Vec<usize>,
    /// Merged pairs, in the labels of the problem at the time of merging.
    pub history: Vec<(usize, usize)>,
    pub source_n: usize,
    pub target_n: usize,
}

impl ContractionMap {
    pub fn identity(n: usize) -> Self {
        ContractionMap { forward: (0..n).collect(), history: Vec::new(), source_n: n, target_n: n }
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &ContractionMap) -> ContractionMap {
        assert_eq!(self.target_n, next.source_n, "contraction maps do not compose");
        ContractionMap {
            forward: self.forward.iter().map(|&v| next.forward[v]).collect(),
            history: self.history.iter().chain(&next.history).copied().collect(),
            source_n: self.source_n,
            target_n: next.target_n,
        }
    }

    /// Original messages merged into vertex `v`.
    pub fn preimage(&self, v: usize) -> MessageSet {
        (0..self.source_n).filter(|&m| self.forward[m] == v).collect()
    }
}

impl Serialize for ContractionMap {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Out {
            forward: Vec<usize>,
            history: Vec<[usize; 2]>,
        }
        Out {
            forward: self.forward.iter().map(|v| v + 1).collect(),
            history: self.history.iter().map(|&(a, b)| [a + 1, b + 1]).collect(),
        }
        .serialize(s)
    }
}

/// Which contractible edge to take next.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ContractionPolicy {
    /// The lexicographically smallest eligible pair.
    Lexicographic,
    /// A uniformly random eligible pair.
    Random { seed: u64 },
}

impl fmt::Display for ContractionPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ContractionPolicy::Lexicographic => write!(f, "lexicographic"),
            ContractionPolicy::Random { seed } => write!(f, "random:{seed}"),
        }
    }
}

impl Serialize for ContractionPolicy {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Merges `a` and `b`. The merged vertex takes the smaller index and later
/// messages shift down by one. It is side information exactly where both
/// endpoints were, and demanded wherever either was.
pub fn contract_edge(p: &Problem, a: usize, b: usize) -> Result<(Problem, ContractionMap), ContractionError> {
    let cs = ConflictStructure::new(p);
    if a == b || a >= p.n() || b >= p.n() || !cs.aligned(a, b) {
        return Err(ContractionError::NotAlignmentEdge(a + 1, b + 1));
    }
    if cs.conflicts(a, b) {
        return Err(ContractionError::EndpointsInConflict(a + 1, b + 1));
    }
    Ok(merge(p, a.min(b), a.max(b)))
}

fn merge(p: &Problem, keep: usize, gone: usize) -> (Problem, ContractionMap) {
    let forward: Vec<usize> = (0..p.n())
        .map(|m| match m {
            _ if m == gone => keep,
            _ if m > gone => m - 1,
            _ => m,
        })
        .collect();
    let receivers = p
        .receivers()
        .iter()
        .map(|r| {
            let mut demands = r.demands.map(&forward);
            let mut side_info: MessageSet =
                r.side_info.iter().filter(|&&m| m != keep && m != gone).map(|&m| forward[m]).collect();
            if r.side_info.contains(&keep) && r.side_info.contains(&gone) {
                side_info.insert(keep);
            }
            if r.demands.contains(&keep) || r.demands.contains(&gone) {
                demands.insert(keep);
            }
            Receiver { demands, side_info }
        })
        .collect();
    let q = Problem::new(p.n() - 1, receivers, p.field_hint()).expect("merging non-conflicting messages keeps the problem valid");
    let map = ContractionMap { forward, history: vec![(keep, gone)], source_n: p.n(), target_n: p.n() - 1 };
    (q, map)
}

/// Alignment edges whose endpoints do not conflict, in lexicographic order.
pub fn contractible_edges(p: &Problem) -> Vec<(usize, usize)> {
    let cs = ConflictStructure::new(p);
    let n = p.n();
    (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .filter(|&(a, b)| cs.aligned(a, b) && !cs.conflicts(a, b))
        .collect()
}

/// Contracts until every alignment edge joins conflicting messages.
pub fn maximal_contraction(p: &Problem, policy: ContractionPolicy) -> (Problem, ContractionMap) {
    let mut rng = match policy {
        ContractionPolicy::Random { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
        ContractionPolicy::Lexicographic => None,
    };
    let mut cur = p.clone();
    let mut map = ContractionMap::identity(p.n());
    loop {
        let edges = contractible_edges(&cur);
        let pick = match rng.as_mut() {
            Some(rng) => edges.choose(rng).copied(),
            None => edges.first().copied(),
        };
        let Some((a, b)) = pick else { break };
        let (next, step) = merge(&cur, a, b);
        map = map.then(&step);
        cur = next;
    }
    (cur, map)
}

/// Whether no contractible edge remains.
pub fn is_maximal(p: &Problem) -> bool {
    contractible_edges(p).is_empty()
}

/// Gives each original message the vector of the vertex it was merged into.
pub fn lift_code(code: &PrecodingAssignment, cm: &ContractionMap) -> Result<PrecodingAssignment, ContractionError> {
    if code.vectors().len() != cm.target_n {
        return Err(ContractionError::IndexMismatch { expected: cm.target_n, got: code.vectors().len() });
    }
    let vectors = cm.forward.iter().map(|&v| *code.vector(v)).collect();
    Ok(PrecodingAssignment::new(code.field(), code.len(), vectors).expect("lifted vectors keep their length"))
}
