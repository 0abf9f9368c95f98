//! Intersection graph of extended type-2 sets.

use serde::Serialize;

use crate::gf::{FVector, Subspace};
use crate::model::MessageSet;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EtigEdge {
    pub a: usize,
    pub b: usize,
    /// Vector shared by every message in the intersection, once assigned.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vector: Option<FVector>,
}

/// One vertex per extended type-2 set; an edge whenever two sets intersect.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Etig {
    pub vertices: Vec<MessageSet>,
    pub edges: Vec<EtigEdge>,
    /// Span of the vectors on edges incident to each vertex, once assigned.
    #[serde(skip)]
    pub vertex_spans: Vec<Option<Subspace>>,
}

impl Etig {
    pub fn edge(&self, a: usize, b: usize) -> Option<&EtigEdge> {
        let (a, b) = (a.min(b), a.max(b));
        self.edges.iter().find(|e| e.a == a && e.b == b)
    }

    pub fn neighbours(&self, v: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter_map(|e| if e.a == v { Some(e.b) } else if e.b == v { Some(e.a) } else { None })
            .collect()
    }
}

/// Builds the graph; edges are listed lexicographically by endpoints.
pub fn build_etig(sets: &[MessageSet]) -> Etig {
    let mut edges = Vec::new();
    for a in 0..sets.len() {
        for b in a + 1..sets.len() {
            if !sets[a].is_disjoint(&sets[b]) {
                edges.push(EtigEdge { a, b, vector: None });
            }
        }
    }
    Etig { vertices: sets.to_vec(), edges, vertex_spans: vec![None; sets.len()] }
}
