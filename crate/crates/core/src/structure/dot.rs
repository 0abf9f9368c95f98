//! Graphviz export of the alignment graph and the conflict hyperedges.

use std::fmt::Write;

use super::{AlignmentGraph, ConflictStructure};
use crate::model::Problem;

/// Renders messages as nodes, alignment edges as solid lines, and each
/// non-empty interfering set as a dashed star: an auxiliary point node joined
/// to the demanded message (bold) and to every interfering message.
pub fn export_dot(p: &Problem) -> String {
    let cs = ConflictStructure::new(p);
    let g = AlignmentGraph::new(&cs);
    let mut out = String::new();
    writeln!(out, "graph index_coding {{").unwrap();
    writeln!(out, "  node [shape=circle];").unwrap();
    for m in 0..p.n() {
        writeln!(out, "  m{0} [label=\"{0}\"];", m + 1).unwrap();
    }
    for &(a, b) in &g.edges {
        writeln!(out, "  m{} -- m{};", a + 1, b + 1).unwrap();
    }
    for h in cs.hyperedges.iter().filter(|h| !h.interference.is_empty()) {
        let hub = format!("h{}_{}", h.receiver + 1, h.demand + 1);
        writeln!(out, "  {hub} [shape=point, label=\"\"];").unwrap();
        writeln!(out, "  {hub} -- m{} [style=dashed, penwidth=2];", h.demand + 1).unwrap();
        for &i in h.interference.iter() {
            writeln!(out, "  {hub} -- m{} [style=dashed];", i + 1).unwrap();
        }
    }
    writeln!(out, "}}").unwrap();
    out
}
