use std::fmt::Write as _;

use crate::semantics::StateGraph;

/// DOT text for a state graph: all nodes in state order, then edges in
/// lexicographic order. Output depends only on the graph.
pub fn export_dot(graph: &StateGraph) -> String {
    let space = graph.space();
    let label = |i: usize| space.label(&graph.state(i));
    let mut out = String::new();
    let _ = writeln!(out, "digraph {} {{", graph.semantics());
    for i in 0..graph.node_count() {
        let _ = writeln!(out, "  \"{}\";", label(i));
    }
    for (a, b) in graph.edges() {
        let _ = writeln!(out, "  \"{}\" -> \"{}\";", label(a), label(b));
    }
    out.push_str("}\n");
    out
}
