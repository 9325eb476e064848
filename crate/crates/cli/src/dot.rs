//! Graphviz export of a search tree. Labels use one-based indices.

use std::fmt::Write;

use ocot::search::{Expansion, NodeStatus, SearchResult};

fn one_based((i, j): (usize, usize)) -> String {
    format!("({},{})", i + 1, j + 1)
}

fn node_label(result: &SearchResult, id: usize) -> String {
    let node = &result.nodes[id];
    let mut lines = vec![node.newest().map_or_else(|| "unconstrained".to_string(), one_based)];
    match node.status {
        NodeStatus::Solved => {
            if let Some(f) = node.objective {
                lines.push(format!("cost {f:.6}"));
            }
            if let Some(r) = result.rank_of(id) {
                lines.push(format!("rank {}", r + 1));
            }
            match node.expansion {
                Expansion::SkippedDepth => lines.push("depth limit".into()),
                Expansion::SkippedParentCost => lines.push("not expanded: cost".into()),
                _ => {}
            }
        }
        NodeStatus::PrunedBound => {
            lines.push(format!("pruned: bound {:.6}", node.bound.unwrap_or(f64::NAN)));
        }
        NodeStatus::Pending => lines.push("not visited".into()),
    }
    lines.join("\\n")
}

pub fn search_dot(result: &SearchResult, k2: usize) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph search {{");
    let _ = writeln!(out, "  label=\"Top k2={k2} candidates\";");
    let _ = writeln!(out, "  labelloc=t;");
    let _ = writeln!(out, "  rankdir=TB;");
    let _ = writeln!(out, "  node [shape=box, fontname=\"Helvetica\"];");
    for node in &result.nodes {
        let mut style = Vec::new();
        if result.subtree.contains(&node.id) {
            style.push("bold");
        }
        match node.status {
            NodeStatus::PrunedBound => style.push("dashed"),
            NodeStatus::Pending => style.push("dotted"),
            NodeStatus::Solved => {}
        }
        if result.rank_of(node.id).is_some() {
            style.push("filled");
        }
        let style = if style.is_empty() { String::new() } else { format!(", style=\"{}\"", style.join(",")) };
        let fill = if result.rank_of(node.id).is_some() { ", fillcolor=\"lightgoldenrod\"" } else { "" };
        let _ = writeln!(out, "  n{} [label=\"{}\"{style}{fill}];", node.id, node_label(result, node.id));
    }
    for node in &result.nodes {
        if let (Some(p), Some(v)) = (node.parent, node.newest()) {
            let _ = writeln!(out, "  n{p} -> n{} [label=\"{}\"];", node.id, one_based(v));
        }
    }
    out.push_str("}\n");
    out
}
