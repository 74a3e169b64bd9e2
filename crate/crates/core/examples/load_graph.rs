//! Loads a graph from node and edge JSON-lines files and prints a summary.
//!
//! cargo run --example load_graph -- nodes.jsonl edges.jsonl

use std::path::PathBuf;

use tegdoc::graph::load_graph_files;

fn main() {
    let mut args = std::env::args().skip(1).map(PathBuf::from);
    let (Some(nodes), Some(edges)) = (args.next(), args.next()) else {
        eprintln!("usage: load_graph <nodes.jsonl> <edges.jsonl>");
        std::process::exit(2);
    };
    let g = match load_graph_files(&nodes, &edges) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    };
    let max_degree = g.nodes().iter().map(|n| g.degree(n.id)).max().unwrap_or(0);
    let labeled = g.edges().iter().filter(|e| e.label.is_some()).count();
    println!("{} nodes, {} edges ({labeled} labeled, {} classes), max degree {max_degree}", g.node_count(), g.edge_count(), g.num_edge_classes());
    for n in g.nodes().iter().take(3) {
        let shown: Vec<&str> = g.neighbors(n.id).unwrap().iter().map(|&(v, _)| g.key(v)).collect();
        println!("  {} -> {}", n.external_key, shown.join(", "));
    }
}
