//! Builds the transition graph of a reader pair in a tiny review graph and
//! prints its document, then parses it back.

use std::io::Cursor;

use tegdoc::document::{compose_document, parse_document};
use tegdoc::graph::load_graph;
use tegdoc::transition::{build_transition_graph, common_nodes, extract_bfs_tree, hidden_edges, transition_diameter};

const NODES: &str = r#"{"key":"alice","text":"mystery fan"}
{"key":"bob","text":"reads everything"}
{"key":"dune","text":"science fiction"}
{"key":"emma","text":"regency comedy"}
{"key":"carol","text":"new member"}
"#;

const EDGES: &str = r#"{"key":"r1","src":"alice","dst":"dune","text":"gripping and vivid"}
{"key":"r2","src":"alice","dst":"emma","text":"dull in places"}
{"key":"r3","src":"bob","dst":"dune","text":"a masterful epic"}
{"key":"r4","src":"bob","dst":"emma","text":"charming dialogue"}
{"key":"r5","src":"carol","dst":"emma","text":"predictable ending"}
{"key":"r6","src":"carol","dst":"alice","text":"recommended me [dune]"}
"#;

fn main() -> tegdoc::Result<()> {
    let g = load_graph(Cursor::new(NODES), Cursor::new(EDGES))?;
    let (s, t) = (g.lookup("alice").unwrap(), g.lookup("bob").unwrap());
    let k = 4;
    let tg = build_transition_graph(&g, s, t, k)?;
    println!("{} nodes, {} edges, diameter {}", tg.node_count(), tg.edges().len(), transition_diameter(&tg));

    let tree_s = extract_bfs_tree(&tg, s, k / 2)?;
    let tree_t = extract_bfs_tree(&tg, t, k / 2)?;
    let (hs, ht) = (hidden_edges(&tree_s, &tg), hidden_edges(&tree_t, &tg));
    let doc = compose_document(&tree_s, &tree_t, &hs, &ht, &common_nodes(&tree_s, &tree_t), &g, true);
    println!("\n{}", doc.text);

    let back = parse_document(&doc.text)?.resolve(&g)?;
    assert_eq!(back.hidden_s, hs);
    println!("parsed back: {} + {} tree nodes, {} cross-references", back.tree_s.len(), back.tree_t.len(), back.cross_refs.len());
    Ok(())
}
