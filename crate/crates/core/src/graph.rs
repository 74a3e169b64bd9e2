//! Textual-edge graphs: undirected simple graphs whose nodes and edges carry
//! free-form text.
//!
//! Graphs are read from two JSON-lines streams:
//!
//! ```text
//! nodes: {"key": "a", "text": "..."}
//! edges: {"key": "e1", "src": "a", "dst": "b", "text": "...", "label": 3}
//! ```
//!
//! Node ids are assigned in ascending external-key order and edge ids in
//! ascending endpoint order, so the resulting graph does not depend on the
//! order of the input lines.

use std::collections::HashMap;
use std::fmt;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl EdgeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextNode {
    pub id: NodeId,
    pub external_key: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextEdge {
    pub id: EdgeId,
    pub key: String,
    /// Endpoints with `endpoints.0 < endpoints.1`.
    pub endpoints: (NodeId, NodeId),
    pub text: String,
    pub label: Option<u32>,
}

impl TextEdge {
    /// The endpoint that is not `u`.
    pub fn other(&self, u: NodeId) -> NodeId {
        if self.endpoints.0 == u {
            self.endpoints.1
        } else {
            self.endpoints.0
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
struct NodeRecord {
    key: String,
    #[serde(default)]
    text: String,
}

#[derive(Debug, Clone, Deserialize)]
struct EdgeRecord {
    #[serde(default)]
    key: String,
    src: String,
    dst: String,
    #[serde(default)]
    text: String,
    #[serde(default)]
    label: Option<u32>,
}

/// Immutable textual-edge graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TeGraph {
    nodes: Vec<TextNode>,
    edges: Vec<TextEdge>,
    adjacency: Vec<Vec<(NodeId, EdgeId)>>,
    key_index: HashMap<String, NodeId>,
}

/// Input node for [`TeGraph::from_parts`].
#[derive(Debug, Clone)]
pub struct NodeSpec {
    pub key: String,
    pub text: String,
}

/// Input edge for [`TeGraph::from_parts`]. `src`/`dst` are external keys.
#[derive(Debug, Clone)]
pub struct EdgeSpec {
    pub key: String,
    pub src: String,
    pub dst: String,
    pub text: String,
    pub label: Option<u32>,
}

impl TeGraph {
    /// Build a graph from in-memory records. Line numbers in errors are
    /// 1-based positions within `nodes` / `edges`.
    pub fn from_parts(nodes: Vec<NodeSpec>, edges: Vec<EdgeSpec>) -> Result<Self> {
        let mut seen = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if let Some(prev) = seen.insert(n.key.clone(), i) {
                return Err(Error::Parse {
                    file: "nodes",
                    line: i + 1,
                    msg: format!("duplicate external_key {:?} (first seen on line {})", n.key, prev + 1),
                });
            }
        }

        let mut order: Vec<usize> = (0..nodes.len()).collect();
        order.sort_by(|&a, &b| nodes[a].key.cmp(&nodes[b].key));
        let mut key_index = HashMap::with_capacity(nodes.len());
        let mut text_nodes = Vec::with_capacity(nodes.len());
        for (id, &i) in order.iter().enumerate() {
            let nid = NodeId(id as u32);
            key_index.insert(nodes[i].key.clone(), nid);
            text_nodes.push(TextNode {
                id: nid,
                external_key: nodes[i].key.clone(),
                text: nodes[i].text.clone(),
            });
        }

        let mut resolved = Vec::with_capacity(edges.len());
        let mut pair_line: HashMap<(NodeId, NodeId), usize> = HashMap::with_capacity(edges.len());
        for (i, e) in edges.into_iter().enumerate() {
            let line = i + 1;
            let lookup = |k: &str| {
                key_index.get(k).copied().ok_or_else(|| Error::Parse {
                    file: "edges",
                    line,
                    msg: format!("dangling edge endpoint {k:?}"),
                })
            };
            let a = lookup(&e.src)?;
            let b = lookup(&e.dst)?;
            if a == b {
                return Err(Error::Parse {
                    file: "edges",
                    line,
                    msg: format!("self-loop on {:?}", e.src),
                });
            }
            if e.label == Some(0) {
                return Err(Error::Parse {
                    file: "edges",
                    line,
                    msg: "edge labels start at 1".to_string(),
                });
            }
            let pair = if a < b { (a, b) } else { (b, a) };
            if let Some(prev) = pair_line.insert(pair, line) {
                return Err(Error::Parse {
                    file: "edges",
                    line,
                    msg: format!(
                        "duplicate undirected edge {:?}-{:?} (first seen on line {prev})",
                        e.src, e.dst
                    ),
                });
            }
            resolved.push((pair, e));
        }
        resolved.sort_by_key(|(pair, _)| *pair);

        let mut adjacency = vec![Vec::new(); text_nodes.len()];
        let mut text_edges = Vec::with_capacity(resolved.len());
        for (id, (pair, e)) in resolved.into_iter().enumerate() {
            let eid = EdgeId(id as u32);
            adjacency[pair.0.index()].push((pair.1, eid));
            adjacency[pair.1.index()].push((pair.0, eid));
            text_edges.push(TextEdge {
                id: eid,
                key: e.key,
                endpoints: pair,
                text: e.text,
                label: e.label,
            });
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }

        Ok(TeGraph {
            nodes: text_nodes,
            edges: text_edges,
            adjacency,
            key_index,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[TextNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[TextEdge] {
        &self.edges
    }

    pub fn node(&self, u: NodeId) -> Result<&TextNode> {
        self.nodes.get(u.index()).ok_or(Error::InvalidNode(u.0))
    }

    pub fn edge(&self, e: EdgeId) -> Result<&TextEdge> {
        self.edges.get(e.index()).ok_or(Error::InvalidEdge(e.0))
    }

    pub fn key(&self, u: NodeId) -> &str {
        &self.nodes[u.index()].external_key
    }

    pub fn lookup(&self, key: &str) -> Option<NodeId> {
        self.key_index.get(key).copied()
    }

    /// Neighbors of `u` as `(neighbor, edge)` sorted by neighbor id.
    pub fn neighbors(&self, u: NodeId) -> Result<&[(NodeId, EdgeId)]> {
        self.adjacency
            .get(u.index())
            .map(Vec::as_slice)
            .ok_or(Error::InvalidNode(u.0))
    }

    /// The edge joining `u` and `v`, if any.
    pub fn edge_between(&self, u: NodeId, v: NodeId) -> Option<EdgeId> {
        let list = self.adjacency.get(u.index())?;
        list.binary_search_by_key(&v, |&(n, _)| n)
            .ok()
            .map(|i| list[i].1)
    }

    pub fn degree(&self, u: NodeId) -> usize {
        self.adjacency[u.index()].len()
    }

    /// Largest edge label present, i.e. the number of edge classes.
    pub fn num_edge_classes(&self) -> u32 {
        self.edges.iter().filter_map(|e| e.label).max().unwrap_or(0)
    }

    /// A copy of the graph with the given edges removed. Node ids are kept;
    /// edge ids are renumbered densely.
    pub fn without_edges(&self, removed: &[EdgeId]) -> TeGraph {
        let mut drop = vec![false; self.edges.len()];
        for e in removed {
            if let Some(slot) = drop.get_mut(e.index()) {
                *slot = true;
            }
        }
        let nodes = self
            .nodes
            .iter()
            .map(|n| NodeSpec {
                key: n.external_key.clone(),
                text: n.text.clone(),
            })
            .collect();
        let edges = self
            .edges
            .iter()
            .filter(|e| !drop[e.id.index()])
            .map(|e| EdgeSpec {
                key: e.key.clone(),
                src: self.key(e.endpoints.0).to_string(),
                dst: self.key(e.endpoints.1).to_string(),
                text: e.text.clone(),
                label: e.label,
            })
            .collect();
        // Valid by construction: a subset of a valid graph.
        TeGraph::from_parts(nodes, edges).expect("edge subset of a valid graph")
    }
}

fn read_records<T, R>(reader: R, file: &'static str) -> Result<Vec<T>>
where
    T: for<'de> Deserialize<'de>,
    R: BufRead,
{
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| Error::Parse {
            file,
            line: i + 1,
            msg: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

/// Read a graph from node and edge JSON-lines streams.
pub fn load_graph<N: BufRead, E: BufRead>(node_stream: N, edge_stream: E) -> Result<TeGraph> {
    let nodes: Vec<NodeRecord> = read_records(node_stream, "nodes")?;
    let edges: Vec<EdgeRecord> = read_records(edge_stream, "edges")?;
    TeGraph::from_parts(
        nodes
            .into_iter()
            .map(|n| NodeSpec {
                key: n.key,
                text: n.text,
            })
            .collect(),
        edges
            .into_iter()
            .map(|e| EdgeSpec {
                key: e.key,
                src: e.src,
                dst: e.dst,
                text: e.text,
                label: e.label,
            })
            .collect(),
    )
}

/// Convenience wrapper over [`load_graph`] for files on disk.
pub fn load_graph_files(nodes: &std::path::Path, edges: &std::path::Path) -> Result<TeGraph> {
    let open = |p: &std::path::Path| {
        std::fs::File::open(p)
            .map(std::io::BufReader::new)
            .map_err(|e| Error::file(p, e))
    };
    load_graph(open(nodes)?, open(edges)?)
}

/// Serialize a graph back to the node / edge JSON-lines formats.
pub fn write_graph<W1: std::io::Write, W2: std::io::Write>(
    g: &TeGraph,
    mut nodes: W1,
    mut edges: W2,
) -> Result<()> {
    for n in g.nodes() {
        let rec = serde_json::json!({"key": n.external_key, "text": n.text});
        writeln!(nodes, "{rec}")?;
    }
    for e in g.edges() {
        let mut rec = serde_json::json!({
            "key": e.key,
            "src": g.key(e.endpoints.0),
            "dst": g.key(e.endpoints.1),
            "text": e.text,
        });
        if let Some(l) = e.label {
            rec["label"] = l.into();
        }
        writeln!(edges, "{rec}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(nodes: &str, edges: &str) -> Result<TeGraph> {
        load_graph(nodes.as_bytes(), edges.as_bytes())
    }

    const ABC: &str = "{\"key\":\"a\",\"text\":\"\"}\n{\"key\":\"b\",\"text\":\"\"}\n{\"key\":\"c\",\"text\":\"\"}\n";

    #[test]
    fn minimal_graph() {
        let g = graph(
            "{\"key\":\"a\",\"text\":\"A\"}\n{\"key\":\"b\",\"text\":\"B\"}\n",
            "{\"key\":\"e\",\"src\":\"a\",\"dst\":\"b\",\"text\":\"cites\"}\n",
        )
        .unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edge_count(), 1);
        let a = g.lookup("a").unwrap();
        let b = g.lookup("b").unwrap();
        assert_eq!(g.neighbors(a).unwrap(), &[(b, EdgeId(0))]);
        assert_eq!(g.neighbors(b).unwrap(), &[(a, EdgeId(0))]);
        assert_eq!(g.edge(EdgeId(0)).unwrap().text, "cites");
    }

    #[test]
    fn edgeless_graph() {
        let g = graph(ABC, "").unwrap();
        assert_eq!(g.node_count(), 3);
        for n in g.nodes() {
            assert!(g.neighbors(n.id).unwrap().is_empty());
        }
    }

    #[test]
    fn self_loop_rejected() {
        let err = graph(ABC, "{\"src\":\"a\",\"dst\":\"a\",\"text\":\"x\"}\n").unwrap_err();
        assert!(err.to_string().contains("self-loop"), "{err}");
        assert!(err.to_string().contains("line 1"));
    }

    #[test]
    fn dangling_endpoint_names_line() {
        let err = graph(
            ABC,
            "{\"src\":\"a\",\"dst\":\"b\",\"text\":\"x\"}\n{\"src\":\"a\",\"dst\":\"zz\",\"text\":\"x\"}\n",
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2") && msg.contains("zz"), "{msg}");
    }

    #[test]
    fn duplicate_key_and_edge_rejected() {
        assert!(graph("{\"key\":\"a\"}\n{\"key\":\"a\"}\n", "").is_err());
        let err = graph(
            ABC,
            "{\"src\":\"a\",\"dst\":\"b\"}\n{\"src\":\"b\",\"dst\":\"a\"}\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("duplicate undirected edge"));
    }

    #[test]
    fn neighbor_lists_sorted() {
        let g = graph(
            ABC,
            "{\"src\":\"c\",\"dst\":\"a\"}\n{\"src\":\"b\",\"dst\":\"a\"}\n{\"src\":\"b\",\"dst\":\"c\"}\n",
        )
        .unwrap();
        let a = g.lookup("a").unwrap();
        let (b, c) = (g.lookup("b").unwrap(), g.lookup("c").unwrap());
        let ns: Vec<_> = g.neighbors(a).unwrap().iter().map(|x| x.0).collect();
        assert_eq!(ns, vec![b, c]);
        assert_eq!(g.edge_between(a, c), g.edge_between(c, a));
        assert!(g.neighbors(NodeId(99)).is_err());
    }

    #[test]
    fn path_middle_neighbors() {
        let g = graph(ABC, "{\"src\":\"a\",\"dst\":\"b\"}\n{\"src\":\"b\",\"dst\":\"c\"}\n").unwrap();
        let b = g.lookup("b").unwrap();
        let ns: Vec<_> = g.neighbors(b).unwrap().iter().map(|x| g.key(x.0)).collect();
        assert_eq!(ns, vec!["a", "c"]);
    }

    #[test]
    fn without_edges_keeps_nodes() {
        let g = graph(ABC, "{\"src\":\"a\",\"dst\":\"b\"}\n{\"src\":\"b\",\"dst\":\"c\"}\n").unwrap();
        let h = g.without_edges(&[EdgeId(0)]);
        assert_eq!(h.node_count(), 3);
        assert_eq!(h.edge_count(), 1);
        assert_eq!(h.lookup("b"), g.lookup("b"));
    }
}
