use std::collections::HashSet;
use std::io::{BufRead, Write};

use ndarray::Array1;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::batch::PairExample;
use crate::document::{compose_document, TransitionDocument};
use crate::embed::EmbeddingProvider;
use crate::error::{Error, Result};
use crate::graph::{EdgeId, NodeId, TeGraph};
use crate::transition::{
    build_transition_graph_masked, common_nodes, extract_bfs_tree, hidden_edges, BfsTree, TransitionGraph,
};

/// A node pair with a target: 0/1 for links, a 0-based class otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LabeledPair {
    pub s: NodeId,
    pub t: NodeId,
    pub label: u32,
}

#[derive(Serialize, Deserialize)]
struct PairRecord {
    src: String,
    dst: String,
    label: u32,
}

/// Reads `{"src", "dst", "label"}` lines, resolving keys against `g`.
pub fn read_pairs<R: BufRead>(reader: R, g: &TeGraph) -> Result<Vec<LabeledPair>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |msg: String| Error::Parse { file: "pairs", line: i + 1, msg };
        let rec: PairRecord = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        let s = g.lookup(&rec.src).ok_or_else(|| bad(format!("unknown node {:?}", rec.src)))?;
        let t = g.lookup(&rec.dst).ok_or_else(|| bad(format!("unknown node {:?}", rec.dst)))?;
        if s == t {
            return Err(bad("pair joins a node to itself".into()));
        }
        out.push(LabeledPair { s, t, label: rec.label });
    }
    Ok(out)
}

pub fn write_pairs<W: Write>(mut w: W, pairs: &[LabeledPair], g: &TeGraph) -> Result<()> {
    for p in pairs {
        let rec = PairRecord {
            src: g.key(p.s).to_string(),
            dst: g.key(p.t).to_string(),
            label: p.label,
        };
        serde_json::to_writer(&mut w, &rec)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Train/validation/test pairs, plus the edges removed from the graph the
/// model may see.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PairSplits {
    pub train: Vec<LabeledPair>,
    pub valid: Vec<LabeledPair>,
    pub test: Vec<LabeledPair>,
    pub held_out: Vec<EdgeId>,
}

const TRAIN_FRACTION: f64 = 0.8;
const VALID_FRACTION: f64 = 0.1;

fn cut_points(n: usize) -> (usize, usize) {
    let a = (n as f64 * TRAIN_FRACTION).round() as usize;
    let b = a + (n as f64 * VALID_FRACTION).round() as usize;
    (a.min(n), b.min(n))
}

/// Seeded 80/10/10 split of an explicit pair list.
pub fn split_pairs(pairs: &[LabeledPair], seed: u64) -> PairSplits {
    let mut shuffled = pairs.to_vec();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (a, b) = cut_points(shuffled.len());
    PairSplits {
        test: shuffled.split_off(b),
        valid: shuffled.split_off(a),
        train: shuffled,
        held_out: Vec::new(),
    }
}

/// Uniform non-adjacent, non-identical node pairs, none repeated and none in
/// `exclude` (in either orientation).
pub fn sample_negatives(g: &TeGraph, count: usize, rng: &mut impl Rng, exclude: &HashSet<(NodeId, NodeId)>) -> Result<Vec<(NodeId, NodeId)>> {
    let n = g.node_count();
    let capacity = n * n.saturating_sub(1) / 2;
    if count > capacity.saturating_sub(g.edge_count() + exclude.len()) {
        return Err(Error::InvalidArgument(format!("cannot sample {count} non-edges from a {n}-node graph")));
    }
    let key = |a: NodeId, b: NodeId| if a < b { (a, b) } else { (b, a) };
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let s = NodeId(rng.gen_range(0..n as u32));
        let t = NodeId(rng.gen_range(0..n as u32));
        if s == t || g.edge_between(s, t).is_some() || exclude.contains(&key(s, t)) || !seen.insert(key(s, t)) {
            continue;
        }
        out.push((s, t));
    }
    Ok(out)
}

/// Link prediction splits: edges are shuffled and split 80/10/10; each split
/// gets one sampled non-edge per positive. Validation and test edges are
/// held out of the model's graph.
pub fn link_splits(g: &TeGraph, seed: u64) -> Result<PairSplits> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges: Vec<EdgeId> = g.edges().iter().map(|e| e.id).collect();
    edges.shuffle(&mut rng);
    let (a, b) = cut_points(edges.len());
    let mut taken = HashSet::new();
    let mut build = |ids: &[EdgeId], rng: &mut ChaCha8Rng| -> Result<Vec<LabeledPair>> {
        let mut out: Vec<LabeledPair> = ids
            .iter()
            .map(|&e| {
                let (s, t) = g.edges()[e.index()].endpoints;
                LabeledPair { s, t, label: 1 }
            })
            .collect();
        let negs = sample_negatives(g, ids.len(), rng, &taken)?;
        taken.extend(negs.iter().map(|&(s, t)| if s < t { (s, t) } else { (t, s) }));
        out.extend(negs.into_iter().map(|(s, t)| LabeledPair { s, t, label: 0 }));
        out.shuffle(rng);
        Ok(out)
    };
    let train = build(&edges[..a], &mut rng)?;
    let valid = build(&edges[a..b], &mut rng)?;
    let test = build(&edges[b..], &mut rng)?;
    Ok(PairSplits {
        train,
        valid,
        test,
        held_out: edges[a..].to_vec(),
    })
}

/// Edge classification splits over labeled edges; classes are `label - 1`.
pub fn edge_class_splits(g: &TeGraph, seed: u64) -> Result<PairSplits> {
    let labeled: Vec<(EdgeId, LabeledPair)> = g
        .edges()
        .iter()
        .filter_map(|e| {
            e.label.map(|l| {
                (
                    e.id,
                    LabeledPair {
                        s: e.endpoints.0,
                        t: e.endpoints.1,
                        label: l - 1,
                    },
                )
            })
        })
        .collect();
    if labeled.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let mut shuffled = labeled;
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (a, b) = cut_points(shuffled.len());
    let pick = |r: &[(EdgeId, LabeledPair)]| r.iter().map(|x| x.1).collect::<Vec<_>>();
    Ok(PairSplits {
        train: pick(&shuffled[..a]),
        valid: pick(&shuffled[a..b]),
        test: pick(&shuffled[b..]),
        held_out: shuffled[a..].iter().map(|x| x.0).collect(),
    })
}

/// Turns pairs into model inputs over a fixed graph.
#[derive(Debug, Clone, Copy)]
pub struct ExampleBuilder<'a> {
    pub graph: &'a TeGraph,
    pub k: usize,
    /// Depth of the trees that make up a document.
    pub doc_depth: usize,
    pub include_node_text: bool,
}

impl<'a> ExampleBuilder<'a> {
    /// Transition graph of `(s, t)` with the direct edge between them, if
    /// any, masked so a pair never sees its own label.
    pub fn transition_graph(&self, s: NodeId, t: NodeId) -> Result<TransitionGraph> {
        let mask: Vec<EdgeId> = self.graph.edge_between(s, t).into_iter().collect();
        build_transition_graph_masked(self.graph, s, t, self.k, &mask)
    }

    /// Depth `K-1` trees rooted at `s` and `t`. Pairs without a bounded path
    /// get lone-root trees, so their score depends only on the roots.
    pub fn trees(&self, s: NodeId, t: NodeId) -> Result<(BfsTree, BfsTree, Option<TransitionGraph>)> {
        let depth = self.k.saturating_sub(1);
        match self.transition_graph(s, t) {
            Ok(tg) => Ok((extract_bfs_tree(&tg, s, depth)?, extract_bfs_tree(&tg, t, depth)?, Some(tg))),
            Err(Error::NoPath { .. }) => Ok((BfsTree::singleton(s, depth), BfsTree::singleton(t, depth), None)),
            Err(e) => Err(e),
        }
    }

    pub fn document_from(&self, tg: &TransitionGraph) -> Result<TransitionDocument> {
        let tree_s = extract_bfs_tree(tg, tg.source(), self.doc_depth)?;
        let tree_t = extract_bfs_tree(tg, tg.target(), self.doc_depth)?;
        Ok(compose_document(
            &tree_s,
            &tree_t,
            &hidden_edges(&tree_s, tg),
            &hidden_edges(&tree_t, tg),
            &common_nodes(&tree_s, &tree_t),
            self.graph,
            self.include_node_text,
        ))
    }

    /// Model input for one pair. With a provider, pairs that have a
    /// transition graph also carry their document embedding.
    pub fn build(&self, pair: LabeledPair, provider: Option<&dyn EmbeddingProvider>) -> Result<PairExample> {
        let (tree_s, tree_t, tg) = self.trees(pair.s, pair.t)?;
        let doc = match (provider, tg) {
            (Some(p), Some(tg)) => {
                let text = self.document_from(&tg)?.text;
                let v = p.embed(&text)?;
                Some(Array1::from_iter(v.into_iter().map(f64::from)))
            }
            _ => None,
        };
        Ok(PairExample {
            tree_s,
            tree_t,
            label: pair.label,
            doc,
        })
    }

    pub fn build_all(&self, pairs: &[LabeledPair], provider: Option<&dyn EmbeddingProvider>) -> Result<Vec<PairExample>> {
        pairs.par_iter().map(|&p| self.build(p, provider)).collect()
    }
}
