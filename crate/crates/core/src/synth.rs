//! Synthetic review graphs with a planted path-sentiment rule.
//!
//! Nodes are readers and books; every edge carries a short review that is
//! either positive or negative. A pair `(s, t)` at distance `2..=K` is
//! labeled linked when the reviews inside its transition graph are mostly
//! positive, so a model can only recover the label by reading edge text
//! along the routes between the two nodes.

use std::collections::{HashSet, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embed::tokenize;
use crate::error::{Error, Result};
use crate::graph::{EdgeSpec, NodeId, NodeSpec, TeGraph};
use crate::train::LabeledPair;
use crate::transition::build_transition_graph;

pub const POSITIVE_WORDS: [&str; 20] = [
    "good", "great", "excellent", "wonderful", "amazing", "delightful", "superb", "brilliant", "lovely", "fantastic",
    "charming", "enjoyable", "gripping", "moving", "beautiful", "inspiring", "masterful", "vivid", "clever", "heartfelt",
];

pub const NEGATIVE_WORDS: [&str; 20] = [
    "bad", "terrible", "awful", "boring", "dull", "tedious", "weak", "poor", "disappointing", "clumsy", "bland",
    "confusing", "shallow", "predictable", "tiresome", "flat", "messy", "lifeless", "forgettable", "dreadful",
];

const FILLER: [&str; 20] = [
    "the", "book", "story", "plot", "reader", "chapter", "author", "pages", "ending", "characters", "felt", "was",
    "seemed", "quite", "really", "overall", "honestly", "style", "writing", "pace",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_nodes: usize,
    pub seed: u64,
    /// Edges per node on average.
    pub avg_degree: f64,
    /// Labeled pairs per node.
    pub pairs_per_node: f64,
    /// Path bound used for labeling.
    pub k: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_nodes: 1000,
            seed: 7,
            avg_degree: 4.0,
            pairs_per_node: 4.0,
            k: 4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthData {
    pub graph: TeGraph,
    pub pairs: Vec<LabeledPair>,
}

/// `+1` when positive words outnumber negative ones, `-1` for the reverse,
/// `0` otherwise.
pub fn sentiment(text: &str) -> i32 {
    let mut score = 0i32;
    for tok in tokenize(text) {
        if POSITIVE_WORDS.contains(&tok.as_str()) {
            score += 1;
        } else if NEGATIVE_WORDS.contains(&tok.as_str()) {
            score -= 1;
        }
    }
    score.signum()
}

fn review(rng: &mut ChaCha8Rng, positive: bool) -> String {
    let words = if positive { &POSITIVE_WORDS } else { &NEGATIVE_WORDS };
    let mut tokens: Vec<&str> = (0..rng.gen_range(3..=6)).map(|_| *FILLER.choose(rng).unwrap()).collect();
    for _ in 0..2 {
        let at = rng.gen_range(0..=tokens.len());
        tokens.insert(at, words.choose(rng).unwrap());
    }
    tokens.join(" ")
}

fn distances_within(g: &TeGraph, s: NodeId, k: usize) -> Vec<(NodeId, usize)> {
    let mut dist = vec![usize::MAX; g.node_count()];
    dist[s.index()] = 0;
    let mut queue = VecDeque::from([s]);
    let mut out = Vec::new();
    while let Some(u) = queue.pop_front() {
        let d = dist[u.index()];
        if d == k {
            continue;
        }
        for &(v, _) in g.neighbors(u).expect("node from this graph") {
            if dist[v.index()] == usize::MAX {
                dist[v.index()] = d + 1;
                out.push((v, d + 1));
                queue.push_back(v);
            }
        }
    }
    out
}

/// Majority sentiment of the edges in the `k`-bounded transition graph, or
/// `None` on a tie or when no such path exists.
pub fn path_label(g: &TeGraph, s: NodeId, t: NodeId, k: usize) -> Option<u32> {
    let tg = build_transition_graph(g, s, t, k).ok()?;
    let score: i32 = tg.edges().iter().map(|(e, _, _)| sentiment(&g.edges()[e.index()].text)).sum();
    match score.signum() {
        1 => Some(1),
        -1 => Some(0),
        _ => None,
    }
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthData> {
    if cfg.n_nodes < 10 {
        return Err(Error::InvalidArgument(format!("need at least 10 nodes, got {}", cfg.n_nodes)));
    }
    if cfg.k < 2 {
        return Err(Error::InvalidArgument("labeling bound K must be at least 2".into()));
    }
    let n = cfg.n_nodes;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let width = n.to_string().len();
    let key = |i: usize| format!("n{i:0width$}");
    let nodes = (0..n)
        .map(|i| NodeSpec {
            key: key(i),
            text: format!("{} {i}", if i % 2 == 0 { "reader" } else { "book" }),
        })
        .collect();

    let target_edges = ((n as f64 * cfg.avg_degree / 2.0).round() as usize).min(n * (n - 1) / 2);
    let mut seen = HashSet::new();
    let mut edges = Vec::with_capacity(target_edges);
    while edges.len() < target_edges {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a == b || !seen.insert((a.min(b), a.max(b))) {
            continue;
        }
        let positive = rng.gen_bool(0.5);
        edges.push(EdgeSpec {
            key: format!("e{}", edges.len()),
            src: key(a),
            dst: key(b),
            text: review(&mut rng, positive),
            label: Some(if positive { 2 } else { 1 }),
        });
    }
    let graph = TeGraph::from_parts(nodes, edges)?;

    let wanted = (n as f64 * cfg.pairs_per_node).round() as usize;
    let mut pairs = Vec::with_capacity(wanted);
    let mut used = HashSet::new();
    let mut attempts = 0usize;
    while pairs.len() < wanted {
        attempts += 1;
        if attempts > 50 * wanted.max(1) {
            return Err(Error::InvalidArgument(format!(
                "could only label {} of {wanted} pairs; graph too sparse",
                pairs.len()
            )));
        }
        let s = NodeId(rng.gen_range(0..n as u32));
        let far: Vec<NodeId> = distances_within(&graph, s, cfg.k)
            .into_iter()
            .filter(|&(_, d)| d >= 2)
            .map(|(v, _)| v)
            .collect();
        let Some(&t) = far.choose(&mut rng) else { continue };
        if !used.insert((s.min(t), s.max(t))) {
            continue;
        }
        if let Some(label) = path_label(&graph, s, t, cfg.k) {
            pairs.push(LabeledPair { s, t, label });
        }
    }
    Ok(SynthData { graph, pairs })
}
