//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};

use ndarray::{Array1, Array2};
use rand::Rng;
use tegdoc::embed::FeatureTable;
use tegdoc::graph::{EdgeId, EdgeSpec, NodeId, NodeSpec, TeGraph};
use tegdoc::tgnn::{TgnnDims, TgnnParams};
use tegdoc::transition::BfsTree;

/// Random tree on nodes `offset..offset+size` whose depth never exceeds
/// `depth`; edge `i` joins node `i + 1` to its parent.
pub fn random_tree(rng: &mut impl Rng, offset: u32, size: u32, depth: usize) -> BfsTree {
    let mut level = vec![0usize; size as usize];
    let mut links = Vec::new();
    for i in 1..size {
        let open: Vec<u32> = (0..i).filter(|&p| level[p as usize] < depth).collect();
        let p = open[rng.gen_range(0..open.len())];
        level[i as usize] = level[p as usize] + 1;
        links.push((NodeId(offset + p), NodeId(offset + i), EdgeId(offset + i - 1)));
    }
    BfsTree::from_links(NodeId(offset), depth, &links).unwrap()
}

/// Complete binary tree of the given depth.
pub fn binary_tree(depth: usize) -> BfsTree {
    let n = (1u32 << (depth + 1)) - 1;
    let links: Vec<_> = (1..n).map(|i| (NodeId((i - 1) / 2), NodeId(i), EdgeId(i - 1))).collect();
    BfsTree::from_links(NodeId(0), depth, &links).unwrap()
}

pub fn random_features(rng: &mut impl Rng, count: usize, d_node: usize, d_edge: usize) -> FeatureTable {
    let vecs = |d: usize, rng: &mut dyn rand::RngCore| -> Vec<Vec<f64>> {
        (0..count).map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect()
    };
    let nodes = vecs(d_node, rng);
    let edges = vecs(d_edge, rng);
    FeatureTable::from_vectors(d_node, d_edge, nodes, edges).unwrap()
}

pub fn random_params(rng: &mut impl Rng, dims: TgnnDims, scale: f64) -> TgnnParams {
    let mut p = TgnnParams::zeros(dims);
    for t in p.tensors_mut() {
        t.iter_mut().for_each(|x| *x = rng.gen_range(-scale..scale));
    }
    p
}

fn vec_of(v: &[f64]) -> Array1<f64> {
    Array1::from(v.to_vec())
}

fn mat(w: &Array2<f64>, x: &Array1<f64>) -> Array1<f64> {
    Array1::from_shape_fn(w.nrows(), |i| (0..w.ncols()).map(|j| w[[i, j]] * x[j]).sum())
}

/// `H(u, m)` straight from the recurrence, with no state sharing.
pub fn reference_state(tree: &BfsTree, u: NodeId, m: usize, f: &FeatureTable, p: &TgnnParams) -> Array1<f64> {
    if m == 0 {
        return mat(&p.w_node_in, &vec_of(f.node(u)));
    }
    let children = tree.children(u);
    let mut agg = Array1::zeros(p.b.len());
    for &(v, e) in children {
        agg = agg + reference_state(tree, v, m - 1, f, p) + mat(&p.w_edge, &vec_of(f.edge(e)));
    }
    if !children.is_empty() {
        agg /= children.len() as f64;
    }
    let pre = mat(&p.w_self, &reference_state(tree, u, m - 1, f, p)) + mat(&p.w_msg, &agg) + &p.b;
    pre.mapv(f64::tanh)
}

pub fn layer_sizes(tree: &BfsTree) -> Vec<usize> {
    tree.layers().iter().map(Vec::len).collect()
}

/// Updates spent by `n` synchronous rounds over the first `n + 1` layers,
/// summed over cuts `1..K`.
pub fn naive_update_count(layers: &[usize], k: usize) -> usize {
    (1..k).map(|n| n * layers[..=n.min(layers.len() - 1)].iter().sum::<usize>()).sum()
}

/// One update per node above the cut, per cut.
pub fn cascaded_update_count(layers: &[usize], k: usize) -> usize {
    (1..k).map(|n| layers[..n.min(layers.len())].iter().sum::<usize>()).sum()
}

pub fn random_graph(rng: &mut impl Rng, n: usize, p: f64) -> TeGraph {
    let nodes = (0..n).map(|i| NodeSpec { key: format!("v{i}"), text: format!("node {i}") }).collect();
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(p) {
                edges.push(EdgeSpec {
                    key: format!("e{a}_{b}"),
                    src: format!("v{a}"),
                    dst: format!("v{b}"),
                    text: format!("edge {a} {b} [tag] 1.2"),
                    label: None,
                });
            }
        }
    }
    TeGraph::from_parts(nodes, edges).unwrap()
}

/// Nodes and edges lying on some simple `s`-`t` path with at most `k` edges,
/// by exhaustive DFS.
pub fn simple_path_oracle(g: &TeGraph, s: NodeId, t: NodeId, k: usize) -> (BTreeSet<NodeId>, BTreeSet<EdgeId>) {
    fn go(
        g: &TeGraph,
        u: NodeId,
        t: NodeId,
        left: usize,
        path: &mut Vec<(NodeId, Option<EdgeId>)>,
        nodes: &mut BTreeSet<NodeId>,
        edges: &mut BTreeSet<EdgeId>,
    ) {
        if u == t {
            for &(v, e) in path.iter() {
                nodes.insert(v);
                edges.extend(e);
            }
            return;
        }
        if left == 0 {
            return;
        }
        for &(v, e) in g.neighbors(u).unwrap() {
            if path.iter().any(|&(w, _)| w == v) {
                continue;
            }
            path.push((v, Some(e)));
            go(g, v, t, left - 1, path, nodes, edges);
            path.pop();
        }
    }
    let (mut nodes, mut edges) = (BTreeSet::new(), BTreeSet::new());
    go(g, s, t, k, &mut vec![(s, None)], &mut nodes, &mut edges);
    (nodes, edges)
}

/// Unbounded BFS hop distances from `s`.
pub fn hop_distances(g: &TeGraph, s: NodeId) -> Vec<Option<usize>> {
    let mut d = vec![None; g.node_count()];
    d[s.index()] = Some(0);
    let mut q = VecDeque::from([s]);
    while let Some(u) = q.pop_front() {
        for &(v, _) in g.neighbors(u).unwrap() {
            if d[v.index()].is_none() {
                d[v.index()] = Some(d[u.index()].unwrap() + 1);
                q.push_back(v);
            }
        }
    }
    d
}

/// Fraction of positive/negative pairs ordered correctly, ties one half.
pub fn brute_auc(pos: &[f64], neg: &[f64]) -> f64 {
    let mut s = 0.0;
    for p in pos {
        for n in neg {
            s += if p > n {
                1.0
            } else if p == n {
                0.5
            } else {
                0.0
            };
        }
    }
    s / (pos.len() * neg.len()) as f64
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}
