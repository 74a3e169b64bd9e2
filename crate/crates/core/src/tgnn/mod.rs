//! Message passing over BFS layers toward a root, per-cut root embeddings,
//! and the pair fusion and prediction heads.
//!
//! For a tree rooted at `x`, let `H(u, 0) = W_node_in·x_u` and
//!
//! ```text
//! H(u, m) = tanh(W_self·H(u, m-1) + W_msg·mean_{v child of u}(H(v, m-1) + W_edge·e_uv) + b)
//! ```
//!
//! with a zero aggregate for childless nodes. The cut-`n` embedding of `x` is
//! `H(x, n)`: every node at layer `l < n` has been updated `n - l` times.
//! [`naive_cut_embedding`] evaluates each cut from scratch;
//! [`cascaded_cut_embeddings`] keeps one state per node and advances all cuts
//! in a single sweep, updating each node once per cut.

mod checkpoint;
mod params;

use std::collections::HashMap;

use ndarray::{Array1, ArrayView1, Axis};

use crate::embed::FeatureTable;
use crate::error::{Error, Result};
use crate::graph::{EdgeId, NodeId};
use crate::transition::BfsTree;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use params::{TgnnDims, TgnnParams, TENSOR_NAMES};

fn check_len(what: &str, got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(Error::Shape(format!("{what}: expected length {expected}, got {got}")));
    }
    Ok(())
}

/// Edge-conditioned message `h_child + W_edge·e`.
pub fn message(h_child: ArrayView1<f64>, e_feat: ArrayView1<f64>, theta: &TgnnParams) -> Result<Array1<f64>> {
    check_len("child state", h_child.len(), theta.w_edge.nrows())?;
    check_len("edge feature", e_feat.len(), theta.w_edge.ncols())?;
    Ok(&h_child + &theta.w_edge.dot(&e_feat))
}

/// `tanh(W_self·h_prev + W_msg·agg + b)`.
pub fn update(h_prev: ArrayView1<f64>, agg: ArrayView1<f64>, theta: &TgnnParams) -> Result<Array1<f64>> {
    let d_h = theta.w_self.nrows();
    check_len("previous state", h_prev.len(), d_h)?;
    check_len("aggregate", agg.len(), d_h)?;
    let mut z = theta.w_self.dot(&h_prev) + theta.w_msg.dot(&agg) + &theta.b;
    z.mapv_inplace(f64::tanh);
    Ok(z)
}

fn input_state(u: NodeId, features: &FeatureTable, theta: &TgnnParams) -> Result<Array1<f64>> {
    let x = features.node(u);
    check_len("node feature", x.len(), theta.w_node_in.ncols())?;
    Ok(theta.w_node_in.dot(&ArrayView1::from(x)))
}

fn check_cut(tree: &BfsTree, n: usize) -> Result<()> {
    if n == 0 || n > tree.depth() {
        return Err(Error::InvalidArgument(format!(
            "cut {n} outside 1..={} for a tree of depth {}",
            tree.depth(),
            tree.depth()
        )));
    }
    Ok(())
}

/// Cut-`n` embedding of the tree root, computed from scratch.
pub fn naive_cut_embedding(tree: &BfsTree, n: usize, features: &FeatureTable, theta: &TgnnParams) -> Result<Array1<f64>> {
    naive_cut_embedding_counted(tree, n, features, theta).map(|(h, _)| h)
}

/// [`naive_cut_embedding`] plus the number of [`update`] calls it made: `n`
/// synchronous rounds over every node within depth `n`.
pub fn naive_cut_embedding_counted(
    tree: &BfsTree,
    n: usize,
    features: &FeatureTable,
    theta: &TgnnParams,
) -> Result<(Array1<f64>, usize)> {
    check_cut(tree, n)?;
    let within: Vec<NodeId> = tree.layers().iter().take(n + 1).flatten().copied().collect();
    let mut state: HashMap<NodeId, Array1<f64>> = HashMap::with_capacity(within.len());
    for &u in &within {
        state.insert(u, input_state(u, features, theta)?);
    }
    let d_h = theta.w_self.nrows();
    let mut updates = 0;
    for _ in 0..n {
        let mut next = HashMap::with_capacity(within.len());
        for &u in &within {
            let kids: Vec<&(NodeId, EdgeId)> = tree.children(u).iter().filter(|(v, _)| state.contains_key(v)).collect();
            let mut agg = Array1::zeros(d_h);
            for &&(v, e) in &kids {
                agg += &message(state[&v].view(), ArrayView1::from(features.edge(e)), theta)?;
            }
            if !kids.is_empty() {
                agg /= kids.len() as f64;
            }
            next.insert(u, update(state[&u].view(), agg.view(), theta)?);
            updates += 1;
        }
        state = next;
    }
    Ok((state.remove(&tree.root()).expect("root is within every cut"), updates))
}

/// Tree laid out for the cascaded sweep: nodes in BFS order with local
/// indices, each child's precomputed edge term `W_edge·e`.
#[derive(Debug, Clone)]
struct Plan {
    nodes: Vec<NodeId>,
    /// Local index ranges per layer.
    layers: Vec<std::ops::Range<usize>>,
    children: Vec<Vec<(usize, EdgeId)>>,
}

impl Plan {
    fn new(tree: &BfsTree) -> Self {
        let nodes: Vec<NodeId> = tree.layers().iter().flatten().copied().collect();
        let local: HashMap<NodeId, usize> = nodes.iter().enumerate().map(|(i, &u)| (u, i)).collect();
        let mut layers = Vec::with_capacity(tree.layers().len());
        let mut start = 0;
        for layer in tree.layers() {
            layers.push(start..start + layer.len());
            start += layer.len();
        }
        let children = nodes
            .iter()
            .map(|&u| tree.children(u).iter().map(|&(v, e)| (local[&v], e)).collect())
            .collect();
        Plan { nodes, layers, children }
    }
}

/// One recorded [`update`]: inputs and output of node `node`.
#[derive(Debug, Clone)]
struct Step {
    node: usize,
    h_prev: Array1<f64>,
    agg: Array1<f64>,
    out: Array1<f64>,
}

/// Forward record of a cascaded sweep, enough to replay it backward.
#[derive(Debug, Clone)]
pub(crate) struct CascadeTape {
    plan: Plan,
    steps: Vec<Step>,
    /// `steps[cut_ends[n-1]..cut_ends[n]]` belong to cut `n` (1-based).
    cut_ends: Vec<usize>,
}

/// Per-cut root embeddings `h^(1..K-1)` and the number of [`update`] calls.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeOutput {
    pub cuts: Vec<Array1<f64>>,
    pub updates: usize,
}

/// All `K-1` cut embeddings of the tree root in one sweep.
pub fn cascaded_cut_embeddings(tree: &BfsTree, k: usize, features: &FeatureTable, theta: &TgnnParams) -> Result<Vec<Array1<f64>>> {
    Ok(cascade(tree, k, features, theta, false)?.0.cuts)
}

pub fn cascaded_cut_embeddings_counted(
    tree: &BfsTree,
    k: usize,
    features: &FeatureTable,
    theta: &TgnnParams,
) -> Result<CascadeOutput> {
    Ok(cascade(tree, k, features, theta, false)?.0)
}

pub(crate) fn cascade(
    tree: &BfsTree,
    k: usize,
    features: &FeatureTable,
    theta: &TgnnParams,
    record: bool,
) -> Result<(CascadeOutput, Option<CascadeTape>)> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("need K >= 2 for at least one cut, got {k}")));
    }
    check_cut(tree, k - 1)?;
    let plan = Plan::new(tree);
    let d_h = theta.w_self.nrows();
    let mut state = plan
        .nodes
        .iter()
        .map(|&u| input_state(u, features, theta))
        .collect::<Result<Vec<_>>>()?;
    let mut edge_term: HashMap<EdgeId, Array1<f64>> = HashMap::new();
    for kids in &plan.children {
        for &(_, e) in kids {
            let x = features.edge(e);
            check_len("edge feature", x.len(), theta.w_edge.ncols())?;
            edge_term.insert(e, theta.w_edge.dot(&ArrayView1::from(x)));
        }
    }

    let mut cuts = Vec::with_capacity(k - 1);
    let mut steps = Vec::new();
    let mut cut_ends = vec![0];
    let mut updates = 0;
    for n in 1..k {
        for layer in (0..n.min(plan.layers.len())).rev() {
            for u in plan.layers[layer].clone() {
                let kids = &plan.children[u];
                let mut agg = Array1::zeros(d_h);
                for (v, e) in kids {
                    agg += &state[*v];
                    agg += &edge_term[e];
                }
                if !kids.is_empty() {
                    agg /= kids.len() as f64;
                }
                let out = update(state[u].view(), agg.view(), theta)?;
                updates += 1;
                if record {
                    steps.push(Step {
                        node: u,
                        h_prev: state[u].clone(),
                        agg,
                        out: out.clone(),
                    });
                }
                state[u] = out;
            }
        }
        cut_ends.push(steps.len());
        cuts.push(state[0].clone());
    }
    let tape = record.then_some(CascadeTape { plan, steps, cut_ends });
    Ok((CascadeOutput { cuts, updates }, tape))
}

impl CascadeTape {
    /// Accumulates parameter gradients into `grads` given the loss gradient
    /// with respect to each cut embedding (`grad_cuts[n-1]` for cut `n`).
    pub(crate) fn backward(&self, grad_cuts: &[Array1<f64>], features: &FeatureTable, theta: &TgnnParams, grads: &mut TgnnParams) {
        let d_h = theta.w_self.nrows();
        let mut adj: Vec<Array1<f64>> = vec![Array1::zeros(d_h); self.plan.nodes.len()];
        for n in (1..self.cut_ends.len()).rev() {
            adj[0] += &grad_cuts[n - 1];
            for step in self.steps[self.cut_ends[n - 1]..self.cut_ends[n]].iter().rev() {
                let g_out = std::mem::replace(&mut adj[step.node], Array1::zeros(d_h));
                let g_z = &g_out * &step.out.mapv(|h| 1.0 - h * h);
                add_outer(&mut grads.w_self, &g_z, step.h_prev.view());
                add_outer(&mut grads.w_msg, &g_z, step.agg.view());
                grads.b += &g_z;
                adj[step.node] = theta.w_self.t().dot(&g_z);
                let kids = &self.plan.children[step.node];
                if !kids.is_empty() {
                    let g_msg = theta.w_msg.t().dot(&g_z) / kids.len() as f64;
                    for &(v, e) in kids {
                        adj[v] += &g_msg;
                        add_outer(&mut grads.w_edge, &g_msg, ArrayView1::from(features.edge(e)));
                    }
                }
            }
        }
        for (i, &u) in self.plan.nodes.iter().enumerate() {
            add_outer(&mut grads.w_node_in, &adj[i], ArrayView1::from(features.node(u)));
        }
    }
}

/// `w += g·xᵀ`.
pub(crate) fn add_outer(w: &mut ndarray::Array2<f64>, g: &Array1<f64>, x: ArrayView1<f64>) {
    for (mut row, gi) in w.axis_iter_mut(Axis(0)).zip(g.iter()) {
        if *gi != 0.0 {
            row.scaled_add(*gi, &x);
        }
    }
}

/// Cut embeddings of both endpoints of a pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CutEmbeddings {
    /// `h_s^(n)`, n = 1..K-1.
    pub source: Vec<Array1<f64>>,
    /// `h_t^(K-n)`, n = 1..K-1.
    pub target: Vec<Array1<f64>>,
}

impl CutEmbeddings {
    /// Pairs the cuts of `s` (ascending) with those of `t` (descending).
    pub fn from_cascades(source: Vec<Array1<f64>>, mut target: Vec<Array1<f64>>) -> Result<Self> {
        if source.is_empty() || source.len() != target.len() {
            return Err(Error::Shape(format!(
                "cut counts differ or are empty: {} vs {}",
                source.len(),
                target.len()
            )));
        }
        target.reverse();
        Ok(CutEmbeddings { source, target })
    }
}

pub fn cut_embeddings(tree_s: &BfsTree, tree_t: &BfsTree, k: usize, features: &FeatureTable, theta: &TgnnParams) -> Result<CutEmbeddings> {
    CutEmbeddings::from_cascades(
        cascaded_cut_embeddings(tree_s, k, features, theta)?,
        cascaded_cut_embeddings(tree_t, k, features, theta)?,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairEmbedding {
    pub h_bar_s: Array1<f64>,
    pub h_bar_t: Array1<f64>,
    /// Unit-norm (or zero) output of the fusion head.
    pub fused: Array1<f64>,
}

/// Intermediate values of the fusion head.
#[derive(Debug, Clone)]
pub(crate) struct FuseTape {
    concat: Array1<f64>,
    hidden: Array1<f64>,
    norm: f64,
    cuts: usize,
}

fn mean(vs: &[Array1<f64>]) -> Array1<f64> {
    let mut acc = vs[0].clone();
    for v in &vs[1..] {
        acc += v;
    }
    acc / vs.len() as f64
}

/// Averages the cuts of each side and maps their concatenation through `g`.
pub fn fuse_pair(cuts: &CutEmbeddings, theta: &TgnnParams) -> Result<PairEmbedding> {
    fuse(cuts, theta).map(|(pe, _)| pe)
}

pub(crate) fn fuse(cuts: &CutEmbeddings, theta: &TgnnParams) -> Result<(PairEmbedding, FuseTape)> {
    if cuts.source.is_empty() || cuts.target.is_empty() {
        return Err(Error::InvalidArgument("no cut embeddings to fuse".into()));
    }
    let d_h = theta.w_self.nrows();
    for v in cuts.source.iter().chain(&cuts.target) {
        check_len("cut embedding", v.len(), d_h)?;
    }
    let h_bar_s = mean(&cuts.source);
    let h_bar_t = mean(&cuts.target);
    let concat = ndarray::concatenate![Axis(0), h_bar_s, h_bar_t];
    let hidden = (theta.g1_w.dot(&concat) + &theta.g1_b).mapv(f64::tanh);
    let out = theta.g2_w.dot(&hidden) + &theta.g2_b;
    let norm = out.dot(&out).sqrt();
    let fused = if norm > 0.0 { out / norm } else { out };
    let tape = FuseTape {
        concat,
        hidden,
        norm,
        cuts: cuts.source.len(),
    };
    Ok((PairEmbedding { h_bar_s, h_bar_t, fused }, tape))
}

impl FuseTape {
    /// Backpropagates `g_fused` through `g`; returns the gradient for each
    /// individual cut embedding of `s` and `t`.
    pub(crate) fn backward(&self, fused: &Array1<f64>, g_fused: &Array1<f64>, theta: &TgnnParams, grads: &mut TgnnParams) -> (Array1<f64>, Array1<f64>) {
        let g_out = if self.norm > 0.0 {
            (g_fused - &(fused * fused.dot(g_fused))) / self.norm
        } else {
            Array1::zeros(g_fused.len())
        };
        add_outer(&mut grads.g2_w, &g_out, self.hidden.view());
        grads.g2_b += &g_out;
        let g_hidden = theta.g2_w.t().dot(&g_out);
        let g_a = &g_hidden * &self.hidden.mapv(|h| 1.0 - h * h);
        add_outer(&mut grads.g1_w, &g_a, self.concat.view());
        grads.g1_b += &g_a;
        let g_concat = theta.g1_w.t().dot(&g_a) / self.cuts as f64;
        let d_h = theta.w_self.nrows();
        (
            g_concat.slice(ndarray::s![..d_h]).to_owned(),
            g_concat.slice(ndarray::s![d_h..]).to_owned(),
        )
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Raw output-head scores, one per output.
pub fn logits(pe: &PairEmbedding, theta: &TgnnParams) -> Array1<f64> {
    theta.clf_w.dot(&pe.fused) + &theta.clf_b
}

/// Link probability from the first output of the head.
pub fn predict_link(pe: &PairEmbedding, theta: &TgnnParams) -> f64 {
    sigmoid(logits(pe, theta)[0])
}

pub fn softmax(z: &Array1<f64>) -> Array1<f64> {
    let m = z.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let e = z.mapv(|x| (x - m).exp());
    let s = e.sum();
    e / s
}

/// Class distribution for edge classification.
pub fn predict_classes(pe: &PairEmbedding, theta: &TgnnParams) -> Array1<f64> {
    softmax(&logits(pe, theta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{arr1, arr2};

    fn dims1() -> TgnnDims {
        TgnnDims { d_h: 1, d_node: 1, d_edge: 1, d_doc: 2, n_out: 1 }
    }

    fn chain(len: usize, depth: usize) -> BfsTree {
        let links: Vec<_> = (0..len).map(|i| (NodeId(i as u32), NodeId(i as u32 + 1), EdgeId(i as u32))).collect();
        BfsTree::from_links(NodeId(0), depth, &links).unwrap()
    }

    fn features(nodes: Vec<f64>, edges: Vec<f64>) -> FeatureTable {
        FeatureTable::from_vectors(1, 1, nodes.into_iter().map(|x| vec![x]).collect(), edges.into_iter().map(|x| vec![x]).collect()).unwrap()
    }

    #[test]
    fn message_examples() {
        let mut p = TgnnParams::zeros(TgnnDims { d_h: 2, d_node: 1, d_edge: 1, d_doc: 2, n_out: 1 });
        let h = arr1(&[1.0, 0.0]);
        assert_eq!(message(h.view(), arr1(&[0.0]).view(), &p).unwrap(), h);
        assert_eq!(message(h.view(), arr1(&[5.0]).view(), &p).unwrap(), h);
        p.w_edge = arr2(&[[2.0], [0.0]]);
        assert_eq!(message(h.view(), arr1(&[1.0]).view(), &p).unwrap(), arr1(&[3.0, 0.0]));
        assert!(matches!(message(h.view(), arr1(&[1.0, 2.0]).view(), &p), Err(Error::Shape(_))));
    }

    #[test]
    fn update_examples() {
        let mut p = TgnnParams::zeros(dims1());
        assert_eq!(update(arr1(&[0.0]).view(), arr1(&[0.0]).view(), &p).unwrap(), arr1(&[0.0]));
        p.w_self = arr2(&[[1.0]]);
        p.w_msg = arr2(&[[1.0]]);
        let y = update(arr1(&[0.5]).view(), arr1(&[0.5]).view(), &p).unwrap();
        assert!((y[0] - 1f64.tanh()).abs() < 1e-15);
        assert!((y[0] - 0.7616).abs() < 1e-4);
        p.w_msg = arr2(&[[0.0]]);
        let a = update(arr1(&[0.5]).view(), arr1(&[0.1]).view(), &p).unwrap();
        let b = update(arr1(&[0.5]).view(), arr1(&[9.0]).view(), &p).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn scalar_chain_trace() {
        let mut p = TgnnParams::zeros(dims1());
        p.w_msg = arr2(&[[1.0]]);
        p.w_node_in = arr2(&[[1.0]]);
        let tree = chain(1, 1);
        let f = features(vec![0.0, 0.3], vec![0.7]);
        let h = naive_cut_embedding(&tree, 1, &f, &p).unwrap();
        assert!((h[0] - 0.3f64.tanh()).abs() < 1e-15);
        assert!((h[0] - 0.2913).abs() < 1e-4);
        assert_eq!(cascaded_cut_embeddings(&tree, 2, &f, &p).unwrap(), vec![h]);
    }

    #[test]
    fn zero_parameters_give_zero() {
        let p = TgnnParams::zeros(dims1());
        let tree = chain(3, 3);
        let f = features(vec![1.0; 4], vec![1.0; 3]);
        for n in 1..=3 {
            assert_eq!(naive_cut_embedding(&tree, n, &f, &p).unwrap(), arr1(&[0.0]));
        }
    }

    #[test]
    fn cut_range_checked() {
        let p = TgnnParams::zeros(dims1());
        let tree = chain(2, 2);
        let f = features(vec![0.0; 3], vec![0.0; 2]);
        assert!(naive_cut_embedding(&tree, 0, &f, &p).is_err());
        assert!(naive_cut_embedding(&tree, 3, &f, &p).is_err());
        assert!(cascaded_cut_embeddings(&tree, 4, &f, &p).is_err());
        assert!(cascaded_cut_embeddings(&tree, 1, &f, &p).is_err());
    }

    #[test]
    fn lone_root_follows_leaf_rule() {
        let mut p = TgnnParams::zeros(dims1());
        p.w_self = arr2(&[[0.8]]);
        p.b = arr1(&[0.1]);
        p.w_node_in = arr2(&[[1.0]]);
        let tree = BfsTree::singleton(NodeId(0), 3);
        let f = features(vec![0.5], vec![]);
        let cuts = cascaded_cut_embeddings(&tree, 4, &f, &p).unwrap();
        let mut h = 0.5f64;
        for c in &cuts {
            h = (0.8 * h + 0.1).tanh();
            assert!((c[0] - h).abs() < 1e-15);
        }
    }

    #[test]
    fn cascaded_uses_fewer_updates() {
        // Complete binary tree with 15 nodes, depth 3.
        let links: Vec<_> = (1..15u32).map(|i| (NodeId((i - 1) / 2), NodeId(i), EdgeId(i - 1))).collect();
        let tree = BfsTree::from_links(NodeId(0), 3, &links).unwrap();
        let p = TgnnParams::init(dims1(), 3).unwrap();
        let f = features(vec![0.1; 15], vec![0.2; 14]);
        let out = cascaded_cut_embeddings_counted(&tree, 4, &f, &p).unwrap();
        // Layers below cut n: 1, 1+2, 1+2+4.
        assert_eq!(out.updates, 1 + 3 + 7);
        let naive: usize = (1..=3).map(|n| naive_cut_embedding_counted(&tree, n, &f, &p).unwrap().1).sum();
        // n rounds over 2^(n+1)-1 nodes.
        assert_eq!(naive, 3 + 2 * 7 + 3 * 15);
        assert!(out.updates < naive);
    }

    #[test]
    fn fuse_means() {
        let mut p = TgnnParams::zeros(TgnnDims { d_h: 2, d_node: 1, d_edge: 1, d_doc: 3, n_out: 1 });
        p.g2_b = arr1(&[3.0, 0.0, 4.0]);
        let cuts = CutEmbeddings::from_cascades(
            vec![arr1(&[1.0, 0.0]), arr1(&[0.0, 1.0])],
            vec![arr1(&[2.0, 2.0]), arr1(&[2.0, 2.0])],
        )
        .unwrap();
        let pe = fuse_pair(&cuts, &p).unwrap();
        assert_eq!(pe.h_bar_s, arr1(&[0.5, 0.5]));
        assert_eq!(pe.h_bar_t, arr1(&[2.0, 2.0]));
        assert_eq!(pe.fused, arr1(&[0.6, 0.0, 0.8]));
        assert_eq!(predict_link(&pe, &p), 0.5);
        let one = CutEmbeddings::from_cascades(vec![arr1(&[0.3, -0.1])], vec![arr1(&[0.0, 0.2])]).unwrap();
        assert_eq!(fuse_pair(&one, &p).unwrap().h_bar_s, arr1(&[0.3, -0.1]));
        assert!(CutEmbeddings::from_cascades(vec![], vec![]).is_err());
    }

    #[test]
    fn link_probability() {
        assert!((sigmoid(0.8473) - 0.7).abs() < 1e-4);
        assert!((sigmoid(0.7f64.ln() - 0.3f64.ln()) - 0.7).abs() < 1e-15);
        assert!(sigmoid(-1.0) < sigmoid(0.0) && sigmoid(0.0) < sigmoid(1.0));
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
        let s = softmax(&arr1(&[1.0, 1.0, 1.0, 1.0]));
        assert!(s.iter().all(|x| (*x - 0.25).abs() < 1e-15));
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;
        use rand::seq::SliceRandom;
        use rand::{Rng, SeedableRng};
        use rand_chacha::ChaCha8Rng;

        struct Case {
            tree: BfsTree,
            links: Vec<(usize, usize)>,
            k: usize,
            nodes: Vec<Vec<f64>>,
            edges: Vec<Vec<f64>>,
            theta: TgnnParams,
        }

        fn case(seed: u64, size: usize, k: usize) -> Case {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut level = vec![0usize; size];
            let mut links = Vec::new();
            for i in 1..size {
                let open: Vec<usize> = (0..i).filter(|&p| level[p] < k - 1).collect();
                let p = *open.choose(&mut rng).unwrap();
                level[i] = level[p] + 1;
                links.push((p, i));
            }
            let ids: Vec<_> = links.iter().enumerate().map(|(e, &(p, c))| (NodeId(p as u32), NodeId(c as u32), EdgeId(e as u32))).collect();
            let tree = BfsTree::from_links(NodeId(0), k - 1, &ids).unwrap();
            let dims = TgnnDims { d_h: 5, d_node: 3, d_edge: 4, d_doc: 2, n_out: 1 };
            let mut theta = TgnnParams::zeros(dims);
            for t in theta.tensors_mut() {
                t.iter_mut().for_each(|x| *x = rng.gen_range(-0.9..0.9));
            }
            let vecs = |n: usize, d: usize, rng: &mut ChaCha8Rng| -> Vec<Vec<f64>> { (0..n).map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect() };
            let nodes = vecs(size, 3, &mut rng);
            let edges = vecs(size.max(1), 4, &mut rng);
            Case { tree, links, k, nodes, edges, theta }
        }

        fn max_dev(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
            let scale = b.iter().fold(1e-300f64, |m, x| m.max(x.abs()));
            (a - b).iter().fold(0.0f64, |m, x| m.max(x.abs())) / scale
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(256))]

            #[test]
            fn cascaded_matches_naive(seed in any::<u64>(), size in 1usize..=50, k in 2usize..=6) {
                let c = case(seed, size, k);
                let f = FeatureTable::from_vectors(3, 4, c.nodes.clone(), c.edges.clone()).unwrap();
                let cuts = cascaded_cut_embeddings(&c.tree, c.k, &f, &c.theta).unwrap();
                prop_assert_eq!(cuts.len(), c.k - 1);
                for n in 1..=c.tree.depth().min(c.k - 1) {
                    let naive = naive_cut_embedding(&c.tree, n, &f, &c.theta).unwrap();
                    prop_assert!(max_dev(&cuts[n - 1], &naive) < 1e-9);
                }
            }

            #[test]
            fn relabeling_nodes_and_edges_changes_nothing(seed in any::<u64>(), size in 1usize..=30, k in 2usize..=5) {
                let c = case(seed, size, k);
                let f = FeatureTable::from_vectors(3, 4, c.nodes.clone(), c.edges.clone()).unwrap();
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA5A5);
                let mut node_perm: Vec<usize> = (0..size).collect();
                node_perm.shuffle(&mut rng);
                let mut edge_perm: Vec<usize> = (0..c.links.len()).collect();
                edge_perm.shuffle(&mut rng);
                let links: Vec<_> = c.links.iter().enumerate()
                    .map(|(e, &(p, ch))| (NodeId(node_perm[p] as u32), NodeId(node_perm[ch] as u32), EdgeId(edge_perm[e] as u32)))
                    .collect();
                let tree = BfsTree::from_links(NodeId(node_perm[0] as u32), k - 1, &links).unwrap();
                let mut nodes = vec![Vec::new(); size];
                for (u, x) in c.nodes.iter().enumerate() {
                    nodes[node_perm[u]] = x.clone();
                }
                let mut edges = c.edges.clone();
                for (e, x) in c.edges.iter().enumerate().take(c.links.len()) {
                    edges[edge_perm[e]] = x.clone();
                }
                let g = FeatureTable::from_vectors(3, 4, nodes, edges).unwrap();
                let a = cascaded_cut_embeddings(&c.tree, k, &f, &c.theta).unwrap();
                let b = cascaded_cut_embeddings(&tree, k, &g, &c.theta).unwrap();
                for (x, y) in a.iter().zip(&b) {
                    prop_assert!(max_dev(x, y) < 1e-12);
                }
            }
        }
    }
}
