//! Text embeddings: an offline hashing provider, an HTTP provider, a
//! persistent cache, and projection of text vectors down to the node and
//! edge feature sizes used by the graph model.

mod cache;
mod hash;
mod projection;
mod remote;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{EdgeId, NodeId, TeGraph};

pub use cache::EmbeddingCache;
pub use hash::{hash_embed, tokenize};
pub use projection::{project_features, RandomProjection};
pub use remote::{truncate_to_budget, RemoteConfig, RemoteProvider, API_KEY_ENV};

#[cfg(test)]
use hash::cosine;

/// A deterministic text-to-vector function.
pub trait EmbeddingProvider: Send + Sync {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    /// One vector per text, in input order.
    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f32>>>;

    fn embed(&self, text: &str) -> Result<Vec<f32>> {
        Ok(self.embed_batch(&[text])?.pop().expect("one text in, one vector out"))
    }
}

/// [`hash_embed`] as a provider.
#[derive(Debug, Clone)]
pub struct HashEmbedder {
    dim: usize,
    seed: u64,
}

impl HashEmbedder {
    pub fn new(dim: usize, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("embedding dimension must be positive".into()));
        }
        Ok(HashEmbedder { dim, seed })
    }
}

impl EmbeddingProvider for HashEmbedder {
    fn name(&self) -> &str {
        "hash"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f32>>> {
        Ok(texts.par_iter().map(|t| hash_embed(t, self.dim, self.seed)).collect())
    }
}

/// Per-node and per-edge input features, each L2-normalized or exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    node_dim: usize,
    edge_dim: usize,
    nodes: Vec<Vec<f64>>,
    edges: Vec<Vec<f64>>,
}

impl FeatureTable {
    pub fn from_vectors(node_dim: usize, edge_dim: usize, nodes: Vec<Vec<f64>>, edges: Vec<Vec<f64>>) -> Result<Self> {
        for v in &nodes {
            if v.len() != node_dim {
                return Err(Error::DimensionMismatch { expected: node_dim, got: v.len() });
            }
        }
        for v in &edges {
            if v.len() != edge_dim {
                return Err(Error::DimensionMismatch { expected: edge_dim, got: v.len() });
            }
        }
        Ok(FeatureTable { node_dim, edge_dim, nodes, edges })
    }

    pub fn node_dim(&self) -> usize {
        self.node_dim
    }

    pub fn edge_dim(&self) -> usize {
        self.edge_dim
    }

    pub fn node(&self, u: NodeId) -> &[f64] {
        &self.nodes[u.index()]
    }

    pub fn edge(&self, e: EdgeId) -> &[f64] {
        &self.edges[e.index()]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FeatureOptions {
    pub node_dim: usize,
    pub edge_dim: usize,
    /// Node texts are embedded only when set; otherwise node features are zero.
    pub include_node_text: bool,
    pub seed: u64,
}

impl Default for FeatureOptions {
    fn default() -> Self {
        FeatureOptions {
            node_dim: 64,
            edge_dim: 128,
            include_node_text: false,
            seed: 0,
        }
    }
}

/// Embeds every node and edge text with `provider` and projects the results
/// to the configured feature sizes.
pub fn build_feature_table(g: &TeGraph, provider: &dyn EmbeddingProvider, opts: FeatureOptions) -> Result<FeatureTable> {
    let node_proj = RandomProjection::new(provider.dim(), opts.node_dim, opts.seed)?;
    let edge_proj = RandomProjection::new(provider.dim(), opts.edge_dim, opts.seed.wrapping_add(1))?;

    let nodes = if opts.include_node_text {
        let texts: Vec<&str> = g.nodes().iter().map(|n| n.text.as_str()).collect();
        project_all(provider, &texts, &node_proj)?
    } else {
        vec![vec![0.0; opts.node_dim]; g.node_count()]
    };
    let texts: Vec<&str> = g.edges().iter().map(|e| e.text.as_str()).collect();
    let edges = project_all(provider, &texts, &edge_proj)?;
    FeatureTable::from_vectors(opts.node_dim, opts.edge_dim, nodes, edges)
}

fn project_all(provider: &dyn EmbeddingProvider, texts: &[&str], proj: &RandomProjection) -> Result<Vec<Vec<f64>>> {
    let raw = provider.embed_batch(texts)?;
    raw.par_iter().map(|v| proj.project(v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{EdgeSpec, NodeSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_or_zero(v: &[f64]) -> bool {
        let n: f64 = v.iter().map(|x| x * x).sum();
        n == 0.0 || (n - 1.0).abs() < 1e-9
    }

    #[test]
    fn feature_table_dims_and_norms() {
        let nodes = ["a", "b", "c"]
            .iter()
            .map(|k| NodeSpec { key: k.to_string(), text: format!("node {k}") })
            .collect();
        let edges = vec![
            EdgeSpec { key: "e1".into(), src: "a".into(), dst: "b".into(), text: "great value".into(), label: None },
            EdgeSpec { key: "e2".into(), src: "b".into(), dst: "c".into(), text: "".into(), label: None },
        ];
        let g = TeGraph::from_parts(nodes, edges).unwrap();
        let p = HashEmbedder::new(256, 0).unwrap();
        let opts = FeatureOptions { include_node_text: true, ..FeatureOptions::default() };
        let ft = build_feature_table(&g, &p, opts).unwrap();
        assert_eq!(ft.node_count(), 3);
        assert_eq!(ft.edge_count(), 2);
        for u in 0..3 {
            assert_eq!(ft.node(NodeId(u)).len(), 64);
            assert!(unit_or_zero(ft.node(NodeId(u))));
        }
        assert!(unit_or_zero(ft.edge(EdgeId(0))));
        assert!(ft.edge(EdgeId(1)).iter().all(|x| *x == 0.0));

        let no_text = build_feature_table(&g, &p, FeatureOptions::default()).unwrap();
        assert!(no_text.node(NodeId(0)).iter().all(|x| *x == 0.0));
        assert_eq!(no_text.edge(EdgeId(0)), ft.edge(EdgeId(0)));
    }

    #[test]
    fn projection_preserves_cosine_on_average() {
        // Monte-Carlo over random unit vectors in 3072-d projected to 64-d
        // with one seeded matrix.
        let proj = RandomProjection::new(3072, 64, 11).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut unit = || {
            let v: Vec<f64> = (0..3072).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| (x / n) as f32).collect::<Vec<f32>>()
        };
        let mut dev = 0.0;
        for _ in 0..1000 {
            let (a, b) = (unit(), unit());
            let before = cosine(&a, &b);
            let pa = proj.project(&a).unwrap();
            let pb = proj.project(&b).unwrap();
            let after: f64 = pa.iter().zip(&pb).map(|(x, y)| x * y).sum();
            dev += (before - after).abs();
        }
        let mad = dev / 1000.0;
        assert!(mad < 0.15, "mean absolute cosine deviation {mad}");
    }
}
