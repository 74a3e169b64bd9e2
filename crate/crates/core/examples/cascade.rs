//! Cut embeddings of a balanced tree, computed naively and by the cascade,
//! with the number of node updates each needs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tegdoc::embed::FeatureTable;
use tegdoc::graph::{EdgeId, NodeId};
use tegdoc::tgnn::{cascaded_cut_embeddings_counted, naive_cut_embedding_counted, TgnnDims, TgnnParams};
use tegdoc::transition::BfsTree;

fn main() -> tegdoc::Result<()> {
    let depth = 5;
    let k = depth + 1;
    let n = (1u32 << (depth + 1)) - 1;
    let links: Vec<_> = (1..n).map(|i| (NodeId((i - 1) / 2), NodeId(i), EdgeId(i - 1))).collect();
    let tree = BfsTree::from_links(NodeId(0), depth, &links)?;

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let dims = TgnnDims { d_h: 16, d_node: 8, d_edge: 8, ..TgnnDims::default() };
    let rows = |d: usize, rng: &mut ChaCha8Rng| (0..n).map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let features = FeatureTable::from_vectors(8, 8, rows(8, &mut rng), rows(8, &mut rng))?;
    let theta = TgnnParams::init(dims, 0)?;

    let cascade = cascaded_cut_embeddings_counted(&tree, k, &features, &theta)?;
    let mut naive_total = 0;
    for cut in 1..k {
        let (h, updates) = naive_cut_embedding_counted(&tree, cut, &features, &theta)?;
        naive_total += updates;
        let diff = (&h - &cascade.cuts[cut - 1]).iter().fold(0.0f64, |m, x| m.max(x.abs()));
        println!("cut {cut}: naive updates {updates:>3}, max |naive - cascade| {diff:.1e}");
    }
    println!("{n}-node tree: naive {naive_total} updates, cascade {} ({:.2}x)", cascade.updates, naive_total as f64 / cascade.updates as f64);
    Ok(())
}
