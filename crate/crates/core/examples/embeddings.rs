//! Hash embeddings, the on-disk cache and projection to feature sizes.

use tegdoc::embed::{hash_embed, EmbeddingCache, EmbeddingProvider, HashEmbedder, RandomProjection};

fn cos(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    dot / (a.iter().map(|x| x * x).sum::<f64>().sqrt() * b.iter().map(|x| x * x).sum::<f64>().sqrt())
}

fn main() -> tegdoc::Result<()> {
    let provider = HashEmbedder::new(3072, 0)?;
    let texts = ["a gripping, vivid story", "A vivid and gripping story!", "dull pages and a flat ending"];
    let vecs = provider.embed_batch(&texts)?;
    let proj = RandomProjection::new(3072, 128, 1)?;
    let small: Vec<Vec<f64>> = vecs.iter().map(|v| proj.project(v)).collect::<Result<_, _>>()?;
    for (i, j) in [(0, 1), (0, 2)] {
        let full: Vec<f64> = vecs[i].iter().map(|&x| x as f64).collect();
        let other: Vec<f64> = vecs[j].iter().map(|&x| x as f64).collect();
        println!("{:?} vs {:?}: cosine {:.3} at 3072 dims, {:.3} at 128", texts[i], texts[j], cos(&full, &other), cos(&small[i], &small[j]));
    }

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("vectors.bin");
    {
        let cache = EmbeddingCache::open(&path)?;
        cache.insert("hash", texts[0], &hash_embed(texts[0], 3072, 0))?;
    }
    let cache = EmbeddingCache::open(&path)?;
    println!("reopened cache holds {} vector(s); hit: {}", cache.len(), cache.get("hash", texts[0]).is_some());
    Ok(())
}
