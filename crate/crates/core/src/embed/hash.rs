use xxhash_rust::xxh3::xxh3_64_with_seed;

/// Hash slots written per token.
const SLOTS_PER_TOKEN: u64 = 4;
const SLOT_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;

/// Lowercased alphanumeric tokens of `text`.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

/// Signed feature hashing of a bag of tokens, L2-normalized.
///
/// Every token adds `±1` to four buckets chosen by seeded xxh3. Empty (or
/// token-free) text maps to the zero vector.
pub fn hash_embed(text: &str, dim: usize, seed: u64) -> Vec<f32> {
    assert!(dim >= 1, "embedding dimension must be positive");
    let mut acc = vec![0.0f64; dim];
    for token in tokenize(text) {
        for j in 0..SLOTS_PER_TOKEN {
            let h = xxh3_64_with_seed(token.as_bytes(), seed.wrapping_add(j.wrapping_mul(SLOT_STRIDE)));
            let idx = (h % dim as u64) as usize;
            acc[idx] += if h >> 63 == 1 { -1.0 } else { 1.0 };
        }
    }
    let norm = acc.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return vec![0.0; dim];
    }
    acc.into_iter().map(|x| (x / norm) as f32).collect()
}

#[cfg(test)]
pub(crate) fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| *x as f64 * *y as f64).sum();
    let na: f64 = a.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}
