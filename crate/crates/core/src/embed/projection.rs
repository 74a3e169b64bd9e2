use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Seeded Gaussian-free random projection with `±1/sqrt(d_out)` entries.
#[derive(Debug, Clone)]
pub struct RandomProjection {
    d_in: usize,
    d_out: usize,
    /// Row-major `d_out × d_in`.
    weights: Vec<f64>,
}

impl RandomProjection {
    pub fn new(d_in: usize, d_out: usize, seed: u64) -> Result<Self> {
        if d_out == 0 {
            return Err(Error::InvalidArgument("projection target dimension must be positive".into()));
        }
        if d_in < d_out {
            return Err(Error::InvalidArgument(format!(
                "cannot project {d_in}-dimensional vectors up to {d_out}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = 1.0 / (d_out as f64).sqrt();
        let weights = (0..d_in * d_out)
            .map(|_| if rng.gen::<bool>() { scale } else { -scale })
            .collect();
        Ok(RandomProjection { d_in, d_out, weights })
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    /// `R·x` without normalization.
    pub fn project_raw(&self, x: &[f32]) -> Result<Vec<f64>> {
        if x.len() != self.d_in {
            return Err(Error::DimensionMismatch {
                expected: self.d_in,
                got: x.len(),
            });
        }
        Ok(self
            .weights
            .chunks_exact(self.d_in)
            .map(|row| row.iter().zip(x).map(|(w, v)| w * *v as f64).sum())
            .collect())
    }

    /// `R·x / ‖R·x‖`; the zero vector stays zero.
    pub fn project(&self, x: &[f32]) -> Result<Vec<f64>> {
        let mut y = self.project_raw(x)?;
        l2_normalize(&mut y);
        Ok(y)
    }
}

fn l2_normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

/// One-shot projection of a single vector to `target` dimensions.
pub fn project_features(x: &[f32], target: usize, seed: u64) -> Result<Vec<f64>> {
    RandomProjection::new(x.len(), target, seed)?.project(x)
}
