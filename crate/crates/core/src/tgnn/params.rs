use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Layer sizes of the graph model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TgnnDims {
    pub d_h: usize,
    pub d_node: usize,
    pub d_edge: usize,
    pub d_doc: usize,
    /// 1 for link prediction, C for C-way edge classification.
    pub n_out: usize,
}

impl Default for TgnnDims {
    fn default() -> Self {
        TgnnDims {
            d_h: 64,
            d_node: 64,
            d_edge: 128,
            d_doc: 3072,
            n_out: 1,
        }
    }
}

impl TgnnDims {
    fn validate(&self) -> Result<()> {
        if [self.d_h, self.d_node, self.d_edge, self.d_doc, self.n_out].contains(&0) {
            return Err(Error::InvalidArgument(format!("all model dimensions must be positive: {self:?}")));
        }
        Ok(())
    }
}

/// Weights of the message-passing network, the fusion head `g` and the
/// output head. Shared between the source and target sides.
#[derive(Debug, Clone, PartialEq)]
pub struct TgnnParams {
    pub w_self: Array2<f64>,
    pub w_msg: Array2<f64>,
    pub w_node_in: Array2<f64>,
    pub w_edge: Array2<f64>,
    pub b: Array1<f64>,
    /// `g` first layer: `d_h × 2·d_h`.
    pub g1_w: Array2<f64>,
    pub g1_b: Array1<f64>,
    /// `g` second layer: `d_doc × d_h`.
    pub g2_w: Array2<f64>,
    pub g2_b: Array1<f64>,
    /// `n_out × d_doc`.
    pub clf_w: Array2<f64>,
    pub clf_b: Array1<f64>,
}

pub const TENSOR_NAMES: [&str; 11] = [
    "w_self", "w_msg", "w_node_in", "w_edge", "b", "g1_w", "g1_b", "g2_w", "g2_b", "clf_w", "clf_b",
];

/// Scale of the output heads relative to Xavier. The fused vector is
/// normalized, so only the direction of `g2_w` matters; small heads leave
/// the early updates to be driven by the data rather than the draw.
const HEAD_SCALE: f64 = 0.01;

fn xavier(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Array2<f64> {
    let a = scale * (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-a..=a))
}

impl TgnnParams {
    pub fn zeros(dims: TgnnDims) -> Self {
        let TgnnDims { d_h, d_node, d_edge, d_doc, n_out } = dims;
        TgnnParams {
            w_self: Array2::zeros((d_h, d_h)),
            w_msg: Array2::zeros((d_h, d_h)),
            w_node_in: Array2::zeros((d_h, d_node)),
            w_edge: Array2::zeros((d_h, d_edge)),
            b: Array1::zeros(d_h),
            g1_w: Array2::zeros((d_h, 2 * d_h)),
            g1_b: Array1::zeros(d_h),
            g2_w: Array2::zeros((d_doc, d_h)),
            g2_b: Array1::zeros(d_doc),
            clf_w: Array2::zeros((n_out, d_doc)),
            clf_b: Array1::zeros(n_out),
        }
    }

    /// Seeded Xavier-uniform initialization with zero biases.
    pub fn init(dims: TgnnDims, seed: u64) -> Result<Self> {
        dims.validate()?;
        let TgnnDims { d_h, d_node, d_edge, d_doc, n_out } = dims;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = TgnnParams::zeros(dims);
        p.w_self = xavier(&mut rng, d_h, d_h, 1.0);
        p.w_msg = xavier(&mut rng, d_h, d_h, 1.0);
        p.w_node_in = xavier(&mut rng, d_h, d_node, 1.0);
        p.w_edge = xavier(&mut rng, d_h, d_edge, 1.0);
        p.g1_w = xavier(&mut rng, d_h, 2 * d_h, 1.0);
        p.g2_w = xavier(&mut rng, d_doc, d_h, 1.0);
        p.clf_w = xavier(&mut rng, n_out, d_doc, HEAD_SCALE);
        Ok(p)
    }

    pub fn dims(&self) -> TgnnDims {
        TgnnDims {
            d_h: self.w_self.nrows(),
            d_node: self.w_node_in.ncols(),
            d_edge: self.w_edge.ncols(),
            d_doc: self.g2_w.nrows(),
            n_out: self.clf_w.nrows(),
        }
    }

    /// Shape check against the dimensions implied by `w_self`, `w_node_in`,
    /// `w_edge`, `g2_w` and `clf_w`.
    pub fn validate(&self) -> Result<()> {
        let d = self.dims();
        d.validate()?;
        let expected = TgnnParams::zeros(d);
        for ((name, have), want) in TENSOR_NAMES.iter().zip(self.shapes()).zip(expected.shapes()) {
            if have != want {
                return Err(Error::Shape(format!("{name}: expected {want:?}, got {have:?}")));
            }
        }
        Ok(())
    }

    fn shapes(&self) -> Vec<Vec<usize>> {
        vec![
            self.w_self.shape().to_vec(),
            self.w_msg.shape().to_vec(),
            self.w_node_in.shape().to_vec(),
            self.w_edge.shape().to_vec(),
            self.b.shape().to_vec(),
            self.g1_w.shape().to_vec(),
            self.g1_b.shape().to_vec(),
            self.g2_w.shape().to_vec(),
            self.g2_b.shape().to_vec(),
            self.clf_w.shape().to_vec(),
            self.clf_b.shape().to_vec(),
        ]
    }

    /// Flat views of every tensor, in [`TENSOR_NAMES`] order.
    pub fn tensors(&self) -> [&[f64]; 11] {
        fn s(a: Option<&[f64]>) -> &[f64] {
            a.expect("parameters are contiguous")
        }
        [
            s(self.w_self.as_slice()),
            s(self.w_msg.as_slice()),
            s(self.w_node_in.as_slice()),
            s(self.w_edge.as_slice()),
            s(self.b.as_slice()),
            s(self.g1_w.as_slice()),
            s(self.g1_b.as_slice()),
            s(self.g2_w.as_slice()),
            s(self.g2_b.as_slice()),
            s(self.clf_w.as_slice()),
            s(self.clf_b.as_slice()),
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 11] {
        fn s(a: Option<&mut [f64]>) -> &mut [f64] {
            a.expect("parameters are contiguous")
        }
        [
            s(self.w_self.as_slice_mut()),
            s(self.w_msg.as_slice_mut()),
            s(self.w_node_in.as_slice_mut()),
            s(self.w_edge.as_slice_mut()),
            s(self.b.as_slice_mut()),
            s(self.g1_w.as_slice_mut()),
            s(self.g1_b.as_slice_mut()),
            s(self.g2_w.as_slice_mut()),
            s(self.g2_b.as_slice_mut()),
            s(self.clf_w.as_slice_mut()),
            s(self.clf_b.as_slice_mut()),
        ]
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|x| x.is_finite()))
    }

    /// `self += a · other`.
    pub fn add_scaled(&mut self, other: &TgnnParams, a: f64) {
        for (dst, src) in self.tensors_mut().into_iter().zip(other.tensors()) {
            dst.iter_mut().zip(src).for_each(|(d, s)| *d += a * s);
        }
    }

    pub fn scale(&mut self, a: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|x| *x *= a);
        }
    }
}
