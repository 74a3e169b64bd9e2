use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const PROB_CLAMP: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossConfig {
    pub tau: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub focal_gamma: f64,
    /// Per-class focal weights. `None` means inverse class frequency of the
    /// training labels, rescaled to mean 1.
    pub focal_alpha: Option<Vec<f64>>,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            tau: 2.0,
            lambda1: 1.0,
            lambda2: 2.0,
            focal_gamma: 2.0,
            focal_alpha: None,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::InvalidArgument(format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.lambda1 >= 0.0 && self.lambda2 >= 0.0) {
            return Err(Error::InvalidArgument("loss weights must be non-negative".into()));
        }
        if !(self.focal_gamma >= 0.0) {
            return Err(Error::InvalidArgument("focal gamma must be non-negative".into()));
        }
        Ok(())
    }
}

/// Inverse class frequency over `labels`, rescaled to mean 1 across the
/// classes. Absent classes get weight 0 before rescaling.
pub fn inverse_frequency_alpha(labels: &[u32], classes: usize) -> Vec<f64> {
    let mut counts = vec![0usize; classes];
    for &l in labels {
        if (l as usize) < classes {
            counts[l as usize] += 1;
        }
    }
    let raw: Vec<f64> = counts.iter().map(|&c| if c == 0 { 0.0 } else { 1.0 / c as f64 }).collect();
    let mean = raw.iter().sum::<f64>() / classes as f64;
    if mean == 0.0 {
        return vec![1.0; classes];
    }
    raw.into_iter().map(|a| a / mean).collect()
}

pub(crate) fn norm(x: &Array1<f64>) -> f64 {
    x.dot(x).sqrt()
}

/// Cosine similarity; 0 (with a warning) when either side is zero.
pub fn cosine(x: &Array1<f64>, y: &Array1<f64>) -> f64 {
    let (nx, ny) = (norm(x), norm(y));
    if nx == 0.0 || ny == 0.0 {
        log::warn!("cosine similarity with a zero vector treated as 0");
        return 0.0;
    }
    x.dot(y) / (nx * ny)
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Contrastive loss of one anchor: the document embedding `anchor_doc`
/// should be closer to its graph embedding `positive` than `positive` is to
/// each negative graph embedding.
pub fn nt_xent(anchor_doc: &Array1<f64>, positive: &Array1<f64>, negatives: &[&Array1<f64>], tau: f64) -> Result<f64> {
    if negatives.is_empty() {
        return Err(Error::InvalidArgument("contrastive loss needs at least one negative".into()));
    }
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument(format!("tau must be positive, got {tau}")));
    }
    let d = positive.len();
    if anchor_doc.len() != d || negatives.iter().any(|n| n.len() != d) {
        return Err(Error::Shape("contrastive loss inputs differ in dimension".into()));
    }
    let a = cosine(anchor_doc, positive) / tau;
    let mut logits = vec![a];
    logits.extend(negatives.iter().map(|n| cosine(positive, n) / tau));
    Ok(log_sum_exp(&logits) - a)
}

/// Mean in-batch contrastive loss over the pairs that have a document, with
/// every other pair's graph embedding as a negative. Returns the loss and
/// its gradient with respect to each graph embedding.
pub(crate) fn nt_xent_batch(docs: &[Option<&Array1<f64>>], graphs: &[Array1<f64>], tau: f64) -> (f64, Vec<Array1<f64>>) {
    let n = graphs.len();
    let d = graphs.first().map_or(0, |g| g.len());
    let anchors: Vec<usize> = (0..n).filter(|&i| docs[i].is_some()).collect();
    if n < 2 || anchors.is_empty() {
        return (0.0, graphs.iter().map(|h| Array1::zeros(h.len())).collect());
    }

    let unit = |x: &Array1<f64>| {
        let r = norm(x);
        if r > 0.0 {
            (x / r, r)
        } else {
            (Array1::zeros(x.len()), 0.0)
        }
    };
    let mut u = Array2::zeros((n, d));
    let mut radius = vec![0.0; n];
    for (i, h) in graphs.iter().enumerate() {
        let (ui, r) = unit(h);
        u.row_mut(i).assign(&ui);
        radius[i] = r;
    }
    if radius.iter().any(|r| *r == 0.0) {
        log::warn!("cosine similarity with a zero vector treated as 0");
    }
    let gram = u.dot(&u.t());

    let scale = 1.0 / anchors.len() as f64;
    let mut total = 0.0;
    // Coefficient of ∂cos(h_i, h_j) and of ∂cos(h_i, doc_i) in the gradient.
    let mut w = Array2::<f64>::zeros((n, n));
    let mut doc_coef = vec![0.0; n];
    let mut doc_unit: Vec<Option<(Array1<f64>, f64)>> = vec![None; n];
    for &i in &anchors {
        let (v, _) = unit(docs[i].expect("anchor has a document"));
        let c = u.row(i).dot(&v);
        let mut logits = Vec::with_capacity(n);
        logits.push(c / tau);
        logits.extend((0..n).filter(|&j| j != i).map(|j| gram[[i, j]] / tau));
        let lse = log_sum_exp(&logits);
        total += lse - logits[0];
        doc_coef[i] = scale * ((logits[0] - lse).exp() - 1.0) / tau;
        for (k, j) in (0..n).filter(|&j| j != i).enumerate() {
            let c = scale * (logits[k + 1] - lse).exp() / tau;
            w[[i, j]] += c;
            w[[j, i]] += c;
        }
        doc_unit[i] = Some((v, c));
    }

    let pulled = w.dot(&u);
    let grads = (0..n)
        .map(|i| {
            if radius[i] == 0.0 {
                return Array1::zeros(d);
            }
            let self_weight: f64 = w.row(i).iter().zip(gram.row(i)).map(|(a, b)| a * b).sum();
            let mut g = pulled.row(i).to_owned() - &(&u.row(i) * self_weight);
            if let Some((v, c)) = &doc_unit[i] {
                g.scaled_add(doc_coef[i], &(v - &(&u.row(i) * *c)));
            }
            g / radius[i]
        })
        .collect();
    (total * scale, grads)
}

/// Binary cross-entropy with the probability clamped to `[1e-7, 1-1e-7]`.
pub fn bce(prob: f64, label: u32) -> f64 {
    let p = prob.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    if label == 1 {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// [`bce`] of `sigmoid(z)` and its derivative with respect to `z`.
pub(crate) fn bce_with_logit(z: f64, label: u32) -> (f64, f64) {
    let p = crate::tgnn::sigmoid(z);
    let loss = bce(p, label);
    let clamped = p < PROB_CLAMP || p > 1.0 - PROB_CLAMP;
    let grad = if clamped { 0.0 } else { p - label as f64 };
    (loss, grad)
}

/// `-alpha[label]·(1-p)^gamma·ln p` with `p = probs[label]`.
pub fn focal(probs: &[f64], label: usize, gamma: f64, alpha: &[f64]) -> Result<f64> {
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-6 || probs.iter().any(|p| !(*p >= 0.0)) {
        return Err(Error::InvalidSimplex(sum));
    }
    if label >= probs.len() || label >= alpha.len() {
        return Err(Error::InvalidArgument(format!("class {label} out of range")));
    }
    let p = probs[label];
    if p >= 1.0 {
        return Ok(0.0);
    }
    Ok(-alpha[label] * (1.0 - p).powf(gamma) * p.max(f64::MIN_POSITIVE).ln())
}

/// Focal loss of `softmax(z)` and its gradient with respect to `z`.
pub(crate) fn focal_with_logits(z: &Array1<f64>, label: usize, gamma: f64, alpha: &[f64]) -> (f64, Array1<f64>) {
    let probs = crate::tgnn::softmax(z);
    let p = probs[label].max(f64::MIN_POSITIVE);
    let a = alpha[label];
    let q = 1.0 - probs[label];
    let loss = if q <= 0.0 { 0.0 } else { -a * q.powf(gamma) * p.ln() };
    // dL/dp, then through the softmax Jacobian p·(δ - probs).
    let pull = if gamma == 0.0 || q <= 0.0 { 0.0 } else { gamma * q.powf(gamma - 1.0) * p.ln() };
    let dl_dp = -a * (q.powf(gamma) / p - pull);
    let mut grad = probs.mapv(|pk| -dl_dp * p * pk);
    grad[label] += dl_dp * p;
    (loss, grad)
}
