use serde::{Deserialize, Serialize};

use crate::tgnn::TgnnParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-5,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam moments for every parameter tensor.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub cfg: AdamConfig,
    pub step: u64,
    pub m: TgnnParams,
    pub v: TgnnParams,
}

impl OptimizerState {
    pub fn new(theta: &TgnnParams, cfg: AdamConfig) -> Self {
        OptimizerState {
            cfg,
            step: 0,
            m: TgnnParams::zeros(theta.dims()),
            v: TgnnParams::zeros(theta.dims()),
        }
    }
}

/// One bias-corrected Adam update. A gradient with a non-finite entry is
/// skipped entirely; returns whether the step was applied.
pub fn optimizer_step(theta: &mut TgnnParams, grads: &TgnnParams, state: &mut OptimizerState) -> bool {
    if !grads.is_finite() {
        log::warn!("skipping optimizer step {} with a non-finite gradient", state.step + 1);
        return false;
    }
    let AdamConfig { lr, beta1, beta2, eps } = state.cfg;
    state.step += 1;
    let c1 = 1.0 - beta1.powi(state.step as i32);
    let c2 = 1.0 - beta2.powi(state.step as i32);
    let tensors = theta
        .tensors_mut()
        .into_iter()
        .zip(grads.tensors())
        .zip(state.m.tensors_mut())
        .zip(state.v.tensors_mut());
    for (((p, g), m), v) in tensors {
        for i in 0..p.len() {
            m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    true
}
