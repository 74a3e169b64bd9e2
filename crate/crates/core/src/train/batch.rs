use ndarray::Array1;
use rayon::prelude::*;
use serde::Serialize;

use super::loss::{bce_with_logit, focal_with_logits, nt_xent_batch, LossConfig};
use crate::embed::FeatureTable;
use crate::error::{Error, Result};
use crate::tgnn::{self, CutEmbeddings, TgnnParams};
use crate::transition::BfsTree;

/// One labeled pair prepared for the graph model.
#[derive(Debug, Clone)]
pub struct PairExample {
    pub tree_s: BfsTree,
    pub tree_t: BfsTree,
    /// 0/1 for link prediction, the 0-based class for edge classification.
    pub label: u32,
    /// Embedding of the composed transition document, when one exists.
    pub doc: Option<Array1<f64>>,
}

/// Pairs evaluated together; in-batch pairs serve as contrastive negatives.
#[derive(Debug, Clone, Copy)]
pub struct TrainingBatch<'a> {
    pub examples: &'a [&'a PairExample],
    pub features: &'a FeatureTable,
    pub k: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct LossBreakdown {
    pub total: f64,
    pub kd: f64,
    pub lp: f64,
}

/// Pairs per gradient accumulation chunk. Fixed so the reduction order does
/// not depend on the number of worker threads.
const CHUNK: usize = 16;

struct Forward {
    fused: Array1<f64>,
    fuse_tape: tgnn::FuseTape,
    tape_s: tgnn::CascadeTape,
    tape_t: tgnn::CascadeTape,
}

fn forward(ex: &PairExample, batch: &TrainingBatch<'_>, theta: &TgnnParams) -> Result<Forward> {
    let (out_s, tape_s) = tgnn::cascade(&ex.tree_s, batch.k, batch.features, theta, true)?;
    let (out_t, tape_t) = tgnn::cascade(&ex.tree_t, batch.k, batch.features, theta, true)?;
    let cuts = CutEmbeddings::from_cascades(out_s.cuts, out_t.cuts)?;
    let (pe, fuse_tape) = tgnn::fuse(&cuts, theta)?;
    Ok(Forward {
        fused: pe.fused,
        fuse_tape,
        tape_s: tape_s.expect("recorded"),
        tape_t: tape_t.expect("recorded"),
    })
}

/// Task loss of one pair and its gradient with respect to the head logits.
fn task_loss(fused: &Array1<f64>, label: u32, theta: &TgnnParams, cfg: &LossConfig, alpha: &[f64]) -> Result<(f64, Array1<f64>)> {
    let z = theta.clf_w.dot(fused) + &theta.clf_b;
    if z.len() == 1 {
        if label > 1 {
            return Err(Error::InvalidArgument(format!("link label must be 0 or 1, got {label}")));
        }
        let (l, g) = bce_with_logit(z[0], label);
        Ok((l, Array1::from(vec![g])))
    } else {
        if label as usize >= z.len() {
            return Err(Error::InvalidArgument(format!("class {label} out of range for {} classes", z.len())));
        }
        Ok(focal_with_logits(&z, label as usize, cfg.focal_gamma, alpha))
    }
}

fn class_weights(theta: &TgnnParams, cfg: &LossConfig) -> Result<Vec<f64>> {
    let c = theta.clf_w.nrows();
    match &cfg.focal_alpha {
        Some(a) if c > 1 && a.len() != c => Err(Error::InvalidArgument(format!(
            "focal_alpha has {} weights for {c} classes",
            a.len()
        ))),
        Some(a) => Ok(a.clone()),
        None => Ok(vec![1.0; c]),
    }
}

/// Loss of a batch and, when `with_grad`, its gradient with respect to
/// every parameter.
pub fn loss_and_grad(batch: &TrainingBatch<'_>, theta: &TgnnParams, cfg: &LossConfig, with_grad: bool) -> Result<(LossBreakdown, Option<TgnnParams>)> {
    cfg.validate()?;
    let n = batch.examples.len();
    if n == 0 {
        return Err(Error::EmptyTrainingSet);
    }
    let alpha = class_weights(theta, cfg)?;
    let fwd: Vec<Forward> = batch
        .examples
        .par_iter()
        .map(|ex| forward(ex, batch, theta))
        .collect::<Result<_>>()?;

    let task: Vec<(f64, Array1<f64>)> = fwd
        .iter()
        .zip(batch.examples)
        .map(|(f, ex)| task_loss(&f.fused, ex.label, theta, cfg, &alpha))
        .collect::<Result<_>>()?;
    let lp = task.iter().map(|(l, _)| l).sum::<f64>() / n as f64;

    let fused: Vec<Array1<f64>> = fwd.iter().map(|f| f.fused.clone()).collect();
    let docs: Vec<Option<&Array1<f64>>> = batch.examples.iter().map(|ex| ex.doc.as_ref()).collect();
    let (kd, kd_grads) = nt_xent_batch(&docs, &fused, cfg.tau);
    let losses = LossBreakdown {
        total: cfg.lambda1 * kd + cfg.lambda2 * lp,
        kd,
        lp,
    };
    if !with_grad {
        return Ok((losses, None));
    }

    let partials: Vec<TgnnParams> = (0..n)
        .collect::<Vec<_>>()
        .par_chunks(CHUNK)
        .map(|idx| {
            let mut grads = TgnnParams::zeros(theta.dims());
            for &i in idx {
                let f = &fwd[i];
                let g_logit = &task[i].1 * (cfg.lambda2 / n as f64);
                tgnn::add_outer(&mut grads.clf_w, &g_logit, f.fused.view());
                grads.clf_b += &g_logit;
                let mut g_fused = theta.clf_w.t().dot(&g_logit);
                g_fused.scaled_add(cfg.lambda1, &kd_grads[i]);
                let (g_s, g_t) = f.fuse_tape.backward(&f.fused, &g_fused, theta, &mut grads);
                let cuts = batch.k - 1;
                f.tape_s.backward(&vec![g_s; cuts], batch.features, theta, &mut grads);
                f.tape_t.backward(&vec![g_t; cuts], batch.features, theta, &mut grads);
            }
            grads
        })
        .collect();
    let mut grads = TgnnParams::zeros(theta.dims());
    for p in &partials {
        grads.add_scaled(p, 1.0);
    }
    Ok((losses, Some(grads)))
}

/// `λ1·ℓ_KD + λ2·ℓ_task` of a batch.
pub fn total_loss(batch: &TrainingBatch<'_>, theta: &TgnnParams, cfg: &LossConfig) -> Result<LossBreakdown> {
    Ok(loss_and_grad(batch, theta, cfg, false)?.0)
}

/// Analytical gradient of [`total_loss`] with respect to every parameter.
pub fn backward(batch: &TrainingBatch<'_>, theta: &TgnnParams, cfg: &LossConfig) -> Result<TgnnParams> {
    Ok(loss_and_grad(batch, theta, cfg, true)?.1.expect("gradient requested"))
}
