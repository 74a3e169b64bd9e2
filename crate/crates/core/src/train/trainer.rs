use ndarray::Array1;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::batch::{loss_and_grad, PairExample, TrainingBatch};
use super::loss::{inverse_frequency_alpha, LossConfig};
use super::optimizer::{optimizer_step, AdamConfig, OptimizerState};
use crate::embed::FeatureTable;
use crate::error::{Error, Result};
use crate::eval::auc;
use crate::tgnn::{self, TgnnParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub loss: LossConfig,
    pub adam: AdamConfig,
    pub batch_size: usize,
    pub epochs: usize,
    /// Epochs without a validation AUC improvement before stopping.
    pub patience: usize,
    pub seed: u64,
    pub k: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            loss: LossConfig::default(),
            adam: AdamConfig::default(),
            batch_size: 1024,
            epochs: 50,
            patience: 5,
            seed: 0,
            k: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub loss_total: f64,
    pub loss_kd: f64,
    pub loss_lp: f64,
    /// `None` when the validation set lacks either class.
    pub val_auc: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters of the best validation epoch (the last epoch without
    /// validation data).
    pub params: TgnnParams,
    pub log: Vec<EpochLog>,
    pub best_epoch: Option<usize>,
    pub steps: u64,
}

/// Head outputs per example: a one-element link probability, or a class
/// distribution.
pub fn score_examples(examples: &[PairExample], features: &FeatureTable, theta: &TgnnParams, k: usize) -> Result<Vec<Array1<f64>>> {
    examples
        .par_iter()
        .map(|ex| {
            let cuts = tgnn::cut_embeddings(&ex.tree_s, &ex.tree_t, k, features, theta)?;
            let pe = tgnn::fuse_pair(&cuts, theta)?;
            let z = tgnn::logits(&pe, theta);
            Ok(if z.len() == 1 { z.mapv(tgnn::sigmoid) } else { tgnn::softmax(&z) })
        })
        .collect()
}

/// Link AUC, or the mean one-vs-rest AUC over classes present on both sides.
pub fn task_auc(scores: &[Array1<f64>], labels: &[u32]) -> Option<f64> {
    let outputs = scores.first()?.len();
    if outputs == 1 {
        let (pos, neg): (Vec<_>, Vec<_>) = scores.iter().zip(labels).partition(|(_, &l)| l == 1);
        let pos: Vec<f64> = pos.into_iter().map(|(s, _)| s[0]).collect();
        let neg: Vec<f64> = neg.into_iter().map(|(s, _)| s[0]).collect();
        return auc(&pos, &neg).ok();
    }
    let per_class: Vec<f64> = (0..outputs)
        .filter_map(|c| {
            let pos: Vec<f64> = scores.iter().zip(labels).filter(|(_, &l)| l as usize == c).map(|(s, _)| s[c]).collect();
            let neg: Vec<f64> = scores.iter().zip(labels).filter(|(_, &l)| l as usize != c).map(|(s, _)| s[c]).collect();
            auc(&pos, &neg).ok()
        })
        .collect();
    (!per_class.is_empty()).then(|| per_class.iter().sum::<f64>() / per_class.len() as f64)
}

/// Mini-batch Adam on `λ1·ℓ_KD + λ2·ℓ_task` with early stopping on
/// validation AUC. Deterministic for a fixed configuration.
pub fn train(
    train_set: &[PairExample],
    valid_set: &[PairExample],
    features: &FeatureTable,
    init: TgnnParams,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    if train_set.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if cfg.batch_size == 0 {
        return Err(Error::InvalidArgument("batch size must be positive".into()));
    }
    init.validate()?;
    let mut loss_cfg = cfg.loss.clone();
    loss_cfg.validate()?;
    let classes = init.dims().n_out;
    if classes > 1 && loss_cfg.focal_alpha.is_none() {
        let labels: Vec<u32> = train_set.iter().map(|e| e.label).collect();
        loss_cfg.focal_alpha = Some(inverse_frequency_alpha(&labels, classes));
    }

    let mut theta = init;
    let mut opt = OptimizerState::new(&theta, cfg.adam);
    let mut log = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, TgnnParams)> = None;
    let mut stale = 0;
    let valid_labels: Vec<u32> = valid_set.iter().map(|e| e.label).collect();

    for epoch in 1..=cfg.epochs {
        let mut order: Vec<usize> = (0..train_set.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(epoch as u64)));
        let (mut total, mut kd, mut lp) = (0.0, 0.0, 0.0);
        for chunk in order.chunks(cfg.batch_size) {
            let examples: Vec<&PairExample> = chunk.iter().map(|&i| &train_set[i]).collect();
            let batch = TrainingBatch {
                examples: &examples,
                features,
                k: cfg.k,
            };
            let (losses, grads) = loss_and_grad(&batch, &theta, &loss_cfg, true)?;
            optimizer_step(&mut theta, &grads.expect("gradient requested"), &mut opt);
            let w = chunk.len() as f64 / train_set.len() as f64;
            total += w * losses.total;
            kd += w * losses.kd;
            lp += w * losses.lp;
        }

        let val_auc = if valid_set.is_empty() {
            None
        } else {
            task_auc(&score_examples(valid_set, features, &theta, cfg.k)?, &valid_labels)
        };
        log::info!("epoch {epoch}: loss {total:.6} (kd {kd:.6}, task {lp:.6}), val auc {val_auc:?}");
        log.push(EpochLog {
            epoch,
            loss_total: total,
            loss_kd: kd,
            loss_lp: lp,
            val_auc,
        });

        if let Some(v) = val_auc {
            if best.as_ref().map_or(true, |(b, _, _)| v > *b) {
                best = Some((v, epoch, theta.clone()));
                stale = 0;
            } else {
                stale += 1;
                if stale >= cfg.patience {
                    log::info!("early stop after epoch {epoch}");
                    break;
                }
            }
        }
    }

    let (params, best_epoch) = match best {
        Some((_, e, p)) => (p, Some(e)),
        None => (theta, None),
    };
    Ok(TrainOutcome {
        params,
        log,
        best_epoch,
        steps: opt.step,
    })
}
