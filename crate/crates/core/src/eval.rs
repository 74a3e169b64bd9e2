//! Rank-based metrics and the sampled-candidate ranking protocol.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probability that a random positive outscores a random negative, ties
/// counting one half.
pub fn auc(scores_pos: &[f64], scores_neg: &[f64]) -> Result<f64> {
    if scores_pos.is_empty() || scores_neg.is_empty() {
        return Err(Error::InvalidArgument("auc needs positive and negative scores".into()));
    }
    let mut neg = scores_neg.to_vec();
    neg.sort_by(f64::total_cmp);
    let mut wins = 0.0;
    for &p in scores_pos {
        let below = neg.partition_point(|&x| x < p);
        let not_above = neg.partition_point(|&x| x <= p);
        wins += below as f64 + 0.5 * (not_above - below) as f64;
    }
    Ok(wins / (scores_pos.len() as f64 * neg.len() as f64))
}

/// [`auc`] from parallel score and 0/1 label lists.
pub fn auc_labeled(scores: &[f64], labels: &[u32]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::InvalidArgument("scores and labels differ in length".into()));
    }
    let pos: Vec<f64> = scores.iter().zip(labels).filter(|(_, &l)| l == 1).map(|(s, _)| *s).collect();
    let neg: Vec<f64> = scores.iter().zip(labels).filter(|(_, &l)| l != 1).map(|(s, _)| *s).collect();
    auc(&pos, &neg)
}

/// F1 of the positive class; 0 when precision and recall are both 0.
pub fn f1(predictions: &[u32], labels: &[u32]) -> Result<f64> {
    if predictions.len() != labels.len() {
        return Err(Error::InvalidArgument("predictions and labels differ in length".into()));
    }
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (&p, &y) in predictions.iter().zip(labels) {
        match (p == 1, y == 1) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            _ => {}
        }
    }
    if tp == 0 {
        return Ok(0.0);
    }
    Ok(2.0 * tp as f64 / (2 * tp + fp + fn_) as f64)
}

/// Hard 0/1 predictions at threshold 0.5.
pub fn threshold(probs: &[f64]) -> Vec<u32> {
    probs.iter().map(|&p| u32::from(p >= 0.5)).collect()
}

/// Unweighted mean of per-class F1 scores.
pub fn macro_f1(predicted: &[u32], labels: &[u32], classes: usize) -> Result<f64> {
    let mut total = 0.0;
    for c in 0..classes as u32 {
        let p: Vec<u32> = predicted.iter().map(|&x| u32::from(x == c)).collect();
        let y: Vec<u32> = labels.iter().map(|&x| u32::from(x == c)).collect();
        total += f1(&p, &y)?;
    }
    Ok(total / classes as f64)
}

/// One query: the positive candidate's score and the sampled negatives'.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingTask {
    pub positive: f64,
    pub negatives: Vec<f64>,
}

impl RankingTask {
    /// 1-based rank of the positive, placed after every negative scoring at
    /// least as high.
    pub fn rank(&self) -> usize {
        1 + self.negatives.iter().filter(|&&n| n >= self.positive).count()
    }
}

fn check_tasks(tasks: &[RankingTask]) -> Result<()> {
    if tasks.is_empty() {
        return Err(Error::InvalidArgument("no ranking queries".into()));
    }
    if tasks.iter().any(|t| !t.positive.is_finite() || t.negatives.iter().any(|x| !x.is_finite())) {
        return Err(Error::InvalidArgument("ranking scores must be finite".into()));
    }
    Ok(())
}

pub fn mrr(tasks: &[RankingTask]) -> Result<f64> {
    check_tasks(tasks)?;
    Ok(tasks.iter().map(|t| 1.0 / t.rank() as f64).sum::<f64>() / tasks.len() as f64)
}

/// Binary-relevance NDCG over the full candidate list.
pub fn ndcg(tasks: &[RankingTask]) -> Result<f64> {
    check_tasks(tasks)?;
    Ok(tasks.iter().map(|t| 1.0 / (1.0 + t.rank() as f64).log2()).sum::<f64>() / tasks.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub auc: f64,
    pub f1: f64,
    /// Absent for edge classification.
    pub mrr: Option<f64>,
    pub ndcg: Option<f64>,
    pub n_queries: usize,
    pub n_negatives: usize,
    pub seed: u64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Pairwise enumeration, independent of the sort-based implementation.
    fn brute_auc(pos: &[f64], neg: &[f64]) -> f64 {
        let mut s = 0.0;
        for p in pos {
            for n in neg {
                s += if p > n { 1.0 } else if p == n { 0.5 } else { 0.0 };
            }
        }
        s / (pos.len() * neg.len()) as f64
    }

    #[test]
    fn auc_examples() {
        assert_eq!(auc(&[0.9, 0.8], &[0.1, 0.2]).unwrap(), 1.0);
        assert_eq!(auc(&[0.3, 0.3], &[0.3]).unwrap(), 0.5);
        assert_eq!(auc(&[0.9, 0.4], &[0.6, 0.1]).unwrap(), 0.75);
        assert!(auc(&[], &[0.1]).is_err());
        assert_eq!(auc_labeled(&[0.9, 0.6, 0.4, 0.1], &[1, 0, 1, 0]).unwrap(), 0.75);
    }

    #[test]
    fn f1_examples() {
        assert_eq!(f1(&[1, 0, 1], &[1, 0, 1]).unwrap(), 1.0);
        // TP=2, FP=1, FN=1.
        assert!((f1(&[1, 1, 1, 0], &[1, 1, 0, 1]).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(f1(&[0, 0], &[1, 0]).unwrap(), 0.0);
        assert_eq!(threshold(&[0.2, 0.5, 0.9]), vec![0, 1, 1]);
        assert!((macro_f1(&[0, 1, 2, 2], &[0, 1, 2, 1], 3).unwrap() - (1.0 + 2.0 / 3.0 + 2.0 / 3.0) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn ranking_examples() {
        let at = |rank: usize| RankingTask { positive: 0.5, negatives: (0..rank - 1).map(|_| 0.9).chain([0.1, 0.2]).collect() };
        assert_eq!(mrr(&[at(1), at(1)]).unwrap(), 1.0);
        assert_eq!(mrr(&[at(2), at(4)]).unwrap(), 0.375);
        let tie = RankingTask { positive: 0.9, negatives: vec![0.9, 0.1] };
        assert_eq!(tie.rank(), 2);
        assert_eq!(mrr(&[tie]).unwrap(), 0.5);
        assert_eq!(ndcg(&[at(1)]).unwrap(), 1.0);
        assert_eq!(ndcg(&[at(3)]).unwrap(), 0.5);
        assert_eq!(ndcg(&[at(1), at(3)]).unwrap(), 0.75);
        assert!(mrr(&[]).is_err());
    }

    proptest! {
        #[test]
        fn auc_matches_pairwise(pos in proptest::collection::vec(0u8..20, 1..30), neg in proptest::collection::vec(0u8..20, 1..30)) {
            let pos: Vec<f64> = pos.into_iter().map(f64::from).collect();
            let neg: Vec<f64> = neg.into_iter().map(f64::from).collect();
            prop_assert!((auc(&pos, &neg).unwrap() - brute_auc(&pos, &neg)).abs() < 1e-12);
        }

        #[test]
        fn metrics_are_rank_invariant(
            pos in proptest::collection::vec(-300i32..300, 1..20),
            neg in proptest::collection::vec(-300i32..300, 1..20),
        ) {
            let pos: Vec<f64> = pos.into_iter().map(|x| f64::from(x) / 100.0).collect();
            let neg: Vec<f64> = neg.into_iter().map(|x| f64::from(x) / 100.0).collect();
            let maps: [fn(f64) -> f64; 2] = [|x| 2.0 * x + 1.0, f64::tanh];
            let base_auc = auc(&pos, &neg).unwrap();
            let tasks: Vec<RankingTask> = pos.iter().map(|&p| RankingTask { positive: p, negatives: neg.clone() }).collect();
            let (base_mrr, base_ndcg) = (mrr(&tasks).unwrap(), ndcg(&tasks).unwrap());
            for f in maps {
                let p2: Vec<f64> = pos.iter().map(|&x| f(x)).collect();
                let n2: Vec<f64> = neg.iter().map(|&x| f(x)).collect();
                prop_assert_eq!(auc(&p2, &n2).unwrap(), base_auc);
                let t2: Vec<RankingTask> = p2.iter().map(|&p| RankingTask { positive: p, negatives: n2.clone() }).collect();
                prop_assert_eq!(mrr(&t2).unwrap(), base_mrr);
                prop_assert_eq!(ndcg(&t2).unwrap(), base_ndcg);
            }
            for m in [base_auc, base_mrr, base_ndcg] {
                prop_assert!((0.0..=1.0).contains(&m));
            }
        }

        #[test]
        fn swapped_auc_complements(pos in proptest::collection::vec(0u32..100, 1..20), neg in proptest::collection::vec(0u32..100, 1..20)) {
            // Integers against half-integers: never tied.
            let pos: Vec<f64> = pos.into_iter().map(f64::from).collect();
            let neg: Vec<f64> = neg.into_iter().map(|x| f64::from(x) + 0.5).collect();
            let a = auc(&pos, &neg).unwrap();
            prop_assert!((auc(&neg, &pos).unwrap() - (1.0 - a)).abs() < 1e-12);
        }
    }
}
