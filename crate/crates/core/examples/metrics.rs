//! AUC, F1, MRR and NDCG on a handful of scores.

use tegdoc::eval::{auc_labeled, f1, mrr, ndcg, threshold, RankingTask};

fn main() -> tegdoc::Result<()> {
    let scores = [0.92, 0.81, 0.65, 0.64, 0.40, 0.33, 0.12];
    let labels = [1, 1, 0, 1, 0, 1, 0];
    println!("auc {:.4}", auc_labeled(&scores, &labels)?);
    println!("f1 at 0.5 {:.4}", f1(&threshold(&scores), &labels)?);

    let tasks = vec![
        RankingTask { positive: 0.9, negatives: vec![0.2, 0.5, 0.1] },
        RankingTask { positive: 0.4, negatives: vec![0.7, 0.4, 0.1] },
        RankingTask { positive: 0.3, negatives: vec![0.8, 0.6, 0.5] },
    ];
    for t in &tasks {
        println!("positive {:.1} ranks {}", t.positive, t.rank());
    }
    println!("mrr {:.4}, ndcg {:.4}", mrr(&tasks)?, ndcg(&tasks)?);
    Ok(())
}
