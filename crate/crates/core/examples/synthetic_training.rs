//! Generates the planted-sentiment dataset, trains with and without
//! document alignment, and reports validation AUC for both.
//!
//! cargo run --release --example synthetic_training -- [n_nodes] [epochs]

use std::time::Instant;

use tegdoc::cli::{cmd_synth, prepare};
use tegdoc::config::RunConfig;
use tegdoc::synth::SynthConfig;
use tegdoc::tgnn::TgnnParams;
use tegdoc::train::train;

fn main() -> tegdoc::Result<()> {
    env_logger::init();
    let mut args = std::env::args().skip(1);
    let n_nodes = args.next().map_or(1000, |a| a.parse().expect("node count"));
    let epochs = args.next().map_or(50, |a| a.parse().expect("epoch count"));

    let dir = tempfile::tempdir()?;
    cmd_synth(&SynthConfig { n_nodes, seed: 7, ..SynthConfig::default() }, dir.path())?;
    let mut cfg = RunConfig { epochs, ..RunConfig::default() };
    cfg.paths.nodes = dir.path().join("nodes.jsonl");
    cfg.paths.edges = dir.path().join("edges.jsonl");
    cfg.paths.pairs = Some(dir.path().join("pairs.jsonl"));

    for lambda1 in [cfg.loss.lambda1, 0.0] {
        let start = Instant::now();
        cfg.loss.lambda1 = lambda1;
        let prep = prepare(&cfg)?;
        let (train_set, valid_set, _) = prep.examples(&cfg)?;
        let init = TgnnParams::init(cfg.dims, cfg.seed)?;
        let out = train(&train_set, &valid_set, &prep.features, init, &cfg.train_config())?;
        let best = out.log.iter().filter_map(|e| e.val_auc).fold(f64::NAN, f64::max);
        for e in &out.log {
            println!("  epoch {:>2}  loss {:.5}  kd {:.5}  task {:.5}  auc {:?}", e.epoch, e.loss_total, e.loss_kd, e.loss_lp, e.val_auc);
        }
        println!("lambda1 = {lambda1}: best val auc {best:.4} at epoch {:?} ({:.1?})", out.best_epoch, start.elapsed());
    }
    Ok(())
}
