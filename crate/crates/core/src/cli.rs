//! Command implementations behind the `tegdoc` binary.

use std::collections::HashSet;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{ProviderKind, RunConfig, Task};
use crate::embed::{build_feature_table, EmbeddingCache, EmbeddingProvider, FeatureOptions, FeatureTable, HashEmbedder, RemoteProvider};
use crate::error::{Error, Result};
use crate::eval::{self, MetricsReport, RankingTask};
use crate::graph::{load_graph_files, write_graph, NodeId, TeGraph};
use crate::io::write_atomic;
use crate::synth::{self, SynthConfig};
use crate::tgnn::{load_checkpoint, save_checkpoint, TgnnParams};
use crate::train::{
    edge_class_splits, link_splits, read_pairs, score_examples, split_pairs, train, write_pairs, EpochLog, ExampleBuilder,
    LabeledPair, PairExample, PairSplits, TrainOutcome,
};

pub fn make_provider(cfg: &RunConfig) -> Result<Box<dyn EmbeddingProvider>> {
    match cfg.provider {
        ProviderKind::Hash => Ok(Box::new(HashEmbedder::new(cfg.dims.d_doc, cfg.seed)?)),
        ProviderKind::Remote => {
            let cache = match &cfg.paths.cache {
                Some(p) => EmbeddingCache::open(p)?,
                None => EmbeddingCache::in_memory(),
            };
            let provider = RemoteProvider::new(cfg.remote.clone().with_env_key(), Arc::new(cache))?;
            if provider.dim() != cfg.dims.d_doc {
                return Err(Error::DimensionMismatch { expected: cfg.dims.d_doc, got: provider.dim() });
            }
            Ok(Box::new(provider))
        }
    }
}

/// Everything a run needs before training or scoring: the full graph, the
/// graph with held-out edges removed, the splits and the feature table of
/// the visible graph.
pub struct Prepared {
    pub full: TeGraph,
    pub visible: TeGraph,
    pub splits: PairSplits,
    pub features: FeatureTable,
    pub provider: Box<dyn EmbeddingProvider>,
}

impl Prepared {
    pub fn builder(&self, cfg: &RunConfig) -> ExampleBuilder<'_> {
        ExampleBuilder {
            graph: &self.visible,
            k: cfg.k,
            doc_depth: cfg.doc_depth(),
            include_node_text: cfg.include_node_text,
        }
    }

    /// Training examples carry document embeddings; evaluation ones do not.
    pub fn examples(&self, cfg: &RunConfig) -> Result<(Vec<PairExample>, Vec<PairExample>, Vec<PairExample>)> {
        let b = self.builder(cfg);
        let docs = (cfg.loss.lambda1 > 0.0).then_some(self.provider.as_ref());
        Ok((
            b.build_all(&self.splits.train, docs)?,
            b.build_all(&self.splits.valid, None)?,
            b.build_all(&self.splits.test, None)?,
        ))
    }
}

fn read_pairs_file(path: &Path, g: &TeGraph) -> Result<Vec<LabeledPair>> {
    let f = std::fs::File::open(path).map_err(|e| Error::file(path, e))?;
    read_pairs(BufReader::new(f), g)
}

pub fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    cfg.validate()?;
    let full = load_graph_files(&cfg.paths.nodes, &cfg.paths.edges)?;
    let splits = match (&cfg.paths.pairs, cfg.task) {
        (Some(p), _) => split_pairs(&read_pairs_file(p, &full)?, cfg.seed),
        (None, Task::Link) => link_splits(&full, cfg.seed)?,
        (None, Task::EdgeClass) => edge_class_splits(&full, cfg.seed)?,
    };
    if let Some(bad) = splits.train.iter().chain(&splits.valid).chain(&splits.test).find(|p| p.label as usize >= cfg.dims.n_out.max(2)) {
        return Err(Error::InvalidArgument(format!("label {} outside the {} configured outputs", bad.label, cfg.dims.n_out)));
    }
    let visible = full.without_edges(&splits.held_out);
    let provider = make_provider(cfg)?;
    let opts = FeatureOptions {
        node_dim: cfg.dims.d_node,
        edge_dim: cfg.dims.d_edge,
        include_node_text: cfg.include_node_text,
        seed: cfg.seed,
    };
    let features = build_feature_table(&visible, provider.as_ref(), opts)?;
    log::info!(
        "{} nodes, {} visible edges; {} / {} / {} pairs",
        full.node_count(),
        visible.edge_count(),
        splits.train.len(),
        splits.valid.len(),
        splits.test.len()
    );
    Ok(Prepared { full, visible, splits, features, provider })
}

fn lookup(g: &TeGraph, key: &str) -> Result<NodeId> {
    g.lookup(key).ok_or_else(|| Error::InvalidArgument(format!("unknown node key {key:?}")))
}

/// Writes `{s}__{t}.txt` under the output directory; returns its path and
/// section count.
pub fn cmd_compose(cfg: &RunConfig, s_key: &str, t_key: &str) -> Result<(PathBuf, usize)> {
    cfg.validate()?;
    let g = load_graph_files(&cfg.paths.nodes, &cfg.paths.edges)?;
    let (s, t) = (lookup(&g, s_key)?, lookup(&g, t_key)?);
    let builder = ExampleBuilder { graph: &g, k: cfg.k, doc_depth: cfg.doc_depth(), include_node_text: cfg.include_node_text };
    let doc = builder.document_from(&builder.transition_graph(s, t)?)?;
    std::fs::create_dir_all(&cfg.paths.output).map_err(|e| Error::file(&cfg.paths.output, e))?;
    let path = cfg.paths.output.join(format!("{s_key}__{t_key}.txt"));
    write_atomic(&path, doc.text.as_bytes())?;
    Ok((path, doc.section_count()))
}

pub fn log_lines(log: &[EpochLog]) -> Result<String> {
    let mut out = String::new();
    for e in log {
        out.push_str(&serde_json::to_string(e)?);
        out.push('\n');
    }
    Ok(out)
}

/// Trains from the configured data; writes the checkpoint and the epoch log.
pub fn cmd_train(cfg: &RunConfig) -> Result<TrainOutcome> {
    let prep = prepare(cfg)?;
    let (train_set, valid_set, _) = prep.examples(cfg)?;
    let init = TgnnParams::init(cfg.dims, cfg.seed)?;
    let outcome = if cfg.epochs == 0 {
        TrainOutcome { params: init, log: Vec::new(), best_epoch: None, steps: 0 }
    } else {
        train(&train_set, &valid_set, &prep.features, init, &cfg.train_config())?
    };
    save_checkpoint(&cfg.paths.checkpoint, &outcome.params)?;
    write_atomic(&cfg.paths.log, log_lines(&outcome.log)?.as_bytes())?;
    Ok(outcome)
}

fn check_dims(cfg: &RunConfig, theta: &TgnnParams) -> Result<()> {
    let (have, want) = (theta.dims(), cfg.dims);
    for (got, expected) in [(have.d_h, want.d_h), (have.d_node, want.d_node), (have.d_edge, want.d_edge), (have.d_doc, want.d_doc), (have.n_out, want.n_out)] {
        if got != expected {
            return Err(Error::DimensionMismatch { expected, got });
        }
    }
    Ok(())
}

/// Positive pairs ranked against `m` sampled tails that are neither the
/// source, adjacent to it in the full graph, nor a known positive.
fn ranking_tasks(prep: &Prepared, cfg: &RunConfig, theta: &TgnnParams, positives: &[LabeledPair]) -> Result<Vec<RankingTask>> {
    let known: HashSet<(NodeId, NodeId)> = prep
        .splits
        .train
        .iter()
        .chain(&prep.splits.valid)
        .chain(&prep.splits.test)
        .filter(|p| p.label == 1)
        .flat_map(|p| [(p.s, p.t), (p.t, p.s)])
        .collect();
    let n = prep.full.node_count();
    let m = cfg.ranking_negatives;
    let builder = prep.builder(cfg);
    positives
        .par_iter()
        .enumerate()
        .map(|(qi, q)| {
            let excluded = |v: NodeId| v == q.s || known.contains(&(q.s, v)) || prep.full.edge_between(q.s, v).is_some();
            let pool = (0..n as u32).map(NodeId).filter(|&v| !excluded(v)).count();
            if pool < m {
                return Err(Error::InvalidArgument(format!("only {pool} ranking candidates for {}, need {m}", prep.full.key(q.s))));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (qi as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let mut seen = HashSet::new();
            let mut pairs = vec![*q];
            while pairs.len() <= m {
                let v = NodeId(rng.gen_range(0..n as u32));
                if !excluded(v) && seen.insert(v) {
                    pairs.push(LabeledPair { s: q.s, t: v, label: 0 });
                }
            }
            let examples = pairs.iter().map(|&p| builder.build(p, None)).collect::<Result<Vec<_>>>()?;
            let scores: Vec<f64> = score_examples(&examples, &prep.features, theta, cfg.k)?.iter().map(|s| s[0]).collect();
            Ok(RankingTask { positive: scores[0], negatives: scores[1..].to_vec() })
        })
        .collect()
}

/// Test-split metrics for a checkpoint; also written to
/// `metrics.json` under the output directory.
pub fn cmd_eval(cfg: &RunConfig, checkpoint: &Path) -> Result<MetricsReport> {
    let theta = load_checkpoint(checkpoint)?;
    check_dims(cfg, &theta)?;
    let prep = prepare(cfg)?;
    let builder = prep.builder(cfg);
    let test = builder.build_all(&prep.splits.test, None)?;
    let labels: Vec<u32> = test.iter().map(|e| e.label).collect();
    let scores = score_examples(&test, &prep.features, &theta, cfg.k)?;

    let report = if cfg.dims.n_out == 1 {
        let probs: Vec<f64> = scores.iter().map(|s| s[0]).collect();
        let positives: Vec<LabeledPair> = prep.splits.test.iter().copied().filter(|p| p.label == 1).collect();
        let tasks = ranking_tasks(&prep, cfg, &theta, &positives)?;
        MetricsReport {
            auc: eval::auc_labeled(&probs, &labels)?,
            f1: eval::f1(&eval::threshold(&probs), &labels)?,
            mrr: Some(eval::mrr(&tasks)?),
            ndcg: Some(eval::ndcg(&tasks)?),
            n_queries: tasks.len(),
            n_negatives: cfg.ranking_negatives,
            seed: cfg.seed,
        }
    } else {
        let predicted: Vec<u32> = scores
            .iter()
            .map(|s| s.iter().enumerate().fold((0, f64::MIN), |b, (i, &p)| if p > b.1 { (i, p) } else { b }).0 as u32)
            .collect();
        MetricsReport {
            auc: crate::train::task_auc(&scores, &labels).ok_or_else(|| Error::InvalidArgument("test split lacks class variety".into()))?,
            f1: eval::macro_f1(&predicted, &labels, cfg.dims.n_out)?,
            mrr: None,
            ndcg: None,
            n_queries: 0,
            n_negatives: 0,
            seed: cfg.seed,
        }
    };
    std::fs::create_dir_all(&cfg.paths.output).map_err(|e| Error::file(&cfg.paths.output, e))?;
    write_atomic(&cfg.paths.output.join("metrics.json"), serde_json::to_string_pretty(&report)?.as_bytes())?;
    Ok(report)
}

/// Link probability, or class distribution, for one pair over the full graph.
pub fn cmd_predict(cfg: &RunConfig, checkpoint: &Path, s_key: &str, t_key: &str) -> Result<Vec<f64>> {
    cfg.validate()?;
    let theta = load_checkpoint(checkpoint)?;
    check_dims(cfg, &theta)?;
    let g = load_graph_files(&cfg.paths.nodes, &cfg.paths.edges)?;
    let pair = LabeledPair { s: lookup(&g, s_key)?, t: lookup(&g, t_key)?, label: 0 };
    let provider = make_provider(cfg)?;
    let opts = FeatureOptions { node_dim: cfg.dims.d_node, edge_dim: cfg.dims.d_edge, include_node_text: cfg.include_node_text, seed: cfg.seed };
    let features = build_feature_table(&g, provider.as_ref(), opts)?;
    let builder = ExampleBuilder { graph: &g, k: cfg.k, doc_depth: cfg.doc_depth(), include_node_text: cfg.include_node_text };
    let ex = builder.build(pair, None)?;
    let out = score_examples(std::slice::from_ref(&ex), &features, &theta, cfg.k)?;
    Ok(out[0].to_vec())
}

/// Writes `nodes.jsonl`, `edges.jsonl` and `pairs.jsonl` into `dir`.
pub fn cmd_synth(cfg: &SynthConfig, dir: &Path) -> Result<synth::SynthData> {
    let data = synth::generate(cfg)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
    let (mut nodes, mut edges, mut pairs) = (Vec::new(), Vec::new(), Vec::new());
    write_graph(&data.graph, &mut nodes, &mut edges)?;
    write_pairs(&mut pairs, &data.pairs, &data.graph)?;
    write_atomic(&dir.join("nodes.jsonl"), &nodes)?;
    write_atomic(&dir.join("edges.jsonl"), &edges)?;
    write_atomic(&dir.join("pairs.jsonl"), &pairs)?;
    Ok(data)
}
