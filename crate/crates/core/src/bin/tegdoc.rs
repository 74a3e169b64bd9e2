use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tegdoc::cli;
use tegdoc::config::{ProviderKind, RunConfig, Task};
use tegdoc::synth::SynthConfig;

#[derive(Parser)]
#[command(name = "tegdoc", version, about = "Link prediction on textual-edge graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the transition document of one pair.
    Compose {
        #[command(flatten)]
        run: RunArgs,
        source: String,
        target: String,
    },
    /// Train a model and write its checkpoint and epoch log.
    Train {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Score the test split with a checkpoint.
    Eval {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Generate a synthetic review graph with labeled pairs.
    Synth {
        #[arg(long, default_value_t = 1000)]
        nodes: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        k: usize,
        #[arg(long, default_value = "data")]
        out: PathBuf,
    },
    /// Print the link probability (or class distribution) of one pair.
    Predict {
        #[command(flatten)]
        run: RunArgs,
        source: String,
        target: String,
    },
}

/// Flags override values from `--config`.
#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    nodes: Option<PathBuf>,
    #[arg(long)]
    edges: Option<PathBuf>,
    #[arg(long)]
    pairs: Option<PathBuf>,
    #[arg(long)]
    cache: Option<PathBuf>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    tree_depth: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    lambda1: Option<f64>,
    #[arg(long)]
    lambda2: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = ["hash", "remote"])]
    provider: Option<String>,
    #[arg(long)]
    include_node_text: bool,
    #[arg(long, value_parser = ["link", "edgeclass"])]
    task: Option<String>,
    #[arg(long)]
    classes: Option<usize>,
}

impl RunArgs {
    fn resolve(self) -> tegdoc::Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let p = &mut c.paths;
        set(&mut p.nodes, self.nodes);
        set(&mut p.edges, self.edges);
        set(&mut p.checkpoint, self.checkpoint);
        set(&mut p.log, self.log);
        set(&mut p.output, self.output);
        p.pairs = self.pairs.or(p.pairs.take());
        p.cache = self.cache.or(p.cache.take());
        set(&mut c.k, self.k);
        c.tree_depth = self.tree_depth.or(c.tree_depth);
        set(&mut c.epochs, self.epochs);
        set(&mut c.batch_size, self.batch_size);
        set(&mut c.adam.lr, self.lr);
        set(&mut c.loss.lambda1, self.lambda1);
        set(&mut c.loss.lambda2, self.lambda2);
        set(&mut c.loss.tau, self.tau);
        set(&mut c.seed, self.seed);
        if let Some(p) = self.provider {
            c.provider = if p == "remote" { ProviderKind::Remote } else { ProviderKind::Hash };
        }
        c.include_node_text |= self.include_node_text;
        if let Some(t) = self.task {
            c.task = if t == "edgeclass" { Task::EdgeClass } else { Task::Link };
        }
        set(&mut c.dims.n_out, self.classes);
        Ok(c)
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn run(command: Command) -> tegdoc::Result<()> {
    match command {
        Command::Compose { run, source, target } => {
            let (path, sections) = cli::cmd_compose(&run.resolve()?, &source, &target)?;
            println!("{sections} sections written to {}", path.display());
        }
        Command::Train { run } => {
            let cfg = run.resolve()?;
            let out = cli::cmd_train(&cfg)?;
            let best = out.best_epoch.map_or("none".to_string(), |e| e.to_string());
            println!("{} epochs, {} steps, best epoch {best}; checkpoint {}", out.log.len(), out.steps, cfg.paths.checkpoint.display());
        }
        Command::Eval { run } => {
            let cfg = run.resolve()?;
            let report = cli::cmd_eval(&cfg, &cfg.paths.checkpoint)?;
            println!("{}", serde_json::to_string(&report)?);
        }
        Command::Synth { nodes, seed, k, out } => {
            let data = cli::cmd_synth(&SynthConfig { n_nodes: nodes, seed, k, ..SynthConfig::default() }, &out)?;
            let positive = data.pairs.iter().filter(|p| p.label == 1).count();
            println!("{} nodes, {} edges, {} pairs ({positive} positive) in {}", data.graph.node_count(), data.graph.edge_count(), data.pairs.len(), out.display());
        }
        Command::Predict { run, source, target } => {
            let cfg = run.resolve()?;
            let scores = cli::cmd_predict(&cfg, &cfg.paths.checkpoint, &source, &target)?;
            let text: Vec<String> = scores.iter().map(|s| format!("{s:.6}")).collect();
            println!("{}", text.join(" "));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
