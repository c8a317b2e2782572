use std::fs;
use std::path::{Path, PathBuf};
use std::ffi::OsString;
use std::io::Write;

use clap::{Args, Parser, Subcommand};
use kgcn_core::config::{BenchConfig, RunConfig};
use kgcn_core::dataset::{locate_dataset, read_container, GraphDataset};
use kgcn_core::experiments::{
    benchmark_grid, rank_experiment, spectrum_experiment, BenchCell, BenchOptions, RankExperiment, RankTrace,
    SpectrumOptions, SpectrumResult,
};
use kgcn_core::graph::{diffusion, DiffusionKind};
use kgcn_core::nn::{forward, Architecture, Mode};
use kgcn_core::rng::derive_seed;
use kgcn_core::selftest::run_selftest;
use kgcn_core::training::{run_split, train_once_with_params, train_parallel, TrainReport};
use kgcn_core::{Activation, Error, Result};

#[derive(Parser)]
#[command(name = "kgcn", version, about = "Deep graph convolution in block Krylov form")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Directory holding dataset containers.
    #[arg(long, global = true, env = "KGCN_DATA")]
    dataset_dir: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Base seed; overrides the one in a config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for runs, repetitions and grid cells.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Leave timing out of every output so repeated runs are byte-identical.
    #[arg(long, global = true)]
    deterministic: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model from a run configuration.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Also write the final-layer features of the first run.
        #[arg(long)]
        dump_embeddings: bool,
    },
    /// Rank of hidden features through a deep randomly initialized network.
    RankExp(RankArgs),
    /// Eigenvalue histogram of the renormalized adjacency.
    Spectrum {
        /// Container name or path.
        dataset: String,
    },
    /// Accuracy grid with the published hyperparameters.
    Bench {
        #[arg(long)]
        config: PathBuf,
    },
    /// Gradient checks, the Krylov equivalence and the rank properties.
    Selftest,
}

#[derive(Args)]
struct RankArgs {
    #[arg(long)]
    arch: Architecture,
    #[arg(long)]
    activation: Activation,
    #[arg(long, default_value_t = 100)]
    depth: usize,
    #[arg(long, default_value_t = 20)]
    reps: usize,
    #[arg(long, default_value_t = 1000)]
    nodes: usize,
    #[arg(long, default_value_t = 0.01)]
    edge_prob: f64,
    #[arg(long, default_value_t = 500)]
    input_dim: usize,
    #[arg(long, default_value_t = 128)]
    width: usize,
    /// Krylov blocks per truncated layer.
    #[arg(long, default_value_t = 3)]
    blocks: usize,
    /// Absolute singular value threshold for the rank.
    #[arg(long)]
    tolerance: Option<f64>,
}

/// Parses `args` and runs the command. Normal output goes to `out`; a
/// failure is reported on `err` as one JSON object. Returns the exit code.
pub fn run_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = write!(out, "{e}");
            return 0;
        }
        Err(e) => {
            report_error(err, "BadConfig", e.to_string().trim());
            return 2;
        }
    };
    match run(cli, out) {
        Ok(code) => code,
        Err(e) => {
            report_error(err, e.kind(), &e.to_string());
            1
        }
    }
}

fn report_error(err: &mut dyn Write, kind: &str, message: &str) {
    let body = serde_json::json!({ "error": kind, "message": message });
    let _ = writeln!(err, "{body}");
}

fn run(cli: Cli, out: &mut dyn Write) -> Result<u8> {
    let g = cli.global;
    match cli.command {
        Command::Train { config, dump_embeddings } => cmd_train(&g, &config, dump_embeddings, out),
        Command::RankExp(args) => cmd_rank_exp(&g, &args, out),
        Command::Spectrum { dataset } => cmd_spectrum(&g, &dataset, out),
        Command::Bench { config } => cmd_bench(&g, &config, out),
        Command::Selftest => cmd_selftest(&g, out),
    }
}

fn out_dir(g: &Global, from_config: Option<&Path>) -> Result<PathBuf> {
    let dir = g
        .out
        .clone()
        .or_else(|| from_config.map(Path::to_path_buf))
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn load_dataset(name: &str, root: Option<&Path>) -> Result<GraphDataset> {
    read_container(&locate_dataset(name, root)?)
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn write_csv(path: &Path, header: &str, rows: &[String]) -> Result<()> {
    let mut text = String::with_capacity(64 * (rows.len() + 1));
    text.push_str(header);
    text.push('\n');
    for r in rows {
        text.push_str(r);
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

fn cmd_train(g: &Global, config: &Path, dump_embeddings: bool, out: &mut dyn Write) -> Result<u8> {
    let mut cfg = RunConfig::load(config)?;
    if let Some(seed) = g.seed {
        cfg.hyperparams.seed = seed;
    }
    if let Some(jobs) = g.jobs {
        cfg.jobs = jobs;
    }
    cfg.deterministic |= g.deterministic;
    cfg.dump_embeddings |= dump_embeddings;
    cfg.validate()?;

    let root = cfg.dataset_dir.clone().or_else(|| g.dataset_dir.clone());
    let ds = load_dataset(&cfg.dataset, root.as_deref())?;
    let hp = cfg.effective_hyperparams();
    let spec = cfg.model_spec(ds.n_features(), ds.n_classes);
    let report = train_parallel(&ds, &spec, &hp, cfg.jobs, cfg.deterministic)?;

    let dir = out_dir(g, cfg.out.as_deref())?;
    write_json(&dir.join("train_report.json"), &report)?;
    write_csv(&dir.join("train.csv"), TrainReport::CSV_HEADER, &[report.csv_row()])?;
    writeln!(out, "{}", report.csv_row())?;

    if cfg.dump_embeddings {
        let seed = derive_seed(hp.seed, 0);
        let split = run_split(&ds, &hp, seed)?;
        let l = diffusion(&ds.graph, DiffusionKind::RenormalizedAdjacency).matrix;
        let (_, params) = train_once_with_params(&l, &ds, &spec, &hp, &split, seed)?;
        let (_, tape) = forward(&l, &ds.features, &params, &spec, Mode::Eval)?;
        let emb = tape.classifier_input(&spec);
        let header = std::iter::once("node,label".to_string())
            .chain((0..emb.cols()).map(|j| format!("e{j}")))
            .collect::<Vec<_>>()
            .join(",");
        let rows: Vec<String> = (0..emb.rows())
            .map(|i| {
                let mut r = format!("{i},{}", ds.labels[i]);
                for v in emb.row(i) {
                    r.push_str(&format!(",{v:e}"));
                }
                r
            })
            .collect();
        write_csv(&dir.join("embeddings.csv"), &header, &rows)?;
    }
    Ok(0)
}

fn cmd_rank_exp(g: &Global, a: &RankArgs, out: &mut dyn Write) -> Result<u8> {
    let cfg = RankExperiment {
        depth: a.depth,
        reps: a.reps,
        n_nodes: a.nodes,
        edge_prob: a.edge_prob,
        input_dim: a.input_dim,
        width: a.width,
        n_blocks: a.blocks,
        tolerance: a.tolerance,
        ..RankExperiment::standard(a.arch, a.activation, g.seed.unwrap_or(0))
    };
    let trace = rank_experiment(&cfg, g.jobs.unwrap_or(1))?;
    let dir = out_dir(g, None)?;
    write_csv(&dir.join("rank_trace.csv"), RankTrace::CSV_HEADER, &trace.csv_rows())?;
    write_json(&dir.join("rank_trace.json"), &trace)?;
    if let Some(last) = trace.mean.last() {
        writeln!(out, "{} {}: mean rank {last:.2} at layer {}", cfg.arch, cfg.activation, cfg.depth)?;
    }
    Ok(0)
}

fn cmd_spectrum(g: &Global, dataset: &str, out: &mut dyn Write) -> Result<u8> {
    let ds = load_dataset(dataset, g.dataset_dir.as_deref())?;
    let opts = SpectrumOptions {
        seed: g.seed.unwrap_or(0),
        ..SpectrumOptions::default()
    };
    let res = spectrum_experiment(&ds, opts)?;
    let dir = out_dir(g, None)?;
    write_csv(&dir.join("spectrum.csv"), SpectrumResult::CSV_HEADER, &res.csv_rows())?;
    write_json(&dir.join("spectrum.json"), &res)?;
    writeln!(out, 
        "{}: {} eigenvalues in [{:.12}, {:.12}] ({})",
        res.dataset, res.n_nodes, res.min, res.max, res.method
    )?;
    Ok(0)
}

fn cmd_bench(g: &Global, config: &Path, out: &mut dyn Write) -> Result<u8> {
    let cfg = BenchConfig::load(config)?;
    let root = cfg.dataset_dir.clone().or_else(|| g.dataset_dir.clone());
    let opts = BenchOptions {
        width_cap: cfg.width_cap,
        runs: cfg.runs,
        max_episodes: cfg.max_episodes,
        seed: g.seed.unwrap_or(cfg.seed),
        jobs: g.jobs.unwrap_or(cfg.jobs),
        deterministic: cfg.deterministic || g.deterministic,
    };
    let load = |name: &str| load_dataset(name, root.as_deref());
    let cells = benchmark_grid(&cfg.datasets, &cfg.splits, cfg.arch, cfg.validation, &load, &opts)?;
    let dir = out_dir(g, cfg.out.as_deref())?;
    let rows: Vec<String> = cells.iter().map(BenchCell::csv_row).collect();
    write_csv(&dir.join("bench.csv"), BenchCell::CSV_HEADER, &rows)?;
    for r in &rows {
        writeln!(out, "{r}")?;
    }
    Ok(0)
}

fn cmd_selftest(g: &Global, out: &mut dyn Write) -> Result<u8> {
    let outcomes = run_selftest(g.seed.unwrap_or(0))?;
    for o in &outcomes {
        writeln!(out, "{} {} ({})", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail)?;
    }
    if let Some(dir) = &g.out {
        fs::create_dir_all(dir)?;
        write_json(&dir.join("selftest.json"), &outcomes)?;
    }
    let failed: Vec<&str> = outcomes.iter().filter(|o| !o.passed).map(|o| o.name.as_str()).collect();
    if failed.is_empty() {
        Ok(0)
    } else {
        Err(Error::Numerical(format!("self-test checks failed: {}", failed.join(", "))))
    }
}
