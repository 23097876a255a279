use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use qaoa_ppn::bench::{self, BenchConfig, LabelRecord};
use qaoa_ppn::graph::Split;
use qaoa_ppn::opt::{depth1_solve, fit_depth1_regression, LabelConfig, RecommendedList, DEFAULT_LIST_SIZE};
use qaoa_ppn::ppn::{self, PpnModel, TrainConfig};
use qaoa_ppn::qaoa::{EvalCounter, MaxCutQaoa, ParameterFile, ParameterSet};
use qaoa_ppn::strategies::{StrategyKind, DEFAULT_DELTA_T};
use qaoa_ppn::{derive_seed, graph::Graph};

/// Max-Cut QAOA parameter prediction pipeline.
#[derive(Parser)]
#[command(name = "qaoa-ppn", version)]
struct Cli {
    /// Base seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample Erdős–Rényi graphs into dataset.json.
    GenGraphs(GenArgs),
    /// Optimize train graphs at depths 1..=max into labels.json.
    Label(LabelArgs),
    /// Train a network on labels.json into model.ppnm and loss.csv.
    Train(TrainArgs),
    /// Chain network predictions from a parameter file.
    Predict(PredictArgs),
    /// Run strategies on the test graphs and write the report.
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = bench::DEFAULT_GRAPHS)]
    n_graphs: usize,
    #[arg(long, default_value_t = bench::DEFAULT_NODES)]
    n_nodes: usize,
    #[arg(long, default_value_t = bench::DEFAULT_EDGE_PROB)]
    edge_prob: f64,
    #[arg(long, default_value_t = bench::DEFAULT_TRAIN_COUNT)]
    train_count: usize,
}

#[derive(Args)]
struct LabelArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value_t = bench::DEFAULT_LABEL_DEPTH)]
    max_depth: usize,
    #[arg(long, default_value_t = 10)]
    restarts_depth1: usize,
    #[arg(long, default_value_t = 5)]
    restarts_higher: usize,
    /// Skip the interpolated warm start at depths above 1.
    #[arg(long)]
    no_interpolated_start: bool,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    labels: PathBuf,
    #[arg(long, default_value_t = ppn::DEFAULT_BLOCKS)]
    blocks: usize,
    #[arg(long, default_value_t = 3000)]
    epochs1: usize,
    #[arg(long, default_value_t = 1000)]
    epochs2: usize,
    #[arg(long, default_value_t = 1e-5)]
    lr1: f64,
    #[arg(long, default_value_t = 1e-6)]
    lr2: f64,
    #[arg(long, default_value_t = 11)]
    batch1: usize,
    #[arg(long, default_value_t = 6)]
    batch2: usize,
    #[arg(long, default_value_t = 1)]
    start_depth: usize,
    #[arg(long, default_value_t = 4)]
    horizon: usize,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// Parameter file `{ "p", "gamma", "beta" }`, or the JSON itself.
    #[arg(long)]
    params: String,
    #[arg(long, default_value_t = 1)]
    steps: usize,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    model: PathBuf,
    /// Labels of the train graphs, used to fit the depth-1 recommended list.
    /// Without it the train graphs are solved at depth 1 first.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "ppn1,ppn2,tqa,random")]
    strategies: Vec<String>,
    #[arg(long, default_value_t = bench::DEFAULT_TARGET_DEPTH)]
    target_depth: usize,
    #[arg(long, default_value_t = DEFAULT_DELTA_T)]
    delta_t: f64,
    /// Graph id probed for the depth curve (default: first test graph).
    #[arg(long)]
    curve_graph: Option<usize>,
    /// Deepest probed depth; 0 disables the curve.
    #[arg(long, default_value_t = bench::DEFAULT_TARGET_DEPTH)]
    curve_depth: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global()?;
    }
    std::fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    match &cli.command {
        Command::GenGraphs(a) => gen_graphs(&cli, a),
        Command::Label(a) => label(&cli, a),
        Command::Train(a) => train(&cli, a),
        Command::Predict(a) => predict(a),
        Command::Bench(a) => run_bench(&cli, a),
    }
}

fn gen_graphs(cli: &Cli, a: &GenArgs) -> Result<()> {
    let entries = bench::generate_dataset(a.n_graphs, a.n_nodes, a.edge_prob, a.train_count, cli.seed)?;
    let path = cli.out.join("dataset.json");
    bench::write_json(&path, &entries)?;
    println!("wrote {} graphs to {}", entries.len(), path.display());
    Ok(())
}

fn label(cli: &Cli, a: &LabelArgs) -> Result<()> {
    let entries = bench::read_dataset(&a.dataset).with_context(|| format!("reading {}", a.dataset.display()))?;
    let cfg = LabelConfig {
        restarts_depth1: a.restarts_depth1,
        restarts_higher: a.restarts_higher,
        interpolated_start: !a.no_interpolated_start,
    };
    let labels = bench::label_dataset(&entries, a.max_depth, &cfg, &RecommendedList::diagonal(DEFAULT_LIST_SIZE), cli.seed)?;
    let path = cli.out.join("labels.json");
    bench::write_labels(&path, &labels)?;
    println!("wrote labels for {} graphs to {}", labels.len(), path.display());
    Ok(())
}

fn train(cli: &Cli, a: &TrainArgs) -> Result<()> {
    let records: Vec<LabelRecord> =
        bench::read_json(&a.labels).with_context(|| format!("reading {}", a.labels.display()))?;
    let samples = bench::samples_from_records(&records, a.start_depth, a.horizon)?;
    let cfg = TrainConfig {
        epochs_phase1: a.epochs1,
        epochs_phase2: a.epochs2,
        lr_phase1: a.lr1,
        lr_phase2: a.lr2,
        batch_phase1: a.batch1,
        batch_phase2: a.batch2,
        seed: derive_seed(cli.seed, 1),
        start_depth: a.start_depth,
        horizon: a.horizon,
        ..TrainConfig::default()
    };
    let mut model = PpnModel::random(a.blocks, derive_seed(cli.seed, 0));
    let history = ppn::train_with_progress(&mut model, &samples, &cfg, |phase, epoch, loss| {
        if (epoch + 1) % 100 == 0 {
            eprintln!("phase {phase} epoch {} loss {loss:.6e}", epoch + 1);
        }
    })?;
    let model_path = cli.out.join("model.ppnm");
    ppn::save_model(&model, &model_path)?;
    std::fs::write(cli.out.join("loss.csv"), bench::loss_csv(&history, a.epochs1))?;
    println!("wrote {} and loss.csv ({} epochs)", model_path.display(), history.len());
    Ok(())
}

fn predict(a: &PredictArgs) -> Result<()> {
    let model = ppn::load_model(&a.model).with_context(|| format!("loading {}", a.model.display()))?;
    let text = if Path::new(&a.params).exists() { std::fs::read_to_string(&a.params)? } else { a.params.clone() };
    let file: ParameterFile = serde_json::from_str(&text).context("parsing parameters")?;
    let params = ParameterSet::from_file(&file)?;
    let out = bench::predict_params(&model, &params, a.steps)?;
    println!("{}", serde_json::to_string(&out.to_file())?);
    Ok(())
}

/// Fits the depth-1 regression from labels, or from fresh depth-1 solves of the train graphs.
fn recommended_list(a: &BenchArgs, entries: &[qaoa_ppn::graph::DatasetEntry]) -> Result<RecommendedList> {
    if let Some(path) = &a.labels {
        let labels = bench::read_labels(path, entries).with_context(|| format!("reading {}", path.display()))?;
        return Ok(bench::recommended_list_from_labels(&labels, DEFAULT_LIST_SIZE)?);
    }
    let seed_list = RecommendedList::diagonal(DEFAULT_LIST_SIZE);
    let optima = bench::split_entries(entries, Split::Train)
        .into_iter()
        .map(|e| {
            let qaoa = MaxCutQaoa::new(Graph::from_file(&e.graph)?)?;
            let p = depth1_solve(&qaoa, &seed_list, &EvalCounter::new())?.best_params;
            Ok((p.gammas()[0], p.betas()[0]))
        })
        .collect::<qaoa_ppn::Result<Vec<_>>>()?;
    Ok(fit_depth1_regression(&optima, DEFAULT_LIST_SIZE)?)
}

fn run_bench(cli: &Cli, a: &BenchArgs) -> Result<()> {
    let strategies = a.strategies.iter().map(|s| s.parse::<StrategyKind>()).collect::<qaoa_ppn::Result<Vec<_>>>()?;
    if strategies.is_empty() {
        bail!("no strategies given");
    }
    let entries = bench::read_dataset(&a.dataset).with_context(|| format!("reading {}", a.dataset.display()))?;
    let model = ppn::load_model(&a.model).with_context(|| format!("loading {}", a.model.display()))?;
    let rec = recommended_list(a, &entries)?;
    let cfg = BenchConfig {
        strategies,
        target_depth: a.target_depth,
        delta_t: a.delta_t,
        seed: cli.seed,
        curve_graph: a.curve_graph,
        curve_depth: a.curve_depth,
        ..BenchConfig::default()
    };
    let hashes = (bench::sha256_file(&a.dataset)?, bench::sha256_file(&a.model)?);
    let run = bench::run_benchmark(&entries, &model, &rec, &cfg, hashes)?;

    bench::write_json(cli.out.join("report.json"), &run.report)?;
    std::fs::write(cli.out.join("report.csv"), run.report.to_csv())?;
    bench::write_json(cli.out.join("records.json"), &run.records)?;
    bench::write_json(cli.out.join("recommended.json"), &rec)?;
    if !run.curve.is_empty() {
        bench::write_json(cli.out.join("curve.json"), &run.curve)?;
        std::fs::write(cli.out.join("curve.csv"), bench::curve_csv(&run.curve))?;
    }
    print!("{}", run.report.to_csv());
    Ok(())
}
