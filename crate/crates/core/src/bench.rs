//! Dataset, label and report files plus the benchmark pipeline.
//!
//! Every stage is deterministic for a fixed seed: per-graph randomness comes
//! from [`derive_seed`] and parallel work is collected in input order.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::derive_seed;
use crate::error::{Error, Result};
use crate::graph::{erdos_renyi, DatasetEntry, Graph, Split};
use crate::opt::{depth1_solve, fit_depth1_regression, generate_labels, LabelConfig, RecommendedList};
use crate::ppn::{normalize, prediction_error, PpnModel, TrainingSample};
use crate::qaoa::{EvalCounter, MaxCutQaoa, ParameterFile, ParameterSet};
use crate::strategies::{
    random_params, run_baseline, strategy_ppn1, strategy_ppn2, tqa_params, StrategyKind, StrategyOutcome,
    STAGE_DEPTH1,
};

pub const DEFAULT_GRAPHS: usize = 330;
pub const DEFAULT_NODES: usize = 8;
pub const DEFAULT_EDGE_PROB: f64 = 0.5;
pub const DEFAULT_TRAIN_COUNT: usize = 66;
pub const DEFAULT_LABEL_DEPTH: usize = 5;
pub const DEFAULT_TARGET_DEPTH: usize = 10;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: impl AsRef<Path>) -> Result<String> {
    Ok(sha256_hex(&std::fs::read(path)?))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<T> {
    Ok(serde_json::from_slice(&std::fs::read(path)?)?)
}

/// `n_graphs` Erdős–Rényi graphs; the first `train_count` are tagged train.
pub fn generate_dataset(
    n_graphs: usize,
    n_nodes: usize,
    edge_prob: f64,
    train_count: usize,
    seed: u64,
) -> Result<Vec<DatasetEntry>> {
    if n_graphs == 0 || train_count >= n_graphs {
        return Err(Error::InvalidArgument(format!(
            "need 0 <= train_count < n_graphs, got {train_count} of {n_graphs}"
        )));
    }
    (0..n_graphs)
        .map(|i| {
            let g = erdos_renyi(n_nodes, edge_prob, derive_seed(seed, i as u64))?;
            let split = if i < train_count { Split::Train } else { Split::Test };
            Ok(DatasetEntry { graph_id: i, split, graph: g.to_file() })
        })
        .collect()
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Vec<DatasetEntry>> {
    let entries: Vec<DatasetEntry> = read_json(path)?;
    for e in &entries {
        Graph::from_file(&e.graph)?;
    }
    Ok(entries)
}

pub fn split_entries(entries: &[DatasetEntry], split: Split) -> Vec<&DatasetEntry> {
    entries.iter().filter(|e| e.split == split).collect()
}

/// One element of a labels file. Depth keys are written as strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub graph_id: usize,
    pub params_by_depth: BTreeMap<usize, ParameterFile>,
    #[serde(default)]
    pub values_by_depth: BTreeMap<usize, f64>,
}

/// Labels of one training graph; index `d - 1` holds depth `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledInstance {
    pub graph_id: usize,
    pub graph: Graph,
    pub params_by_depth: Vec<ParameterSet>,
    pub values_by_depth: Vec<f64>,
}

impl LabeledInstance {
    pub fn to_record(&self) -> LabelRecord {
        LabelRecord {
            graph_id: self.graph_id,
            params_by_depth: self.params_by_depth.iter().map(|p| (p.depth(), p.to_file())).collect(),
            values_by_depth: self.values_by_depth.iter().enumerate().map(|(i, &v)| (i + 1, v)).collect(),
        }
    }

    /// Depths must run contiguously from 1. Missing values are recomputed.
    pub fn from_record(record: &LabelRecord, graph: Graph) -> Result<Self> {
        let mut params = Vec::with_capacity(record.params_by_depth.len());
        for (i, (&d, file)) in record.params_by_depth.iter().enumerate() {
            if d != i + 1 {
                return Err(Error::MissingLabel { graph_id: record.graph_id, depth: i + 1 });
            }
            let p = ParameterSet::from_file(file)?;
            if p.depth() != d {
                return Err(Error::SizeMismatch { expected: d, actual: p.depth() });
            }
            params.push(p);
        }
        let values = if record.values_by_depth.len() == params.len() {
            record.values_by_depth.values().copied().collect()
        } else {
            let qaoa = MaxCutQaoa::new(graph.clone())?;
            let c = EvalCounter::new();
            params.iter().map(|p| qaoa.expected_value(p, &c)).collect()
        };
        Ok(Self { graph_id: record.graph_id, graph, params_by_depth: params, values_by_depth: values })
    }
}

/// Labels every train entry in parallel, one independent seed per graph.
/// Depth 1 starts from `rec`.
pub fn label_dataset(
    entries: &[DatasetEntry],
    max_depth: usize,
    cfg: &LabelConfig,
    rec: &RecommendedList,
    seed: u64,
) -> Result<Vec<LabeledInstance>> {
    let train = split_entries(entries, Split::Train);
    train
        .par_iter()
        .map(|e| {
            let graph = Graph::from_file(&e.graph)?;
            let qaoa = MaxCutQaoa::new(graph.clone())?;
            let labels =
                generate_labels(&qaoa, max_depth, cfg, rec, derive_seed(seed, e.graph_id as u64), &EvalCounter::new())?;
            Ok(LabeledInstance {
                graph_id: e.graph_id,
                graph,
                params_by_depth: labels.params,
                values_by_depth: labels.values,
            })
        })
        .collect()
}

pub fn write_labels(path: impl AsRef<Path>, labels: &[LabeledInstance]) -> Result<()> {
    write_json(path, &labels.iter().map(LabeledInstance::to_record).collect::<Vec<_>>())
}

/// Joins a labels file with the graphs of its dataset.
pub fn read_labels(path: impl AsRef<Path>, entries: &[DatasetEntry]) -> Result<Vec<LabeledInstance>> {
    let records: Vec<LabelRecord> = read_json(path)?;
    let by_id: BTreeMap<usize, &DatasetEntry> = entries.iter().map(|e| (e.graph_id, e)).collect();
    records
        .iter()
        .map(|r| {
            let e = by_id
                .get(&r.graph_id)
                .ok_or_else(|| Error::InvalidArgument(format!("graph {} is not in the dataset", r.graph_id)))?;
            LabeledInstance::from_record(r, Graph::from_file(&e.graph)?)
        })
        .collect()
}

pub fn training_samples(labels: &[LabeledInstance], start: usize, horizon: usize) -> Result<Vec<TrainingSample>> {
    labels
        .iter()
        .map(|l| TrainingSample::from_labels(l.graph_id, &l.params_by_depth, start, horizon))
        .collect()
}

/// Training samples straight from a labels file, without the graphs.
pub fn samples_from_records(records: &[LabelRecord], start: usize, horizon: usize) -> Result<Vec<TrainingSample>> {
    records
        .iter()
        .map(|r| {
            let by_depth = r.params_by_depth.values().map(ParameterSet::from_file).collect::<Result<Vec<_>>>()?;
            TrainingSample::from_labels(r.graph_id, &by_depth, start, horizon)
        })
        .collect()
}

/// Depth-1 optima `(gamma, beta)` of every labeled graph.
pub fn depth1_optima(labels: &[LabeledInstance]) -> Result<Vec<(f64, f64)>> {
    labels
        .iter()
        .map(|l| {
            let p = l.params_by_depth.first().ok_or(Error::MissingLabel { graph_id: l.graph_id, depth: 1 })?;
            Ok((p.gammas()[0], p.betas()[0]))
        })
        .collect()
}

pub fn recommended_list_from_labels(labels: &[LabeledInstance], k: usize) -> Result<RecommendedList> {
    fit_depth1_regression(&depth1_optima(labels)?, k)
}

/// `phase,epoch,loss` rows, epochs counted from 1 within each phase.
pub fn loss_csv(history: &[f64], epochs_phase1: usize) -> String {
    let mut s = String::from("phase,epoch,loss\n");
    for (i, loss) in history.iter().enumerate() {
        let (phase, epoch) = if i < epochs_phase1 { (1, i + 1) } else { (2, i + 1 - epochs_phase1) };
        s.push_str(&format!("{phase},{epoch},{loss:e}\n"));
    }
    s
}

/// `steps` chained predictions from `params`, back in radians.
pub fn predict_params(model: &PpnModel, params: &ParameterSet, steps: usize) -> Result<ParameterSet> {
    crate::ppn::denormalize(&model.compose(&normalize(params)?, steps)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub strategies: Vec<StrategyKind>,
    pub target_depth: usize,
    pub delta_t: f64,
    pub seed: u64,
    /// Graph probed for the depth curve; `None` picks the first test graph.
    pub curve_graph: Option<usize>,
    /// Deepest probed depth; 0 skips the curve.
    pub curve_depth: usize,
    pub curve_labels: LabelConfig,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            strategies: StrategyKind::ALL.to_vec(),
            target_depth: DEFAULT_TARGET_DEPTH,
            delta_t: crate::strategies::DEFAULT_DELTA_T,
            seed: 0,
            curve_graph: None,
            curve_depth: DEFAULT_TARGET_DEPTH,
            curve_labels: LabelConfig::default(),
        }
    }
}

/// Outcome of one strategy on one test graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub graph_id: usize,
    pub strategy: StrategyKind,
    /// `None` for the depth search, which picks its own depth.
    pub target_depth: Option<usize>,
    pub chosen_depth: usize,
    pub approx_ratio: f64,
    pub final_value: f64,
    pub calls_by_stage: BTreeMap<String, u64>,
    pub total_calls: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub loop_iterations: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub visited_values: Vec<f64>,
    pub params: ParameterFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub n_graphs: usize,
    pub target_depth: Option<usize>,
    pub mean_approx_ratio: f64,
    pub mean_calls_by_stage: BTreeMap<String, f64>,
    /// Mean depth-1 calls for the strategies that start with a depth-1 solve.
    pub mean_depth1_calls: Option<f64>,
    /// Everything after the depth-1 solve.
    pub mean_extra_calls: f64,
    pub mean_total_calls: f64,
    pub mean_chosen_depth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub seed: u64,
    pub target_depth: usize,
    pub delta_t: f64,
    pub n_test_graphs: usize,
    pub dataset_sha256: String,
    pub model_sha256: String,
    /// Unix seconds; the only field that differs between identical runs.
    pub timestamp: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub metadata: ReportMetadata,
    pub rows: BTreeMap<StrategyKind, ReportRow>,
}

impl BenchmarkReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "strategy,n_graphs,target_depth,approx_ratio,depth1_calls,extra_calls,total_calls,chosen_depth\n",
        );
        for (k, r) in &self.rows {
            let opt = |v: Option<String>| v.unwrap_or_default();
            s.push_str(&format!(
                "{},{},{},{:.6},{},{:.2},{:.2},{:.2}\n",
                k.name(),
                r.n_graphs,
                opt(r.target_depth.map(|d| d.to_string())),
                r.mean_approx_ratio,
                opt(r.mean_depth1_calls.map(|v| format!("{v:.2}"))),
                r.mean_extra_calls,
                r.mean_total_calls,
                r.mean_chosen_depth,
            ));
        }
        s
    }

    /// JSON with the timestamp zeroed, for comparing runs.
    pub fn canonical_json(&self) -> Result<String> {
        let mut r = self.clone();
        r.metadata.timestamp = 0;
        Ok(serde_json::to_string_pretty(&r)?)
    }
}

/// One probed depth of the prediction curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub depth: usize,
    pub predicted_ratio: f64,
    pub optimized_ratio: f64,
    /// Squared distance between normalized predicted and optimized parameters.
    pub prediction_error: f64,
}

pub fn curve_csv(points: &[CurvePoint]) -> String {
    let mut s = String::from("depth,predicted_ratio,optimized_ratio,prediction_error\n");
    for p in points {
        s.push_str(&format!("{},{:.8},{:.8},{:.8e}\n", p.depth, p.predicted_ratio, p.optimized_ratio, p.prediction_error));
    }
    s
}

/// Chains predictions from the depth-1 optimum to `max_depth` and compares
/// each with freshly optimized parameters at the same depth.
pub fn prediction_curve(
    qaoa: &MaxCutQaoa,
    model: &PpnModel,
    rec: &RecommendedList,
    max_depth: usize,
    cfg: &LabelConfig,
    seed: u64,
) -> Result<Vec<CurvePoint>> {
    let c = EvalCounter::new();
    let fresh = generate_labels(qaoa, max_depth, cfg, rec, seed, &c)?;
    let d1 = depth1_solve(qaoa, rec, &c)?;
    let mut x = normalize(&d1.best_params)?;
    let mut out = Vec::with_capacity(max_depth);
    for depth in 1..=max_depth {
        if depth > 1 {
            x = model.forward(&x)?;
        }
        let predicted = crate::ppn::denormalize(&x)?;
        out.push(CurvePoint {
            depth,
            predicted_ratio: qaoa.approximation_ratio(&predicted, &c),
            optimized_ratio: fresh.values[depth - 1] / qaoa.optimum(),
            prediction_error: prediction_error(&x, &normalize(&fresh.params[depth - 1])?)?,
        });
    }
    Ok(out)
}

pub struct BenchRun {
    pub records: Vec<RunRecord>,
    pub report: BenchmarkReport,
    pub curve: Vec<CurvePoint>,
}

fn run_one(
    kind: StrategyKind,
    qaoa: &MaxCutQaoa,
    graph_id: usize,
    model: &PpnModel,
    rec: &RecommendedList,
    cfg: &BenchConfig,
) -> Result<RunRecord> {
    let counter = EvalCounter::new();
    let out: StrategyOutcome = match kind {
        StrategyKind::Ppn1 => strategy_ppn1(qaoa, model, cfg.target_depth, rec, &counter)?,
        StrategyKind::Ppn2 => strategy_ppn2(qaoa, model, rec, &counter)?,
        StrategyKind::Tqa => run_baseline(qaoa, &tqa_params(cfg.target_depth, cfg.delta_t)?, &counter)?,
        StrategyKind::Random => run_baseline(
            qaoa,
            &random_params(cfg.target_depth, derive_seed(cfg.seed, graph_id as u64))?,
            &counter,
        )?,
    };
    let total = out.total_calls();
    if total != counter.get() {
        return Err(Error::InvalidArgument(format!(
            "{} on graph {graph_id}: stage calls {total} disagree with counter {}",
            kind.name(),
            counter.get()
        )));
    }
    Ok(RunRecord {
        graph_id,
        strategy: kind,
        target_depth: (kind != StrategyKind::Ppn2).then_some(cfg.target_depth),
        chosen_depth: out.final_params.depth(),
        approx_ratio: out.approx_ratio,
        final_value: out.final_value,
        calls_by_stage: out.calls_by_stage,
        total_calls: total,
        loop_iterations: out.loop_iterations,
        visited_values: out.visited_values,
        params: out.final_params.to_file(),
    })
}

fn aggregate(records: &[&RunRecord], target_depth: Option<usize>) -> ReportRow {
    let n = records.len() as f64;
    let mut stages: BTreeMap<String, f64> = BTreeMap::new();
    for r in records {
        for (k, &v) in &r.calls_by_stage {
            *stages.entry(k.clone()).or_default() += v as f64;
        }
    }
    for v in stages.values_mut() {
        *v /= n;
    }
    let mean = |f: &dyn Fn(&RunRecord) -> f64| records.iter().map(|r| f(r)).sum::<f64>() / n;
    let total = mean(&|r| r.total_calls as f64);
    let depth1 = stages.get(STAGE_DEPTH1).copied();
    ReportRow {
        n_graphs: records.len(),
        target_depth,
        mean_approx_ratio: mean(&|r| r.approx_ratio),
        mean_depth1_calls: depth1,
        mean_extra_calls: total - depth1.unwrap_or(0.0),
        mean_total_calls: total,
        mean_chosen_depth: mean(&|r| r.chosen_depth as f64),
        mean_calls_by_stage: stages,
    }
}

/// Runs every requested strategy on every test entry.
pub fn run_benchmark(
    entries: &[DatasetEntry],
    model: &PpnModel,
    rec: &RecommendedList,
    cfg: &BenchConfig,
    hashes: (String, String),
) -> Result<BenchRun> {
    if cfg.strategies.is_empty() {
        return Err(Error::InvalidArgument("no strategies requested".into()));
    }
    if cfg.strategies.contains(&StrategyKind::Ppn1) && cfg.target_depth < 2 {
        return Err(Error::InvalidArgument("ppn1 needs a target depth of at least 2".into()));
    }
    let test = split_entries(entries, Split::Test);
    if test.is_empty() {
        return Err(Error::InvalidArgument("dataset has no test graphs".into()));
    }
    let mut kinds = cfg.strategies.clone();
    kinds.sort();
    kinds.dedup();

    let per_graph: Vec<Vec<RunRecord>> = test
        .par_iter()
        .map(|e| {
            let qaoa = MaxCutQaoa::new(Graph::from_file(&e.graph)?)?;
            kinds.iter().map(|&k| run_one(k, &qaoa, e.graph_id, model, rec, cfg)).collect()
        })
        .collect::<Result<_>>()?;

    let mut records = Vec::with_capacity(test.len() * kinds.len());
    let mut rows = BTreeMap::new();
    for (i, &k) in kinds.iter().enumerate() {
        let of_kind: Vec<&RunRecord> = per_graph.iter().map(|g| &g[i]).collect();
        rows.insert(k, aggregate(&of_kind, (k != StrategyKind::Ppn2).then_some(cfg.target_depth)));
        records.extend(of_kind.into_iter().cloned());
    }

    let curve = if cfg.curve_depth == 0 {
        Vec::new()
    } else {
        let id = cfg.curve_graph.unwrap_or(test[0].graph_id);
        let e = entries
            .iter()
            .find(|e| e.graph_id == id)
            .ok_or_else(|| Error::InvalidArgument(format!("curve graph {id} is not in the dataset")))?;
        let qaoa = MaxCutQaoa::new(Graph::from_file(&e.graph)?)?;
        prediction_curve(&qaoa, model, rec, cfg.curve_depth, &cfg.curve_labels, derive_seed(cfg.seed, u64::MAX))?
    };

    let timestamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let report = BenchmarkReport {
        metadata: ReportMetadata {
            seed: cfg.seed,
            target_depth: cfg.target_depth,
            delta_t: cfg.delta_t,
            n_test_graphs: test.len(),
            dataset_sha256: hashes.0,
            model_sha256: hashes.1,
            timestamp,
        },
        rows,
    };
    Ok(BenchRun { records, report, curve })
}
