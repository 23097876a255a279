//! Initialization strategies compared by the benchmark.
//!
//! - `ppn1`: optimize depth 1, chain network predictions up to the target
//!   depth, optimize once from the prediction.
//! - `ppn2`: optimize depth 1, then keep predicting one depth deeper and
//!   evaluating once per depth while the expected value strictly increases.
//! - `tqa` and `random`: a single optimization at the target depth from a
//!   linear annealing schedule or from uniform random angles.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::opt::{depth1_solve, optimize_qaoa, RecommendedList};
use crate::ppn::{denormalize, normalize, PpnModel};
use crate::qaoa::{uniform_params, EvalCounter, MaxCutQaoa, ParameterSet};

pub const STAGE_DEPTH1: &str = "depth1";
pub const STAGE_EXTRA: &str = "extra";
pub const STAGE_FINAL_OPT: &str = "final_opt";

/// Deepest parameter set the depth search may evaluate.
pub const DEPTH_SEARCH_CAP: usize = 50;

/// Annealing step used by the `tqa` baseline.
pub const DEFAULT_DELTA_T: f64 = 0.625;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    Ppn1,
    Ppn2,
    Tqa,
    Random,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 4] = [Self::Ppn1, Self::Ppn2, Self::Tqa, Self::Random];

    pub fn name(self) -> &'static str {
        match self {
            Self::Ppn1 => "ppn1",
            Self::Ppn2 => "ppn2",
            Self::Tqa => "tqa",
            Self::Random => "random",
        }
    }
}

impl std::str::FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::UnknownStrategy(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyOutcome {
    pub final_params: ParameterSet,
    pub final_value: f64,
    pub approx_ratio: f64,
    pub calls_by_stage: BTreeMap<String, u64>,
    /// Depth of the returned parameters for the depth search.
    pub chosen_depth: Option<usize>,
    /// Depth search only: while-loop iterations and the value seen at every
    /// evaluated depth, starting at depth 1.
    pub loop_iterations: Option<usize>,
    pub visited_values: Vec<f64>,
}

impl StrategyOutcome {
    pub fn total_calls(&self) -> u64 {
        self.calls_by_stage.values().sum()
    }

    fn new(qaoa: &MaxCutQaoa, params: ParameterSet, value: f64, stages: &[(&str, u64)]) -> Self {
        Self {
            approx_ratio: value / qaoa.optimum(),
            final_params: params,
            final_value: value,
            calls_by_stage: stages.iter().map(|&(k, v)| (k.to_string(), v)).collect(),
            chosen_depth: None,
            loop_iterations: None,
            visited_values: Vec::new(),
        }
    }
}

/// Depth-1 optimum, `target_depth - 1` chained predictions, one optimization.
pub fn strategy_ppn1(
    qaoa: &MaxCutQaoa,
    model: &PpnModel,
    target_depth: usize,
    rec: &RecommendedList,
    counter: &EvalCounter,
) -> Result<StrategyOutcome> {
    if target_depth < 2 {
        return Err(Error::InvalidArgument("ppn1 needs a target depth of at least 2".into()));
    }
    let d1 = depth1_solve(qaoa, rec, counter)?;
    let predicted = model.compose(&normalize(&d1.best_params)?, target_depth - 1)?;
    let init = denormalize(&predicted)?;
    let r = optimize_qaoa(qaoa, &init, counter)?;
    Ok(StrategyOutcome::new(
        qaoa,
        r.best_params,
        r.best_value,
        &[(STAGE_DEPTH1, d1.n_evals), (STAGE_FINAL_OPT, r.n_evals)],
    ))
}

/// Depth search: after the depth-1 optimum, evaluate each successive
/// prediction once and stop at the first value that is not a strict
/// improvement, returning the previous parameters.
pub fn strategy_ppn2(
    qaoa: &MaxCutQaoa,
    model: &PpnModel,
    rec: &RecommendedList,
    counter: &EvalCounter,
) -> Result<StrategyOutcome> {
    let d1 = depth1_solve(qaoa, rec, counter)?;
    let mut extra = 0u64;
    let mut visited = Vec::new();

    let mut best_output = 0.0;
    let mut best_params = d1.best_params.clone();
    let mut phi = normalize(&d1.best_params)?;
    let mut current = d1.best_params;
    let mut temp_output = qaoa.expected_value(&current, counter);
    extra += 1;
    visited.push(temp_output);
    let mut iterations = 0usize;
    while temp_output > best_output {
        best_output = temp_output;
        best_params = current.clone();
        if current.depth() >= DEPTH_SEARCH_CAP {
            return Err(Error::DepthCapReached(DEPTH_SEARCH_CAP));
        }
        phi = model.forward(&phi)?;
        current = denormalize(&phi)?;
        temp_output = qaoa.expected_value(&current, counter);
        extra += 1;
        visited.push(temp_output);
        iterations += 1;
    }

    let mut out = StrategyOutcome::new(qaoa, best_params, best_output, &[(STAGE_DEPTH1, d1.n_evals), (STAGE_EXTRA, extra)]);
    out.chosen_depth = Some(out.final_params.depth());
    out.loop_iterations = Some(iterations);
    out.visited_values = visited;
    Ok(out)
}

/// `gamma_i = (i / p) dt`, `beta_i = (1 - i / p) dt` for `i = 1..=p`.
pub fn tqa_params(target_depth: usize, delta_t: f64) -> Result<ParameterSet> {
    if target_depth == 0 {
        return Err(Error::InvalidArgument("target depth must be at least 1".into()));
    }
    if !(delta_t > 0.0) {
        return Err(Error::InvalidArgument(format!("delta_t must be positive, got {delta_t}")));
    }
    let p = target_depth as f64;
    let gammas = (1..=target_depth).map(|i| i as f64 / p * delta_t).collect();
    let betas = (1..=target_depth).map(|i| (1.0 - i as f64 / p) * delta_t).collect();
    ParameterSet::new(gammas, betas)
}

/// Uniform angles over the box, reproducible per seed.
pub fn random_params(depth: usize, seed: u64) -> Result<ParameterSet> {
    if depth == 0 {
        return Err(Error::InvalidArgument("depth must be at least 1".into()));
    }
    Ok(uniform_params(depth, &mut ChaCha8Rng::seed_from_u64(seed)))
}

/// One optimization from `init`; every call is charged to `extra`.
pub fn run_baseline(qaoa: &MaxCutQaoa, init: &ParameterSet, counter: &EvalCounter) -> Result<StrategyOutcome> {
    let r = optimize_qaoa(qaoa, init, counter)?;
    Ok(StrategyOutcome::new(qaoa, r.best_params, r.best_value, &[(STAGE_EXTRA, r.n_evals)]))
}
