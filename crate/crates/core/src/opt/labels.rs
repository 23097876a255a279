use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{optimize_qaoa, OptimizeResult, RecommendedList};
use crate::error::{Error, Result};
use crate::qaoa::{uniform_params, EvalCounter, MaxCutQaoa, ParameterSet};

/// Evaluates every recommended point once, then refines the best one.
pub fn depth1_solve(qaoa: &MaxCutQaoa, rec: &RecommendedList, counter: &EvalCounter) -> Result<OptimizeResult> {
    if rec.points.is_empty() {
        return Err(Error::InvalidArgument("empty recommended list".into()));
    }
    let mut best: Option<(f64, ParameterSet)> = None;
    for params in rec.params() {
        let v = qaoa.expected_value(&params, counter);
        if best.as_ref().map_or(true, |(b, _)| v > *b) {
            best = Some((v, params));
        }
    }
    let (_, start) = best.expect("list is non-empty");
    let mut r = optimize_qaoa(qaoa, &start, counter)?;
    r.n_evals += rec.points.len() as u64;
    Ok(r)
}

/// Optimizer starts per depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelConfig {
    /// Depth 1: the recommended-list start plus `restarts_depth1 - 1` random starts.
    pub restarts_depth1: usize,
    /// Deeper: the zero-appended previous optimum plus `restarts_higher - 1` random starts.
    pub restarts_higher: usize,
    /// Also start deeper depths from the previous optimum interpolated onto
    /// one more layer, tried first so it wins ties.
    pub interpolated_start: bool,
}

impl Default for LabelConfig {
    fn default() -> Self {
        Self { restarts_depth1: 10, restarts_higher: 5, interpolated_start: true }
    }
}

/// Stretches a depth-`p` schedule onto `p + 1` layers by linear
/// interpolation: `x'_i = (i-1)/p x_{i-1} + (p-i+1)/p x_i`, `x_0 = x_{p+1} = 0`.
pub fn interpolate_schedule(params: &ParameterSet) -> ParameterSet {
    let stretch = |x: &[f64]| -> Vec<f64> {
        let p = x.len();
        let at = |i: usize| if i == 0 || i > p { 0.0 } else { x[i - 1] };
        (1..=p + 1)
            .map(|i| ((i - 1) as f64 * at(i - 1) + (p + 1 - i) as f64 * at(i)) / p as f64)
            .collect()
    };
    ParameterSet::raw(stretch(params.gammas()), stretch(params.betas())).expect("equal lengths")
}

/// Quasi-optimal parameters for depths `1..=max_depth`; index `d - 1` holds depth `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Labels {
    pub params: Vec<ParameterSet>,
    pub values: Vec<f64>,
}

fn keep_best(best: &mut Option<OptimizeResult>, candidate: OptimizeResult) {
    // first result within 1e-12 of the best value wins
    if best.as_ref().map_or(true, |b| candidate.best_value > b.best_value + 1e-12) {
        *best = Some(candidate);
    }
}

/// Depth-progressive multi-start labeling. Each deeper start includes the
/// previous optimum with a `(0, 0)` layer appended, so values never decrease.
pub fn generate_labels(
    qaoa: &MaxCutQaoa,
    max_depth: usize,
    cfg: &LabelConfig,
    rec: &RecommendedList,
    seed: u64,
    counter: &EvalCounter,
) -> Result<Labels> {
    if max_depth == 0 {
        return Err(Error::InvalidArgument("max_depth must be at least 1".into()));
    }
    if cfg.restarts_depth1 == 0 || cfg.restarts_higher == 0 {
        return Err(Error::InvalidArgument("restart counts must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels = Labels { params: Vec::with_capacity(max_depth), values: Vec::with_capacity(max_depth) };

    let mut best = Some(depth1_solve(qaoa, rec, counter)?);
    for _ in 1..cfg.restarts_depth1 {
        let start = uniform_params(1, &mut rng);
        keep_best(&mut best, optimize_qaoa(qaoa, &start, counter)?);
    }
    let mut current = best.expect("at least one start");
    labels.params.push(current.best_params.clone());
    labels.values.push(current.best_value);

    for depth in 2..=max_depth {
        let mut best = None;
        if cfg.interpolated_start {
            best = Some(optimize_qaoa(qaoa, &interpolate_schedule(&current.best_params), counter)?);
        }
        keep_best(&mut best, optimize_qaoa(qaoa, &current.best_params.with_layer(0.0, 0.0), counter)?);
        for _ in 1..cfg.restarts_higher {
            let start = uniform_params(depth, &mut rng);
            keep_best(&mut best, optimize_qaoa(qaoa, &start, counter)?);
        }
        current = best.expect("at least one start");
        labels.params.push(current.best_params.clone());
        labels.values.push(current.best_value);
    }
    Ok(labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{erdos_renyi, Graph};
    use crate::opt::RecommendedList;

    fn list() -> RecommendedList {
        RecommendedList::diagonal(10)
    }

    #[test]
    fn depth1_counts_list_and_optimizer() {
        let qaoa = MaxCutQaoa::new(erdos_renyi(8, 0.5, 4).unwrap()).unwrap();
        let c = EvalCounter::new();
        let r = depth1_solve(&qaoa, &list(), &c).unwrap();
        assert_eq!(r.n_evals, c.get());
        let c2 = EvalCounter::new();
        let refined = optimize_qaoa(&qaoa, &ParameterSet::new(vec![0.1], vec![0.1]).unwrap(), &c2).unwrap();
        assert!(refined.n_evals > 0 && r.n_evals > 10);
    }

    #[test]
    fn depth1_single_edge() {
        let qaoa = MaxCutQaoa::new(Graph::new(2, [(1, 2)]).unwrap()).unwrap();
        let rec = RecommendedList { slope: 0.0, intercept: 0.2, points: vec![(0.3, 0.2), (2.9, 0.2)] };
        let r = depth1_solve(&qaoa, &rec, &EvalCounter::new()).unwrap();
        assert!((r.best_value - 1.0).abs() < 1e-5);
    }

    #[test]
    fn depth1_stationary_point_in_list() {
        let qaoa = MaxCutQaoa::new(Graph::new(2, [(1, 2)]).unwrap()).unwrap();
        let b = std::f64::consts::PI / 8.0;
        let rec = RecommendedList { slope: 0.0, intercept: b, points: vec![(0.4, b), (std::f64::consts::FRAC_PI_2, b)] };
        let r = depth1_solve(&qaoa, &rec, &EvalCounter::new()).unwrap();
        assert!((r.best_value - 1.0).abs() < 1e-8);
    }

    #[test]
    fn labels_never_decrease() {
        let qaoa = MaxCutQaoa::new(erdos_renyi(8, 0.5, 9).unwrap()).unwrap();
        let cfg = LabelConfig { restarts_depth1: 3, restarts_higher: 2, interpolated_start: true };
        let labels = generate_labels(&qaoa, 4, &cfg, &list(), 1, &EvalCounter::new()).unwrap();
        assert_eq!(labels.params.len(), 4);
        for w in labels.values.windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "{:?}", labels.values);
        }
        for (d, p) in labels.params.iter().enumerate() {
            assert_eq!(p.depth(), d + 1);
            assert!(p.in_box());
        }
    }

    #[test]
    fn single_edge_labels_are_exact() {
        let qaoa = MaxCutQaoa::new(Graph::new(2, [(1, 2)]).unwrap()).unwrap();
        let cfg = LabelConfig { restarts_depth1: 2, restarts_higher: 2, interpolated_start: true };
        let labels = generate_labels(&qaoa, 3, &cfg, &list(), 5, &EvalCounter::new()).unwrap();
        for v in labels.values {
            assert!((v - 1.0).abs() < 1e-5);
        }
    }

    #[test]
    fn depth_one_labels_reduce_to_depth1_solve() {
        let qaoa = MaxCutQaoa::new(erdos_renyi(8, 0.5, 12).unwrap()).unwrap();
        let cfg = LabelConfig { restarts_depth1: 1, restarts_higher: 1, interpolated_start: false };
        let labels = generate_labels(&qaoa, 1, &cfg, &list(), 0, &EvalCounter::new()).unwrap();
        let direct = depth1_solve(&qaoa, &list(), &EvalCounter::new()).unwrap();
        assert_eq!(labels.params[0], direct.best_params);
        assert!(generate_labels(&qaoa, 0, &cfg, &list(), 0, &EvalCounter::new()).is_err());
    }

    #[test]
    fn interpolation_examples() {
        let p = ParameterSet::new(vec![0.6], vec![0.4]).unwrap();
        let q = interpolate_schedule(&p);
        assert_eq!((q.gammas(), q.betas()), (&[0.6, 0.6][..], &[0.4, 0.4][..]));
        let p = ParameterSet::new(vec![0.2, 0.8], vec![0.6, 0.2]).unwrap();
        let q = interpolate_schedule(&p);
        let expect = [0.2, 0.5, 0.8];
        for (a, b) in q.gammas().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(q.in_box());
    }

    #[test]
    fn labels_without_interpolation_never_decrease() {
        let qaoa = MaxCutQaoa::new(erdos_renyi(7, 0.5, 2).unwrap()).unwrap();
        let cfg = LabelConfig { restarts_depth1: 2, restarts_higher: 2, interpolated_start: false };
        let labels = generate_labels(&qaoa, 3, &cfg, &list(), 3, &EvalCounter::new()).unwrap();
        for w in labels.values.windows(2) {
            assert!(w[1] >= w[0] - 1e-9);
        }
    }
}
