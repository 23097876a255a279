//! Classical side of the loop: bounded optimization of the QAOA expectation,
//! the depth-1 regression recommender and training-label generation.

mod labels;
mod lbfgs;
mod regression;

pub use labels::{depth1_solve, generate_labels, interpolate_schedule, LabelConfig, Labels};
pub use lbfgs::{bounded_minimize, MinimizeOptions, MinimizeResult};
pub use regression::{fit_depth1_regression, pearson, RecommendedList, DEFAULT_LIST_SIZE};

use crate::error::Result;
use crate::qaoa::{EvalCounter, MaxCutQaoa, ParameterSet};

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeResult {
    pub best_params: ParameterSet,
    /// Expected value at `best_params` (maximized).
    pub best_value: f64,
    /// Expected-value evaluations consumed, gradient probes included.
    pub n_evals: u64,
    pub converged: bool,
}

/// Maximizes the expected value from `init` inside the parameter box.
pub fn optimize_qaoa(qaoa: &MaxCutQaoa, init: &ParameterSet, counter: &EvalCounter) -> Result<OptimizeResult> {
    optimize_qaoa_with(qaoa, init, counter, &MinimizeOptions::default())
}

pub fn optimize_qaoa_with(
    qaoa: &MaxCutQaoa,
    init: &ParameterSet,
    counter: &EvalCounter,
    opts: &MinimizeOptions,
) -> Result<OptimizeResult> {
    let depth = init.depth();
    let bounds = ParameterSet::flat_bounds(depth);
    let objective = |x: &[f64]| {
        let params = ParameterSet::from_flat(x).expect("optimizer keeps the flat layout");
        -qaoa.expected_value(&params, counter)
    };
    let r = bounded_minimize(objective, &init.to_flat(), &bounds, opts)?;
    Ok(OptimizeResult {
        best_params: ParameterSet::new(r.x[..depth].to_vec(), r.x[depth..].to_vec())?,
        best_value: -r.value,
        n_evals: r.n_evals,
        converged: r.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{erdos_renyi, Graph};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn single_edge() -> MaxCutQaoa {
        MaxCutQaoa::new(Graph::new(2, [(1, 2)]).unwrap()).unwrap()
    }

    fn grid_best(qaoa: &MaxCutQaoa, steps: usize) -> (f64, ParameterSet) {
        let c = EvalCounter::new();
        let mut best = (f64::MIN, ParameterSet::new(vec![0.0], vec![0.0]).unwrap());
        for i in 0..steps {
            for j in 0..steps {
                let p = ParameterSet::new(
                    vec![PI * i as f64 / steps as f64],
                    vec![FRAC_PI_2 * j as f64 / steps as f64],
                )
                .unwrap();
                let v = qaoa.expected_value(&p, &c);
                if v > best.0 {
                    best = (v, p);
                }
            }
        }
        best
    }

    #[test]
    fn bounded_minimize_on_grid_best_start() {
        let qaoa = single_edge();
        let (_, start) = grid_best(&qaoa, 100);
        let c = EvalCounter::new();
        let r = bounded_minimize(
            |x| -qaoa.expected_value(&ParameterSet::from_flat(x).unwrap(), &c),
            &start.to_flat(),
            &ParameterSet::flat_bounds(1),
            &MinimizeOptions::default(),
        )
        .unwrap();
        assert!((r.value + 1.0).abs() < 1e-6);
        assert_eq!(r.n_evals, c.get());
    }

    #[test]
    fn single_edge_from_small_angles() {
        let qaoa = single_edge();
        let c = EvalCounter::new();
        let init = ParameterSet::new(vec![0.1], vec![0.1]).unwrap();
        let r = optimize_qaoa(&qaoa, &init, &c).unwrap();
        assert!((r.best_value - 1.0).abs() < 1e-5, "{r:?}");
        assert_eq!(r.n_evals, c.get());
        assert!(r.best_params.in_box());
        assert!((qaoa.expected_value(&r.best_params, &c) - r.best_value).abs() < 1e-9);
    }

    #[test]
    fn stationary_start_is_kept() {
        let qaoa = single_edge();
        let c = EvalCounter::new();
        let opt = ParameterSet::new(vec![FRAC_PI_2], vec![PI / 8.0]).unwrap();
        let r = optimize_qaoa(&qaoa, &opt, &c).unwrap();
        assert!((r.best_value - 1.0).abs() < 1e-8);
        assert!(r.n_evals <= 10, "{}", r.n_evals);
    }

    #[test]
    fn multistart_matches_dense_grid() {
        let g = erdos_renyi(8, 0.5, 11).unwrap();
        let qaoa = MaxCutQaoa::new(g).unwrap();
        let (grid, _) = grid_best(&qaoa, 200);
        let c = EvalCounter::new();
        let mut best = f64::MIN;
        for k in 0..10 {
            let init = ParameterSet::new(vec![0.05 + 0.3 * k as f64], vec![0.02 + 0.15 * k as f64]).unwrap();
            best = best.max(optimize_qaoa(&qaoa, &init, &c).unwrap().best_value);
        }
        assert!((best - grid).abs() < 1e-3, "opt {best} grid {grid}");
    }
}
