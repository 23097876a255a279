//! Box-constrained limited-memory quasi-Newton minimization with
//! finite-difference gradients.
//!
//! Each iteration fixes the variables that sit on a bound with the gradient
//! pushing outward, builds an L-BFGS direction over the remaining ones and
//! runs a backtracking Armijo search along the projected path. Every
//! objective evaluation, including gradient probes, is counted.

use std::collections::VecDeque;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizeOptions {
    /// Finite-difference step.
    pub fd_step: f64,
    /// Stop once an accepted step improves the objective by less than this.
    pub f_tol: f64,
    /// Stop once the projected gradient infinity-norm drops below this.
    pub pg_tol: f64,
    pub max_iter: usize,
    /// Number of stored curvature pairs.
    pub memory: usize,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self { fd_step: 1e-6, f_tol: 1e-8, pg_tol: 1e-6, max_iter: 500, memory: 10 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub n_evals: u64,
    pub iterations: usize,
    pub converged: bool,
}

/// Largest double strictly below `hi`; bounds are closed below, open above.
fn below(hi: f64) -> f64 {
    if hi > 0.0 {
        f64::from_bits(hi.to_bits() - 1)
    } else if hi == 0.0 {
        -f64::from_bits(1)
    } else {
        f64::from_bits(hi.to_bits() + 1)
    }
}

struct Problem<'a, F> {
    f: F,
    lo: Vec<f64>,
    hi: Vec<f64>,
    n_evals: &'a mut u64,
}

impl<F: FnMut(&[f64]) -> f64> Problem<'_, F> {
    fn eval(&mut self, x: &[f64]) -> Result<f64> {
        *self.n_evals += 1;
        let v = (self.f)(x);
        if !v.is_finite() {
            return Err(Error::NonFinite(*self.n_evals));
        }
        Ok(v)
    }

    fn project(&self, x: &mut [f64]) {
        for ((xi, &l), &h) in x.iter_mut().zip(&self.lo).zip(&self.hi) {
            *xi = xi.clamp(l, h);
        }
    }

    fn gradient(&mut self, x: &[f64], fx: f64, h: f64) -> Result<Vec<f64>> {
        let mut probe = x.to_vec();
        let mut g = vec![0.0; x.len()];
        for i in 0..x.len() {
            let xi = x[i];
            let up = xi + h <= self.hi[i];
            let down = xi - h >= self.lo[i];
            g[i] = match (up, down) {
                (true, true) => {
                    probe[i] = xi + h;
                    let fp = self.eval(&probe)?;
                    probe[i] = xi - h;
                    let fm = self.eval(&probe)?;
                    (fp - fm) / (2.0 * h)
                }
                (true, false) => {
                    probe[i] = xi + h;
                    (self.eval(&probe)? - fx) / h
                }
                (false, true) => {
                    probe[i] = xi - h;
                    (fx - self.eval(&probe)?) / h
                }
                (false, false) => 0.0,
            };
            probe[i] = xi;
        }
        Ok(g)
    }

    /// Variables held on a bound this iteration.
    fn active(&self, x: &[f64], g: &[f64]) -> Vec<bool> {
        x.iter()
            .zip(g)
            .zip(self.lo.iter().zip(&self.hi))
            .map(|((&xi, &gi), (&l, &h))| (xi <= l && gi > 0.0) || (xi >= h && gi < 0.0))
            .collect()
    }

    fn projected_gradient_norm(&self, x: &[f64], g: &[f64]) -> f64 {
        x.iter()
            .zip(g)
            .zip(self.lo.iter().zip(&self.hi))
            .map(|((&xi, &gi), (&l, &h))| ((xi - gi).clamp(l, h) - xi).abs())
            .fold(0.0, f64::max)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn two_loop(g: &[f64], free: &[bool], pairs: &VecDeque<(Vec<f64>, Vec<f64>)>) -> Vec<f64> {
    let mask = |v: &[f64]| -> Vec<f64> {
        v.iter().zip(free).map(|(&x, &f)| if f { x } else { 0.0 }).collect()
    };
    let mut q = mask(g);
    let masked: Vec<(Vec<f64>, Vec<f64>)> = pairs.iter().map(|(s, y)| (mask(s), mask(y))).collect();
    let mut alphas = Vec::with_capacity(masked.len());
    for (s, y) in masked.iter().rev() {
        let sy = dot(s, y);
        if sy <= 1e-16 {
            alphas.push(0.0);
            continue;
        }
        let a = dot(s, &q) / sy;
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y)) = masked.last() {
        let yy = dot(y, y);
        let sy = dot(s, y);
        if yy > 0.0 && sy > 1e-16 {
            let gamma = sy / yy;
            q.iter_mut().for_each(|v| *v *= gamma);
        }
    }
    for ((s, y), a) in masked.iter().zip(alphas.iter().rev()) {
        let sy = dot(s, y);
        if sy <= 1e-16 {
            continue;
        }
        let b = dot(y, &q) / sy;
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter().map(|v| -v).collect()
}

/// Minimizes `f` over the box `lo <= x < hi`, starting at `x0`.
pub fn bounded_minimize<F>(
    f: F,
    x0: &[f64],
    bounds: &[(f64, f64)],
    opts: &MinimizeOptions,
) -> Result<MinimizeResult>
where
    F: FnMut(&[f64]) -> f64,
{
    if x0.is_empty() || x0.len() != bounds.len() {
        return Err(Error::SizeMismatch { expected: bounds.len(), actual: x0.len() });
    }
    for (i, (&x, &(l, h))) in x0.iter().zip(bounds).enumerate() {
        if !(l.is_finite() && h.is_finite() && l < h) {
            return Err(Error::InvalidArgument(format!("bad bounds [{l}, {h}) for coordinate {i}")));
        }
        if !(l..h).contains(&x) {
            return Err(Error::OutOfBounds(format!("x0[{i}] = {x} outside [{l}, {h})")));
        }
    }

    let mut n_evals = 0u64;
    let mut prob = Problem {
        f,
        lo: bounds.iter().map(|b| b.0).collect(),
        hi: bounds.iter().map(|b| below(b.1)).collect(),
        n_evals: &mut n_evals,
    };

    let mut x = x0.to_vec();
    let mut fx = prob.eval(&x)?;
    let mut g = prob.gradient(&x, fx, opts.fd_step)?;
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>)> = VecDeque::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        if prob.projected_gradient_norm(&x, &g) < opts.pg_tol {
            converged = true;
            break;
        }
        iterations += 1;

        let free: Vec<bool> = prob.active(&x, &g).into_iter().map(|a| !a).collect();
        let mut d = two_loop(&g, &free, &pairs);
        let mut first_step = 1.0;
        if dot(&d, &g) >= 0.0 || pairs.is_empty() {
            pairs.clear();
            d = g.iter().zip(&free).map(|(&gi, &f)| if f { -gi } else { 0.0 }).collect();
            let dmax = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if dmax > 0.0 {
                first_step = (1.0 / dmax).min(1.0);
            }
        }

        let mut step = first_step;
        let mut accepted = None;
        for _ in 0..40 {
            let mut trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + step * di).collect();
            prob.project(&mut trial);
            let moved: Vec<f64> = trial.iter().zip(&x).map(|(t, xi)| t - xi).collect();
            let decrease = dot(&g, &moved);
            if decrease >= 0.0 {
                step *= 0.5;
                continue;
            }
            let ft = prob.eval(&trial)?;
            if ft <= fx + 1e-4 * decrease {
                accepted = Some((trial, ft));
                break;
            }
            step *= 0.5;
        }

        let Some((x_new, f_new)) = accepted else {
            // no descent along the projected path: the remaining gradient is
            // finite-difference noise or the point is a bound-stationary corner
            converged = prob.projected_gradient_norm(&x, &g) < 1e3 * opts.pg_tol;
            break;
        };

        let g_new = prob.gradient(&x_new, f_new, opts.fd_step)?;
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-10 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if pairs.len() == opts.memory {
                pairs.pop_front();
            }
            pairs.push_back((s, y));
        }
        let improvement = fx - f_new;
        x = x_new;
        fx = f_new;
        g = g_new;
        if improvement < opts.f_tol {
            converged = true;
            break;
        }
    }

    Ok(MinimizeResult { x, value: fx, n_evals, iterations, converged })
}
