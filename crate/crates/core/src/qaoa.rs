//! Exact statevector simulation of the Max-Cut QAOA circuit.
//!
//! Amplitude index `z` uses the bit order of [`crate::graph`]: node 1 is the
//! most significant bit. Each layer `j` applies the diagonal cost phase
//! `exp(-i gamma_j C(z))` followed by the mixer `exp(-i beta_j X)` on every
//! qubit, starting from the uniform superposition.

use std::cell::Cell;
use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{cut_table, max_cut_brute_force, Graph};

/// Upper bound (exclusive) of every gamma.
pub const GAMMA_MAX: f64 = PI;
/// Upper bound (exclusive) of every beta.
pub const BETA_MAX: f64 = FRAC_PI_2;

/// Depth-`p` angles. Layer `j` (0-based here) uses `gammas[j]` and `betas[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSet {
    gammas: Vec<f64>,
    betas: Vec<f64>,
}

impl ParameterSet {
    /// Checked constructor: every gamma in `[0, pi)`, every beta in `[0, pi/2)`.
    pub fn new(gammas: Vec<f64>, betas: Vec<f64>) -> Result<Self> {
        let params = Self::raw(gammas, betas)?;
        params.check_box()?;
        Ok(params)
    }

    /// Only checks that both vectors have the same non-zero length. Used where
    /// angles outside the box are meaningful, e.g. periodicity checks.
    pub fn raw(gammas: Vec<f64>, betas: Vec<f64>) -> Result<Self> {
        if gammas.is_empty() {
            return Err(Error::InvalidArgument("depth must be at least 1".into()));
        }
        if gammas.len() != betas.len() {
            return Err(Error::SizeMismatch { expected: gammas.len(), actual: betas.len() });
        }
        Ok(Self { gammas, betas })
    }

    /// Reduces gammas modulo `2 pi` and betas modulo `pi / 2` (both leave the
    /// Max-Cut expectation unchanged), then applies the box check.
    pub fn canonicalized(gammas: Vec<f64>, betas: Vec<f64>) -> Result<Self> {
        let g = gammas.into_iter().map(|x| x.rem_euclid(2.0 * PI)).collect();
        let b = betas.into_iter().map(|x| x.rem_euclid(FRAC_PI_2)).collect();
        Self::new(g, b)
    }

    /// Flat layout `[gamma_1..gamma_p, beta_1..beta_p]` used by the optimizer.
    pub fn from_flat(x: &[f64]) -> Result<Self> {
        if x.len() % 2 != 0 {
            return Err(Error::InvalidArgument(format!("odd parameter vector length {}", x.len())));
        }
        let p = x.len() / 2;
        Self::raw(x[..p].to_vec(), x[p..].to_vec())
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut x = self.gammas.clone();
        x.extend_from_slice(&self.betas);
        x
    }

    pub fn depth(&self) -> usize {
        self.gammas.len()
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn in_box(&self) -> bool {
        self.check_box().is_ok()
    }

    fn check_box(&self) -> Result<()> {
        for (j, &g) in self.gammas.iter().enumerate() {
            if !(0.0..GAMMA_MAX).contains(&g) {
                return Err(Error::OutOfBounds(format!("gamma[{j}] = {g}")));
            }
        }
        for (j, &b) in self.betas.iter().enumerate() {
            if !(0.0..BETA_MAX).contains(&b) {
                return Err(Error::OutOfBounds(format!("beta[{j}] = {b}")));
            }
        }
        Ok(())
    }

    /// Copy with one extra `(gamma, beta)` layer at the end.
    pub fn with_layer(&self, gamma: f64, beta: f64) -> Self {
        let mut out = self.clone();
        out.gammas.push(gamma);
        out.betas.push(beta);
        out
    }

    /// Box bounds matching [`Self::to_flat`].
    pub fn flat_bounds(depth: usize) -> Vec<(f64, f64)> {
        let mut b = vec![(0.0, GAMMA_MAX); depth];
        b.extend(std::iter::repeat((0.0, BETA_MAX)).take(depth));
        b
    }

    pub fn to_file(&self) -> ParameterFile {
        ParameterFile { p: self.depth(), gamma: self.gammas.clone(), beta: self.betas.clone() }
    }

    pub fn from_file(file: &ParameterFile) -> Result<Self> {
        if file.gamma.len() != file.p {
            return Err(Error::SizeMismatch { expected: file.p, actual: file.gamma.len() });
        }
        Self::new(file.gamma.clone(), file.beta.clone())
    }
}

/// Angles drawn uniformly from the parameter box.
pub fn uniform_params<R: Rng + ?Sized>(depth: usize, rng: &mut R) -> ParameterSet {
    let gammas = (0..depth).map(|_| rng.gen_range(0.0..GAMMA_MAX)).collect();
    let betas = (0..depth).map(|_| rng.gen_range(0.0..BETA_MAX)).collect();
    ParameterSet { gammas, betas }
}

/// On-disk parameter set: `{ "p": 2, "gamma": [...], "beta": [...] }`, radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterFile {
    pub p: usize,
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
}

/// Counts expected-value evaluations. Not shared across threads.
#[derive(Debug, Default)]
pub struct EvalCounter {
    count: Cell<u64>,
}

impl EvalCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self) -> u64 {
        self.count.get()
    }

    pub(crate) fn tick(&self) {
        self.count.set(self.count.get() + 1);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl Statevector {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// Uniform superposition `|+>^n`.
pub fn plus_state(n_qubits: usize) -> Result<Statevector> {
    if n_qubits == 0 || n_qubits > 30 {
        return Err(Error::InvalidArgument(format!("unsupported qubit count {n_qubits}")));
    }
    let dim = 1usize << n_qubits;
    let a = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
    Ok(Statevector { n_qubits, amplitudes: vec![a; dim] })
}

fn apply_phases(state: &mut Statevector, cuts: &[f64], max_cut: usize, gamma: f64) {
    // cut values are small integers, so one exponential per distinct value
    let phases: Vec<Complex64> =
        (0..=max_cut).map(|k| Complex64::from_polar(1.0, -gamma * k as f64)).collect();
    for (a, &c) in state.amplitudes.iter_mut().zip(cuts) {
        *a *= phases[c as usize];
    }
}

fn apply_mixer(state: &mut Statevector, beta: f64) {
    let (s, c) = beta.sin_cos();
    let mis = Complex64::new(0.0, -s);
    let n = state.n_qubits;
    let amps = &mut state.amplitudes;
    for q in 0..n {
        let stride = 1usize << q;
        for base in (0..amps.len()).step_by(2 * stride) {
            for i in base..base + stride {
                let a = amps[i];
                let b = amps[i + stride];
                amps[i] = a * c + b * mis;
                amps[i + stride] = a * mis + b * c;
            }
        }
    }
}

/// Multiplies amplitude `z` by `exp(-i gamma C(z))`.
pub fn apply_cost_unitary(s: &Statevector, g: &Graph, gamma: f64) -> Result<Statevector> {
    if s.n_qubits != g.n_nodes() {
        return Err(Error::SizeMismatch { expected: g.n_nodes(), actual: s.n_qubits });
    }
    let cuts = cut_table(g)?;
    let mut out = s.clone();
    apply_phases(&mut out, &cuts, g.n_edges(), gamma);
    Ok(out)
}

/// Applies `exp(-i beta X)` to every qubit.
pub fn apply_mixer_unitary(s: &Statevector, beta: f64) -> Statevector {
    let mut out = s.clone();
    apply_mixer(&mut out, beta);
    out
}

/// A graph with its cut table and optimum precomputed, ready for repeated
/// evaluation.
#[derive(Debug, Clone)]
pub struct MaxCutQaoa {
    graph: Graph,
    cuts: Vec<f64>,
    optimum: f64,
}

impl MaxCutQaoa {
    pub fn new(graph: Graph) -> Result<Self> {
        let cuts = cut_table(&graph)?;
        let (optimum, _) = max_cut_brute_force(&graph)?;
        if optimum <= 0.0 {
            return Err(Error::EmptyGraph);
        }
        Ok(Self { graph, cuts, optimum })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    /// `C(z*)`.
    pub fn optimum(&self) -> f64 {
        self.optimum
    }

    pub fn cuts(&self) -> &[f64] {
        &self.cuts
    }

    pub fn prepare_state(&self, params: &ParameterSet) -> Statevector {
        let mut state = plus_state(self.graph.n_nodes()).expect("graph size checked at construction");
        for (&gamma, &beta) in params.gammas().iter().zip(params.betas()) {
            apply_phases(&mut state, &self.cuts, self.graph.n_edges(), gamma);
            apply_mixer(&mut state, beta);
        }
        state
    }

    /// `sum_z |psi_z|^2 C(z)`; one tick on `counter`.
    pub fn expected_value(&self, params: &ParameterSet, counter: &EvalCounter) -> f64 {
        counter.tick();
        let state = self.prepare_state(params);
        state.amplitudes.iter().zip(&self.cuts).map(|(a, &c)| a.norm_sqr() * c).sum()
    }

    pub fn approximation_ratio(&self, params: &ParameterSet, counter: &EvalCounter) -> f64 {
        self.expected_value(params, counter) / self.optimum
    }
}

pub fn prepare_state(g: &Graph, params: &ParameterSet) -> Result<Statevector> {
    Ok(MaxCutQaoa::new(g.clone())?.prepare_state(params))
}

pub fn expected_value(g: &Graph, params: &ParameterSet, counter: &EvalCounter) -> Result<f64> {
    Ok(MaxCutQaoa::new(g.clone())?.expected_value(params, counter))
}

pub fn approximation_ratio(g: &Graph, params: &ParameterSet, counter: &EvalCounter) -> Result<f64> {
    Ok(MaxCutQaoa::new(g.clone())?.approximation_ratio(params, counter))
}
