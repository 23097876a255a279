//! Reference implementations used as test oracles. They share no code paths
//! with the library beyond its public data types.

#![allow(dead_code)]

use num_complex::Complex64;
use qaoa_ppn::graph::Graph;
use qaoa_ppn::ppn::{composed_loss, loss_and_gradient, ConvLayer, ParamTensor, PpnModel, TrainingSample};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use qaoa_ppn::qaoa::ParameterSet;

pub type Matrix = Vec<Vec<Complex64>>;

fn identity(dim: usize) -> Matrix {
    (0..dim)
        .map(|i| (0..dim).map(|j| if i == j { Complex64::new(1.0, 0.0) } else { Complex64::default() }).collect())
        .collect()
}

fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    let mut out = vec![vec![Complex64::default(); n]; n];
    for i in 0..n {
        for k in 0..n {
            for j in 0..n {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (na, nb) = (a.len(), b.len());
    let mut out = vec![vec![Complex64::default(); na * nb]; na * nb];
    for i in 0..na {
        for j in 0..na {
            for k in 0..nb {
                for l in 0..nb {
                    out[i * nb + k][j * nb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

/// Cut value of basis index `z` with node 1 as the most significant bit,
/// computed from the +-1 spin form of the objective.
pub fn spin_cut(g: &Graph, z: usize) -> f64 {
    let n = g.n_nodes();
    let spin = |node: usize| if (z >> (n - node)) & 1 == 1 { -1.0 } else { 1.0 };
    g.edges().iter().map(|&(u, v)| 0.5 * (1.0 - spin(u) * spin(v))).sum()
}

/// `exp(-i gamma H_C)` as a dense diagonal matrix.
pub fn dense_cost(g: &Graph, gamma: f64) -> Matrix {
    let dim = 1 << g.n_nodes();
    let mut m = identity(dim);
    for (z, row) in m.iter_mut().enumerate() {
        let c = spin_cut(g, z);
        row[z] = Complex64::new((gamma * c).cos(), -(gamma * c).sin());
    }
    m
}

/// `exp(-i beta X)` on every qubit as an explicit Kronecker product.
pub fn dense_mixer(n: usize, beta: f64) -> Matrix {
    let (c, s) = (beta.cos(), beta.sin());
    let rx = vec![
        vec![Complex64::new(c, 0.0), Complex64::new(0.0, -s)],
        vec![Complex64::new(0.0, -s), Complex64::new(c, 0.0)],
    ];
    let mut m = rx.clone();
    for _ in 1..n {
        m = kron(&m, &rx);
    }
    m
}

/// Full circuit unitary applied to `|+>^n`.
pub fn dense_state(g: &Graph, params: &ParameterSet) -> Vec<Complex64> {
    let n = g.n_nodes();
    let dim = 1 << n;
    let mut u = identity(dim);
    for (&gamma, &beta) in params.gammas().iter().zip(params.betas()) {
        u = matmul(&dense_mixer(n, beta), &matmul(&dense_cost(g, gamma), &u));
    }
    let amp = 1.0 / (dim as f64).sqrt();
    (0..dim).map(|i| u[i].iter().map(|x| x * amp).sum()).collect()
}

/// Naive cross-correlation of a `[c][y][x]` input.
pub fn naive_conv(input: &[f64], c: usize, h: usize, w: usize, layer: &ConvLayer) -> (Vec<f64>, usize, usize) {
    assert_eq!(c, layer.in_channels);
    let pad = layer.padding as isize;
    let oh = h + 2 * layer.padding + 1 - layer.kh;
    let ow = w + 2 * layer.padding + 1 - layer.kw;
    let mut out = vec![0.0; layer.filters * oh * ow];
    for m in 0..layer.filters {
        for y in 0..oh {
            for x in 0..ow {
                let mut acc = layer.bias[m];
                for ch in 0..c {
                    for ky in 0..layer.kh {
                        for kx in 0..layer.kw {
                            let sy = y as isize + ky as isize - pad;
                            let sx = x as isize + kx as isize - pad;
                            if sy < 0 || sx < 0 || sy >= h as isize || sx >= w as isize {
                                continue;
                            }
                            let wv = layer.weight[((m * c + ch) * layer.kh + ky) * layer.kw + kx];
                            acc += wv * input[(ch * h + sy as usize) * w + sx as usize];
                        }
                    }
                }
                out[(m * oh + y) * ow + x] = acc;
            }
        }
    }
    (out, oh, ow)
}

fn naive_relu(v: &mut [f64]) {
    v.iter_mut().for_each(|x| *x = x.max(0.0));
}

/// Unclamped network step built from the naive convolution.
pub fn naive_forward(model: &PpnModel, input: &[f64], p: usize) -> Vec<f64> {
    let (mut a, h, w) = naive_conv(input, 1, 2, p, model.up1());
    naive_relu(&mut a);
    let (mut a, h, w) = naive_conv(&a, 16, h, w, model.up2());
    naive_relu(&mut a);
    for i in 0..model.blocks() {
        let (c1, c2) = model.block(i);
        let (mut r, _, _) = naive_conv(&a, 64, h, w, c1);
        naive_relu(&mut r);
        let (v, _, _) = naive_conv(&r, 64, h, w, c2);
        for (x, y) in a.iter_mut().zip(&v) {
            *x += y;
        }
    }
    naive_conv(&a, 64, h, w, model.down()).0
}

pub fn random_tensor(rng: &mut ChaCha8Rng, p: usize) -> ParamTensor {
    ParamTensor::new(p, (0..2 * p).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap()
}

fn samples(rng: &mut ChaCha8Rng, n: usize, p: usize, horizon: usize) -> Vec<TrainingSample> {
    (0..n)
        .map(|_| TrainingSample {
            input: random_tensor(rng, p),
            targets: (1..=horizon).map(|t| random_tensor(rng, p + t)).collect(),
        })
        .collect()
}

pub struct GradientReport {
    pub worst: f64,
    pub checked: usize,
    pub kinks: usize,
}

/// Central differences of the composed loss against backpropagation on two
/// random samples per `(p, horizon)` case, `D = 2`. Covers 20 random weights
/// of every layer and up to 16 biases. Steps `h`, `h/4`, `h/16`, `h/64` are
/// tried in turn; a coordinate where no two successive estimates agree has a
/// ReLU kink within `h/64` and is counted instead of compared.
pub fn gradient_check(seed: u64, cases: &[(usize, usize)]) -> GradientReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = GradientReport { worst: 0.0, checked: 0, kinks: 0 };
    for &(p, horizon) in cases {
        let mut model = PpnModel::random(2, rng.gen());
        for l in model.layers_mut() {
            l.bias.iter_mut().for_each(|b| *b = rng.gen_range(-0.05..0.05));
        }
        let data = samples(&mut rng, 2, p, horizon);
        let refs: Vec<&TrainingSample> = data.iter().collect();
        let (_, grads) = loss_and_gradient(&model, &refs).unwrap();
        let h = 1e-5;
        for li in 0..model.layers().len() {
            let n_w = model.layers()[li].weight.len();
            let n_b = model.layers()[li].bias.len();
            let mut picks: Vec<(bool, usize)> = (0..20).map(|_| (true, rng.gen_range(0..n_w))).collect();
            picks.extend((0..n_b.min(16)).map(|i| (false, i)));
            for (is_weight, idx) in picks {
                let analytic = if is_weight { grads[li].weight[idx] } else { grads[li].bias[idx] };
                let probe = |delta: f64| {
                    let mut m = model.clone();
                    let l = &mut m.layers_mut()[li];
                    if is_weight {
                        l.weight[idx] += delta;
                    } else {
                        l.bias[idx] += delta;
                    }
                    composed_loss(&m, &data).unwrap()
                };
                let central = |step: f64| (probe(step) - probe(-step)) / (2.0 * step);
                let estimates = [central(h), central(h / 4.0), central(h / 16.0), central(h / 64.0)];
                report.checked += 1;
                // the first pair of successive steps that agree brackets no kink
                let smooth = estimates.windows(2).find(|w| {
                    (w[0] - w[1]).abs() / w[0].abs().max(w[1].abs()).max(1e-6) <= 1e-6
                });
                let Some(pair) = smooth else {
                    report.kinks += 1;
                    continue;
                };
                let numeric = pair[0];
                let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
                report.worst = report.worst.max(rel);
            }
        }
    }
    report
}
