//! Composed-loss training with Adam.
//!
//! A sample starts from the normalized optimum at depth `s` and is compared
//! with the optima at depths `s + 1 ..= s + T` after each of `T` chained
//! network steps. Gradients flow through the whole chain. Every sample in a
//! batch starts at the same depth, so each chained step runs as one batched
//! pass.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::conv::{ConvGrad, FeatureMap};
use super::model::PpnModel;
use super::tensor::{normalize, ParamTensor};
use crate::error::{Error, Result};
use crate::qaoa::ParameterSet;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs_phase1: usize,
    pub epochs_phase2: usize,
    pub lr_phase1: f64,
    pub lr_phase2: f64,
    pub batch_phase1: usize,
    pub batch_phase2: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
    /// Depth of the input parameters.
    pub start_depth: usize,
    /// Number of chained steps per sample.
    pub horizon: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs_phase1: 3000,
            epochs_phase2: 1000,
            lr_phase1: 1e-5,
            lr_phase2: 1e-6,
            batch_phase1: 11,
            batch_phase2: 6,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            seed: 0,
            start_depth: 1,
            horizon: 4,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.into()));
        if self.batch_phase1 == 0 || self.batch_phase2 == 0 {
            return bad("batch sizes must be positive");
        }
        if !(self.lr_phase1 >= 0.0 && self.lr_phase2 >= 0.0) || !self.lr_phase1.is_finite() || !self.lr_phase2.is_finite() {
            return bad("learning rates must be finite and non-negative");
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) || self.adam_eps <= 0.0 {
            return bad("invalid Adam constants");
        }
        if self.start_depth == 0 || self.horizon == 0 {
            return bad("start depth and horizon must be at least 1");
        }
        Ok(())
    }
}

/// Normalized input at depth `s` and targets at depths `s + 1 ..= s + T`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    pub input: ParamTensor,
    pub targets: Vec<ParamTensor>,
}

impl TrainingSample {
    /// `by_depth[d - 1]` holds the depth-`d` parameters.
    pub fn from_labels(graph_id: usize, by_depth: &[ParameterSet], start: usize, horizon: usize) -> Result<Self> {
        let get = |d: usize| -> Result<ParamTensor> {
            let p = by_depth.get(d - 1).ok_or(Error::MissingLabel { graph_id, depth: d })?;
            if p.depth() != d {
                return Err(Error::MissingLabel { graph_id, depth: d });
            }
            normalize(p)
        };
        Ok(Self { input: get(start)?, targets: (start + 1..=start + horizon).map(get).collect::<Result<_>>()? })
    }

    pub fn horizon(&self) -> usize {
        self.targets.len()
    }
}

fn check_batch(batch: &[&TrainingSample]) -> Result<(usize, usize)> {
    let first = batch.first().ok_or_else(|| Error::InvalidArgument("empty batch".into()))?;
    let (w, t) = (first.input.width(), first.horizon());
    if t == 0 {
        return Err(Error::InvalidArgument("sample without targets".into()));
    }
    for s in batch {
        if s.input.width() != w || s.horizon() != t {
            return Err(Error::InvalidArgument("batch mixes start depths or horizons".into()));
        }
        for (k, target) in s.targets.iter().enumerate() {
            if target.width() != w + k + 1 {
                return Err(Error::SizeMismatch { expected: w + k + 1, actual: target.width() });
            }
        }
    }
    Ok((w, t))
}

fn stack(batch: &[&TrainingSample], f: impl Fn(&TrainingSample) -> &ParamTensor) -> FeatureMap {
    let width = f(batch[0]).width();
    let data = batch.iter().flat_map(|s| f(s).data().iter().copied()).collect();
    FeatureMap { channels: 1, batch: batch.len(), height: 2, width, data }
}

/// Mean over samples and steps of the squared distance between the chained
/// unclamped predictions and the labels.
pub fn composed_loss(model: &PpnModel, samples: &[TrainingSample]) -> Result<f64> {
    let refs: Vec<&TrainingSample> = samples.iter().collect();
    let (_, horizon) = check_batch(&refs)?;
    let mut x = stack(&refs, |s| &s.input);
    let mut total = 0.0;
    for t in 0..horizon {
        x = model.step(&x)?;
        let y = stack(&refs, |s| &s.targets[t]);
        total += x.data.iter().zip(&y.data).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
    }
    Ok(total / (refs.len() * horizon) as f64)
}

/// Composed loss of a batch and its gradient with respect to every layer.
pub fn loss_and_gradient(model: &PpnModel, batch: &[&TrainingSample]) -> Result<(f64, Vec<ConvGrad>)> {
    let (_, horizon) = check_batch(batch)?;
    let scale = 1.0 / (batch.len() * horizon) as f64;
    let mut traces = Vec::with_capacity(horizon);
    let mut x = stack(batch, |s| &s.input);
    for _ in 0..horizon {
        let trace = model.step_traced(&x)?;
        x = trace.output.clone();
        traces.push(trace);
    }

    let mut loss = 0.0;
    let mut grads = model.zero_grads();
    let mut carry: Option<FeatureMap> = None;
    for t in (0..horizon).rev() {
        let out = &traces[t].output;
        let y = stack(batch, |s| &s.targets[t]);
        let mut g = carry.take().unwrap_or_else(|| FeatureMap::zeros(1, out.batch, 2, out.width));
        for ((gi, o), yi) in g.data.iter_mut().zip(&out.data).zip(&y.data) {
            let d = o - yi;
            loss += d * d;
            *gi += 2.0 * scale * d;
        }
        carry = Some(model.step_backward(&traces[t], &g, &mut grads)?);
    }
    Ok((loss * scale, grads))
}

struct Adam {
    beta1: f64,
    beta2: f64,
    eps: f64,
    step: i32,
    m: Vec<ConvGrad>,
    v: Vec<ConvGrad>,
}

impl Adam {
    fn new(model: &PpnModel, cfg: &TrainConfig) -> Self {
        Self {
            beta1: cfg.adam_beta1,
            beta2: cfg.adam_beta2,
            eps: cfg.adam_eps,
            step: 0,
            m: model.zero_grads(),
            v: model.zero_grads(),
        }
    }

    fn update(&mut self, model: &mut PpnModel, grads: &[ConvGrad], lr: f64) {
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step);
        let c2 = 1.0 - self.beta2.powi(self.step);
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
        let apply = |w: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
            for (((w, &g), m), v) in w.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                *w -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
            }
        };
        for (((layer, g), m), v) in model.layers_mut().iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            apply(&mut layer.weight, &g.weight, &mut m.weight, &mut v.weight);
            apply(&mut layer.bias, &g.bias, &mut m.bias, &mut v.bias);
        }
    }
}

/// Two-phase Adam training. Returns the mean per-sample loss of every epoch,
/// phase 1 followed by phase 2.
pub fn train(model: &mut PpnModel, samples: &[TrainingSample], cfg: &TrainConfig) -> Result<Vec<f64>> {
    train_with_progress(model, samples, cfg, |_, _, _| {})
}

/// [`train`] with a callback receiving `(phase, epoch, mean loss)` after every epoch.
pub fn train_with_progress(
    model: &mut PpnModel,
    samples: &[TrainingSample],
    cfg: &TrainConfig,
    mut progress: impl FnMut(usize, usize, f64),
) -> Result<Vec<f64>> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    let refs: Vec<&TrainingSample> = samples.iter().collect();
    check_batch(&refs)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = Adam::new(model, cfg);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs_phase1 + cfg.epochs_phase2);
    let phases = [
        (cfg.epochs_phase1, cfg.lr_phase1, cfg.batch_phase1),
        (cfg.epochs_phase2, cfg.lr_phase2, cfg.batch_phase2),
    ];
    for (phase, &(epochs, lr, batch_size)) in phases.iter().enumerate() {
        for epoch in 0..epochs {
            order.shuffle(&mut rng);
            let mut sum = 0.0;
            for chunk in order.chunks(batch_size) {
                let batch: Vec<&TrainingSample> = chunk.iter().map(|&i| &samples[i]).collect();
                let (loss, grads) = loss_and_gradient(model, &batch)?;
                if !loss.is_finite() {
                    return Err(Error::NonFiniteLoss { phase: phase + 1, epoch });
                }
                sum += loss * batch.len() as f64;
                adam.update(model, &grads, lr);
            }
            let mean = sum / samples.len() as f64;
            progress(phase + 1, epoch, mean);
            history.push(mean);
        }
    }
    Ok(history)
}
