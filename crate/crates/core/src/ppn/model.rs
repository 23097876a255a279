use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::conv::{ConvGrad, ConvLayer, FeatureMap};
use super::tensor::ParamTensor;
use crate::error::{Error, Result};

/// Channels produced by the first up-sampling convolution.
pub const UP1_FILTERS: usize = 16;
/// Feature channels of the second up-sampling convolution and every residual block.
pub const FEATURES: usize = 64;
pub const DEFAULT_BLOCKS: usize = 4;

/// Largest value an inference output may take after clamping.
pub const CLAMP_MAX: f64 = 1.0 - 1e-6;

/// The parameter-to-parameter network.
///
/// Layers are stored flat in a fixed order: `up1`, `up2`, then the two
/// convolutions of each residual block, then `down`.
#[derive(Debug, Clone, PartialEq)]
pub struct PpnModel {
    layers: Vec<ConvLayer>,
}

/// Layer shapes `(filters, in_channels, kh, kw, padding)` for `blocks` residual blocks.
pub fn architecture(blocks: usize) -> Vec<(usize, usize, usize, usize, usize)> {
    let mut shapes = vec![(UP1_FILTERS, 1, 2, 2, 1), (FEATURES, UP1_FILTERS, 2, 2, 1)];
    shapes.extend(std::iter::repeat((FEATURES, FEATURES, 3, 3, 1)).take(2 * blocks));
    shapes.push((1, FEATURES, 3, 2, 0));
    shapes
}

impl PpnModel {
    /// All weights and biases zero.
    pub fn zeros(blocks: usize) -> Self {
        let layers = architecture(blocks)
            .into_iter()
            .map(|(m, c, kh, kw, pad)| ConvLayer::zeros(m, c, kh, kw, pad))
            .collect();
        Self { layers }
    }

    /// Weights and biases uniform on `(-b, b)` with `b = 1 / sqrt(fan_in)`.
    pub fn random(blocks: usize, seed: u64) -> Self {
        let mut model = Self::zeros(blocks);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for layer in &mut model.layers {
            let b = 1.0 / (layer.fan_in() as f64).sqrt();
            for w in layer.weight.iter_mut().chain(layer.bias.iter_mut()) {
                *w = rng.gen_range(-b..b);
            }
        }
        model
    }

    pub(crate) fn from_layers(layers: Vec<ConvLayer>) -> Result<Self> {
        if layers.len() < 3 || (layers.len() - 3) % 2 != 0 {
            return Err(Error::CorruptModel(format!("{} layers do not form a network", layers.len())));
        }
        let blocks = (layers.len() - 3) / 2;
        for (i, (layer, shape)) in layers.iter().zip(architecture(blocks)).enumerate() {
            let (m, c, kh, kw, pad) = shape;
            if (layer.filters, layer.in_channels, layer.kh, layer.kw, layer.padding) != (m, c, kh, kw, pad)
                || layer.weight.len() != m * c * kh * kw
                || layer.bias.len() != m
            {
                return Err(Error::CorruptModel(format!("layer {i} has an unexpected shape")));
            }
        }
        Ok(Self { layers })
    }

    /// Residual block count `D`.
    pub fn blocks(&self) -> usize {
        (self.layers.len() - 3) / 2
    }

    pub fn layers(&self) -> &[ConvLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [ConvLayer] {
        &mut self.layers
    }

    pub fn up1(&self) -> &ConvLayer {
        &self.layers[0]
    }

    pub fn up2(&self) -> &ConvLayer {
        &self.layers[1]
    }

    /// The two convolutions of block `i`.
    pub fn block(&self, i: usize) -> (&ConvLayer, &ConvLayer) {
        (&self.layers[2 + 2 * i], &self.layers[3 + 2 * i])
    }

    pub fn down(&self) -> &ConvLayer {
        self.layers.last().expect("model always has layers")
    }

    pub fn n_parameters(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    /// One unclamped step on a batch of `1 x 2 x p` maps.
    pub(crate) fn step(&self, x: &FeatureMap) -> Result<FeatureMap> {
        Ok(self.step_traced(x)?.output)
    }

    pub(crate) fn step_traced(&self, x: &FeatureMap) -> Result<StepTrace> {
        if x.channels != 1 || x.height != 2 || x.width == 0 {
            return Err(Error::InvalidArgument(format!(
                "network input must be 1 x 2 x p, got {} x {} x {}",
                x.channels, x.height, x.width
            )));
        }
        let mut a1 = self.up1().forward(x)?;
        relu(&mut a1);
        let mut a2 = self.up2().forward(&a1)?;
        relu(&mut a2);
        let mut block_inputs = Vec::with_capacity(self.blocks());
        let mut hidden = Vec::with_capacity(self.blocks());
        let mut h = a2.clone();
        for i in 0..self.blocks() {
            let (c1, c2) = self.block(i);
            let mut r = c1.forward(&h)?;
            relu(&mut r);
            let v = c2.forward(&r)?;
            let mut next = h.clone();
            for (a, b) in next.data.iter_mut().zip(&v.data) {
                *a += b;
            }
            block_inputs.push(std::mem::replace(&mut h, next));
            hidden.push(r);
        }
        let output = self.down().forward(&h)?;
        Ok(StepTrace { input: x.clone(), a1, a2, block_inputs, hidden, last: h, output })
    }

    /// Backpropagates one step. `grads` follows the layer order of the model.
    pub(crate) fn step_backward(
        &self,
        trace: &StepTrace,
        grad_out: &FeatureMap,
        grads: &mut [ConvGrad],
    ) -> Result<FeatureMap> {
        let n = self.layers.len();
        let mut gh = self.down().backward(&trace.last, grad_out, &mut grads[n - 1], true)?.expect("requested");
        for i in (0..self.blocks()).rev() {
            let (c1, c2) = self.block(i);
            let (g1, rest) = grads[2 + 2 * i..].split_at_mut(1);
            let mut gr = c2.backward(&trace.hidden[i], &gh, &mut rest[0], true)?.expect("requested");
            relu_backward(&mut gr, &trace.hidden[i]);
            let gin = c1.backward(&trace.block_inputs[i], &gr, &mut g1[0], true)?.expect("requested");
            for (a, b) in gh.data.iter_mut().zip(&gin.data) {
                *a += b;
            }
        }
        relu_backward(&mut gh, &trace.a2);
        let mut ga1 = self.up2().backward(&trace.a1, &gh, &mut grads[1], true)?.expect("requested");
        relu_backward(&mut ga1, &trace.a1);
        let gx = self.up1().backward(&trace.input, &ga1, &mut grads[0], true)?.expect("requested");
        Ok(gx)
    }

    pub fn zero_grads(&self) -> Vec<ConvGrad> {
        self.layers.iter().map(ConvLayer::zero_grad).collect()
    }

    /// Unclamped prediction of width `p + 1`; what the training loss sees.
    pub fn forward_raw(&self, x: &ParamTensor) -> Result<ParamTensor> {
        ParamTensor::from_map(&self.step(&x.to_map())?)
    }

    /// Inference prediction: entries clamped to `[0, 1 - 1e-6]`.
    pub fn forward(&self, x: &ParamTensor) -> Result<ParamTensor> {
        let mut out = self.forward_raw(x)?;
        out.clamp_unit();
        Ok(out)
    }

    /// `t` successive inference steps.
    pub fn compose(&self, x: &ParamTensor, t: usize) -> Result<ParamTensor> {
        if t == 0 {
            return Err(Error::InvalidArgument("composition needs t >= 1".into()));
        }
        let mut cur = self.forward(x)?;
        for _ in 1..t {
            cur = self.forward(&cur)?;
        }
        Ok(cur)
    }

    /// Every step of a `t`-fold inference composition, widths `p+1 ..= p+t`.
    pub fn compose_trajectory(&self, x: &ParamTensor, t: usize) -> Result<Vec<ParamTensor>> {
        let mut out = Vec::with_capacity(t);
        let mut cur = x.clone();
        for _ in 0..t {
            cur = self.forward(&cur)?;
            out.push(cur.clone());
        }
        Ok(out)
    }
}

/// Intermediate activations of one step, kept for the backward pass.
pub(crate) struct StepTrace {
    input: FeatureMap,
    a1: FeatureMap,
    a2: FeatureMap,
    block_inputs: Vec<FeatureMap>,
    /// Post-ReLU activation between the two convolutions of each block.
    hidden: Vec<FeatureMap>,
    last: FeatureMap,
    pub(crate) output: FeatureMap,
}

fn relu(x: &mut FeatureMap) {
    for v in &mut x.data {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// Zeroes gradient entries whose post-activation value is not positive.
fn relu_backward(grad: &mut FeatureMap, activated: &FeatureMap) {
    for (g, &a) in grad.data.iter_mut().zip(&activated.data) {
        if a <= 0.0 {
            *g = 0.0;
        }
    }
}

pub fn ppn_forward(model: &PpnModel, x: &ParamTensor) -> Result<ParamTensor> {
    model.forward(x)
}

pub fn ppn_compose(model: &PpnModel, x: &ParamTensor, t: usize) -> Result<ParamTensor> {
    model.compose(x, t)
}
