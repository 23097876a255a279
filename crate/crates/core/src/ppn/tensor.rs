use std::f64::consts::{FRAC_PI_2, PI};

use super::conv::FeatureMap;
use super::model::CLAMP_MAX;
use crate::error::{Error, Result};
use crate::qaoa::ParameterSet;

/// Normalized `1 x 2 x p` parameters: row 0 holds `gamma / pi`, row 1 holds
/// `beta / (pi / 2)`, column `j` is layer `j + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamTensor {
    width: usize,
    data: Vec<f64>,
}

impl ParamTensor {
    pub fn new(width: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 {
            return Err(Error::InvalidArgument("tensor width must be at least 1".into()));
        }
        if data.len() != 2 * width {
            return Err(Error::SizeMismatch { expected: 2 * width, actual: data.len() });
        }
        Ok(Self { width, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Row-major: the first `width` entries are gammas.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn gamma_row(&self) -> &[f64] {
        &self.data[..self.width]
    }

    pub fn beta_row(&self) -> &[f64] {
        &self.data[self.width..]
    }

    pub(crate) fn clamp_unit(&mut self) {
        for v in &mut self.data {
            *v = v.clamp(0.0, CLAMP_MAX);
        }
    }

    pub(crate) fn to_map(&self) -> FeatureMap {
        FeatureMap { channels: 1, batch: 1, height: 2, width: self.width, data: self.data.clone() }
    }

    pub(crate) fn from_map(map: &FeatureMap) -> Result<Self> {
        if map.channels != 1 || map.batch != 1 || map.height != 2 {
            return Err(Error::InvalidArgument("not a single 1 x 2 x p map".into()));
        }
        Self::new(map.width, map.data.clone())
    }
}

/// Scales gammas by `1 / pi` and betas by `2 / pi`.
pub fn normalize(params: &ParameterSet) -> Result<ParamTensor> {
    if !params.in_box() {
        return Err(Error::OutOfBounds("cannot normalize parameters outside the box".into()));
    }
    let mut data: Vec<f64> = params.gammas().iter().map(|g| g / PI).collect();
    data.extend(params.betas().iter().map(|b| b / FRAC_PI_2));
    ParamTensor::new(params.depth(), data)
}

/// Inverse of [`normalize`]; entries must lie in `[0, 1)`.
pub fn denormalize(x: &ParamTensor) -> Result<ParameterSet> {
    if let Some(v) = x.data.iter().find(|v| !(0.0..1.0).contains(*v)) {
        return Err(Error::OutOfBounds(format!("normalized entry {v} outside [0, 1)")));
    }
    ParameterSet::new(
        x.gamma_row().iter().map(|g| g * PI).collect(),
        x.beta_row().iter().map(|b| b * FRAC_PI_2).collect(),
    )
}

/// Sum of squared entry differences between two normalized tensors.
pub fn prediction_error(pred: &ParamTensor, truth: &ParamTensor) -> Result<f64> {
    if pred.width != truth.width {
        return Err(Error::SizeMismatch { expected: truth.width, actual: pred.width });
    }
    Ok(pred.data.iter().zip(&truth.data).map(|(a, b)| (a - b).powi(2)).sum())
}
