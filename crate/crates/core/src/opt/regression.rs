use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qaoa::{ParameterSet, BETA_MAX, GAMMA_MAX};

/// Number of points placed on the regression line.
pub const DEFAULT_LIST_SIZE: usize = 10;

/// Candidate depth-1 starting points on the line `beta = slope * gamma + intercept`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendedList {
    pub slope: f64,
    pub intercept: f64,
    pub points: Vec<(f64, f64)>,
}

impl RecommendedList {
    /// Points on the box diagonal `beta = gamma / 2`, at the midpoints of `k`
    /// equal gamma cells. Used before any regression has been fitted.
    pub fn diagonal(k: usize) -> Self {
        let points = (0..k)
            .map(|i| {
                let g = GAMMA_MAX * (i as f64 + 0.5) / k as f64;
                (g, 0.5 * g)
            })
            .collect();
        Self { slope: 0.5, intercept: 0.0, points }
    }

    pub fn params(&self) -> impl Iterator<Item = ParameterSet> + '_ {
        self.points
            .iter()
            .map(|&(g, b)| ParameterSet::new(vec![g], vec![b]).expect("recommended points lie in the box"))
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample Pearson correlation coefficient.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::SizeMismatch { expected: xs.len(), actual: ys.len() });
    }
    if xs.len() < 2 {
        return Err(Error::InvalidArgument("pearson needs at least two samples".into()));
    }
    let (mx, my) = (mean(xs), mean(ys));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::InvalidArgument("zero variance".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Least-squares line of beta on gamma with `k` evenly spaced points across
/// the observed gamma range. The range is narrowed where needed so every
/// point stays on the line and inside the parameter box.
pub fn fit_depth1_regression(optima: &[(f64, f64)], k: usize) -> Result<RecommendedList> {
    if optima.len() < 2 {
        return Err(Error::InvalidArgument("regression needs at least two points".into()));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("empty recommended list".into()));
    }
    let xs: Vec<f64> = optima.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = optima.iter().map(|p| p.1).collect();
    let (mx, my) = (mean(&xs), mean(&ys));
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("zero gamma variance".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;

    let mut lo = xs.iter().copied().fold(f64::INFINITY, f64::min).max(0.0);
    let mut hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max).min(GAMMA_MAX * (1.0 - 1e-9));
    // gamma interval on which 0 <= beta < pi/2
    if slope != 0.0 {
        let a = -intercept / slope;
        let b = (BETA_MAX * (1.0 - 1e-9) - intercept) / slope;
        lo = lo.max(a.min(b));
        hi = hi.min(a.max(b));
    } else if !(0.0..BETA_MAX).contains(&intercept) {
        return Err(Error::OutOfBounds(format!("constant line beta = {intercept}")));
    }
    if lo > hi {
        return Err(Error::OutOfBounds("regression line leaves the parameter box".into()));
    }

    let points = (0..k)
        .map(|i| {
            let g = if k == 1 { 0.5 * (lo + hi) } else { lo + (hi - lo) * i as f64 / (k - 1) as f64 };
            let b = (slope * g + intercept).clamp(0.0, BETA_MAX * (1.0 - 1e-9));
            (g, b)
        })
        .collect();
    Ok(RecommendedList { slope, intercept, points })
}
