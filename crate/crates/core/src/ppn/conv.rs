//! Stride-1 zero-padded 2-D convolution over a batch, lowered to a matrix
//! product.
//!
//! Feature maps are stored channel-major with the batch inside each channel
//! (`[c][b][y][x]`), so the im2col matrix of a whole batch has one column per
//! output position of every sample and the layer output comes out of a
//! single GEMM already in the same layout.

use crate::error::{Error, Result};

/// A batch of `channels x height x width` maps.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub channels: usize,
    pub batch: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl FeatureMap {
    pub fn zeros(channels: usize, batch: usize, height: usize, width: usize) -> Self {
        Self { channels, batch, height, width, data: vec![0.0; channels * batch * height * width] }
    }

    /// Single-sample map from `[c][y][x]` data.
    pub fn single(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != channels * height * width {
            return Err(Error::SizeMismatch { expected: channels * height * width, actual: data.len() });
        }
        Ok(Self { channels, batch: 1, height, width, data })
    }

    pub fn plane(&self) -> usize {
        self.height * self.width
    }

    pub fn at(&self, c: usize, b: usize, y: usize, x: usize) -> f64 {
        self.data[((c * self.batch + b) * self.height + y) * self.width + x]
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        (self.channels, self.batch, self.height, self.width)
            == (other.channels, other.batch, other.height, other.width)
    }
}

/// `filters x in_channels x kh x kw` kernel with one bias per filter.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer {
    pub filters: usize,
    pub in_channels: usize,
    pub kh: usize,
    pub kw: usize,
    pub padding: usize,
    /// Row-major `[filter][channel][ky][kx]`.
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Gradient buffers shaped like a [`ConvLayer`].
#[derive(Debug, Clone, PartialEq)]
pub struct ConvGrad {
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ConvLayer {
    pub fn zeros(filters: usize, in_channels: usize, kh: usize, kw: usize, padding: usize) -> Self {
        Self {
            filters,
            in_channels,
            kh,
            kw,
            padding,
            weight: vec![0.0; filters * in_channels * kh * kw],
            bias: vec![0.0; filters],
        }
    }

    pub fn fan_in(&self) -> usize {
        self.in_channels * self.kh * self.kw
    }

    pub fn zero_grad(&self) -> ConvGrad {
        ConvGrad { weight: vec![0.0; self.weight.len()], bias: vec![0.0; self.bias.len()] }
    }

    /// `out = in + 2 padding - kernel + 1` per axis.
    pub fn output_dims(&self, height: usize, width: usize) -> Result<(usize, usize)> {
        let h = (height + 2 * self.padding + 1).checked_sub(self.kh).filter(|&v| v >= 1);
        let w = (width + 2 * self.padding + 1).checked_sub(self.kw).filter(|&v| v >= 1);
        match (h, w) {
            (Some(h), Some(w)) => Ok((h, w)),
            _ => Err(Error::InvalidArgument(format!(
                "{}x{} kernel with padding {} does not fit a {height}x{width} input",
                self.kh, self.kw, self.padding
            ))),
        }
    }

    fn check_input(&self, x: &FeatureMap) -> Result<(usize, usize)> {
        if x.channels != self.in_channels {
            return Err(Error::SizeMismatch { expected: self.in_channels, actual: x.channels });
        }
        self.output_dims(x.height, x.width)
    }

    /// `[channel][ky][kx]` rows by `[batch][y][x]` output-position columns.
    fn im2col(&self, x: &FeatureMap, oh: usize, ow: usize) -> Vec<f64> {
        let cols = x.batch * oh * ow;
        let mut out = vec![0.0; self.fan_in() * cols];
        let pad = self.padding as isize;
        for c in 0..self.in_channels {
            for ky in 0..self.kh {
                for kx in 0..self.kw {
                    let row = &mut out[((c * self.kh + ky) * self.kw + kx) * cols..][..cols];
                    for b in 0..x.batch {
                        let src = &x.data[(c * x.batch + b) * x.plane()..][..x.plane()];
                        for y in 0..oh {
                            let sy = y as isize + ky as isize - pad;
                            if sy < 0 || sy >= x.height as isize {
                                continue;
                            }
                            let src_row = &src[sy as usize * x.width..][..x.width];
                            let dst = &mut row[(b * oh + y) * ow..][..ow];
                            for (xo, d) in dst.iter_mut().enumerate() {
                                let sx = xo as isize + kx as isize - pad;
                                if sx >= 0 && sx < x.width as isize {
                                    *d = src_row[sx as usize];
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    fn col2im(&self, cols_data: &[f64], into: &mut FeatureMap, oh: usize, ow: usize) {
        let cols = into.batch * oh * ow;
        let pad = self.padding as isize;
        let (h, w, plane, batch) = (into.height, into.width, into.plane(), into.batch);
        for c in 0..self.in_channels {
            for ky in 0..self.kh {
                for kx in 0..self.kw {
                    let row = &cols_data[((c * self.kh + ky) * self.kw + kx) * cols..][..cols];
                    for b in 0..batch {
                        let dst = &mut into.data[(c * batch + b) * plane..][..plane];
                        for y in 0..oh {
                            let sy = y as isize + ky as isize - pad;
                            if sy < 0 || sy >= h as isize {
                                continue;
                            }
                            let src = &row[(b * oh + y) * ow..][..ow];
                            for (xo, v) in src.iter().enumerate() {
                                let sx = xo as isize + kx as isize - pad;
                                if sx >= 0 && sx < w as isize {
                                    dst[sy as usize * w + sx as usize] += v;
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    pub fn forward(&self, x: &FeatureMap) -> Result<FeatureMap> {
        let (oh, ow) = self.check_input(x)?;
        let n = x.batch * oh * ow;
        let k = self.fan_in();
        let col = self.im2col(x, oh, ow);
        let mut out = FeatureMap::zeros(self.filters, x.batch, oh, ow);
        for (m, chunk) in out.data.chunks_exact_mut(n).enumerate() {
            chunk.fill(self.bias[m]);
        }
        // SAFETY: every buffer length matches the dimensions and strides given.
        unsafe {
            matrixmultiply::dgemm(
                self.filters, k, n, 1.0,
                self.weight.as_ptr(), k as isize, 1,
                col.as_ptr(), n as isize, 1,
                1.0,
                out.data.as_mut_ptr(), n as isize, 1,
            );
        }
        Ok(out)
    }

    /// Accumulates parameter gradients into `grad` and, when asked, returns
    /// the gradient with respect to the input.
    pub fn backward(
        &self,
        x: &FeatureMap,
        grad_out: &FeatureMap,
        grad: &mut ConvGrad,
        want_input_grad: bool,
    ) -> Result<Option<FeatureMap>> {
        let (oh, ow) = self.check_input(x)?;
        if (grad_out.channels, grad_out.batch, grad_out.height, grad_out.width) != (self.filters, x.batch, oh, ow) {
            return Err(Error::InvalidArgument("output gradient shape does not match the layer".into()));
        }
        let n = x.batch * oh * ow;
        let k = self.fan_in();
        let col = self.im2col(x, oh, ow);
        for (m, chunk) in grad_out.data.chunks_exact(n).enumerate() {
            grad.bias[m] += chunk.iter().sum::<f64>();
        }
        // SAFETY: as in `forward`; `col` is read transposed through its strides.
        unsafe {
            matrixmultiply::dgemm(
                self.filters, n, k, 1.0,
                grad_out.data.as_ptr(), n as isize, 1,
                col.as_ptr(), 1, n as isize,
                1.0,
                grad.weight.as_mut_ptr(), k as isize, 1,
            );
        }
        if !want_input_grad {
            return Ok(None);
        }
        let mut dcol = vec![0.0; k * n];
        // SAFETY: the weight matrix is read transposed through its strides.
        unsafe {
            matrixmultiply::dgemm(
                k, self.filters, n, 1.0,
                self.weight.as_ptr(), 1, k as isize,
                grad_out.data.as_ptr(), n as isize, 1,
                0.0,
                dcol.as_mut_ptr(), n as isize, 1,
            );
        }
        let mut gx = FeatureMap::zeros(x.channels, x.batch, x.height, x.width);
        self.col2im(&dcol, &mut gx, oh, ow);
        Ok(Some(gx))
    }
}

/// Single-sample convolution of a `[c][y][x]` input.
pub fn conv2d(input: &FeatureMap, layer: &ConvLayer) -> Result<FeatureMap> {
    layer.forward(input)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_layer_gives_zero_output() {
        let layer = ConvLayer::zeros(3, 2, 2, 2, 1);
        let x = FeatureMap::single(2, 2, 3, (0..12).map(f64::from).collect()).unwrap();
        let y = conv2d(&x, &layer).unwrap();
        assert_eq!((y.channels, y.height, y.width), (3, 3, 4));
        assert!(y.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn unit_kernel_is_identity() {
        let mut layer = ConvLayer::zeros(1, 1, 1, 1, 0);
        layer.weight[0] = 1.0;
        let x = FeatureMap::single(1, 2, 5, vec![0.3, -1.0, 2.5, 0.0, 7.0, 1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(conv2d(&x, &layer).unwrap(), x);
    }

    #[test]
    fn shape_errors() {
        let layer = ConvLayer::zeros(1, 2, 3, 3, 0);
        let x = FeatureMap::single(1, 4, 4, vec![0.0; 16]).unwrap();
        assert!(conv2d(&x, &layer).is_err());
        let x = FeatureMap::single(2, 2, 2, vec![0.0; 8]).unwrap();
        assert!(conv2d(&x, &layer).is_err());
    }

    #[test]
    fn batch_matches_separate_samples() {
        let mut layer = ConvLayer::zeros(2, 2, 2, 2, 1);
        for (i, w) in layer.weight.iter_mut().enumerate() {
            *w = (i as f64 * 0.37).sin();
        }
        layer.bias = vec![0.1, -0.2];
        let a: Vec<f64> = (0..8).map(|i| (i as f64).cos()).collect();
        let b: Vec<f64> = (0..8).map(|i| (i as f64 * 1.7).sin()).collect();
        let ya = conv2d(&FeatureMap::single(2, 2, 2, a.clone()).unwrap(), &layer).unwrap();
        let yb = conv2d(&FeatureMap::single(2, 2, 2, b.clone()).unwrap(), &layer).unwrap();
        // interleave into [c][b][y][x]
        let mut data = Vec::new();
        for c in 0..2 {
            data.extend_from_slice(&a[c * 4..c * 4 + 4]);
            data.extend_from_slice(&b[c * 4..c * 4 + 4]);
        }
        let both = layer.forward(&FeatureMap { channels: 2, batch: 2, height: 2, width: 2, data }).unwrap();
        for c in 0..2 {
            for y in 0..3 {
                for x in 0..3 {
                    assert!((both.at(c, 0, y, x) - ya.at(c, 0, y, x)).abs() < 1e-14);
                    assert!((both.at(c, 1, y, x) - yb.at(c, 0, y, x)).abs() < 1e-14);
                }
            }
        }
    }
}
