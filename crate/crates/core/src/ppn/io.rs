//! Binary model files.
//!
//! Layout, all little-endian: the magic `PPNM`, a `u32` format version, a
//! `u32` block count `D` and a `u32` layer count; then for every layer a
//! header of five `u32`s `(filters, in_channels, kh, kw, padding)` followed
//! by the row-major `f64` weights and the `f64` biases.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use super::conv::ConvLayer;
use super::model::PpnModel;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"PPNM";
pub const FORMAT_VERSION: u32 = 1;

pub fn write_model<W: Write>(model: &PpnModel, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    for v in [FORMAT_VERSION, model.blocks() as u32, model.layers().len() as u32] {
        w.write_all(&v.to_le_bytes())?;
    }
    for layer in model.layers() {
        for v in [layer.filters, layer.in_channels, layer.kh, layer.kw, layer.padding] {
            w.write_all(&(v as u32).to_le_bytes())?;
        }
        for x in layer.weight.iter().chain(&layer.bias) {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn model_to_bytes(model: &PpnModel) -> Vec<u8> {
    let mut buf = Vec::with_capacity(8 * model.n_parameters() + 64);
    write_model(model, &mut buf).expect("writing to a Vec cannot fail");
    buf
}

struct Cursor<'a> {
    bytes: &'a [u8],
}

impl Cursor<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        if self.bytes.len() < N {
            return Err(Error::CorruptModel("unexpected end of file".into()));
        }
        let (head, rest) = self.bytes.split_at(N);
        self.bytes = rest;
        Ok(head.try_into().expect("split at N"))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take()?))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| Ok(f64::from_le_bytes(self.take()?))).collect()
    }
}

pub fn model_from_bytes(bytes: &[u8]) -> Result<PpnModel> {
    let mut cur = Cursor { bytes };
    if &cur.take::<4>()? != MAGIC {
        return Err(Error::CorruptModel("bad magic".into()));
    }
    let version = cur.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::VersionMismatch(version));
    }
    let blocks = cur.u32()? as usize;
    let n_layers = cur.u32()? as usize;
    if n_layers != 2 * blocks + 3 {
        return Err(Error::CorruptModel(format!("{n_layers} layers for {blocks} blocks")));
    }
    let mut layers = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        let dims: Vec<usize> = (0..5).map(|_| cur.u32().map(|v| v as usize)).collect::<Result<_>>()?;
        let (filters, in_channels, kh, kw, padding) = (dims[0], dims[1], dims[2], dims[3], dims[4]);
        let n_weights = filters
            .checked_mul(in_channels)
            .and_then(|v| v.checked_mul(kh))
            .and_then(|v| v.checked_mul(kw))
            .filter(|&v| v <= bytes.len() / 8)
            .ok_or_else(|| Error::CorruptModel("layer size exceeds file".into()))?;
        let weight = cur.f64s(n_weights)?;
        let bias = cur.f64s(filters)?;
        layers.push(ConvLayer { filters, in_channels, kh, kw, padding, weight, bias });
    }
    if !cur.bytes.is_empty() {
        return Err(Error::CorruptModel(format!("{} trailing bytes", cur.bytes.len())));
    }
    PpnModel::from_layers(layers)
}

pub fn save_model(model: &PpnModel, path: impl AsRef<Path>) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&model_to_bytes(model))?;
    f.flush()?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<PpnModel> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    model_from_bytes(&bytes)
}
