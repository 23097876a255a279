//! Max-Cut QAOA simulation and convolutional parameter prediction.
//!
//! The crate is organized bottom-up:
//!
//! - [`graph`]: unweighted graphs, Erdős–Rényi sampling and exhaustive Max-Cut.
//! - [`qaoa`]: exact statevector simulation and the counted expected value.
//! - [`opt`]: bounded quasi-Newton optimization, the depth-1 regression
//!   recommender and depth-progressive label generation.
//! - [`ppn`]: the parameter-to-parameter convolutional network, its training
//!   loop and model files.
//! - [`strategies`]: PPN-driven initialization and depth search, plus the
//!   annealing-schedule and random baselines.
//! - [`bench`]: dataset/label/report file formats and the benchmark pipeline.

pub mod bench;
pub mod error;
pub mod graph;
pub mod opt;
pub mod ppn;
pub mod qaoa;
pub mod strategies;

pub use error::{Error, Result};

/// Mixes a base seed with an index into an independent stream seed (splitmix64).
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
