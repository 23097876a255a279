//! Unweighted Max-Cut instances.
//!
//! Nodes are numbered `1..=n`. A cut assignment is a bit string `z1 z2 ... zn`
//! whose integer encoding puts `z1` in the most significant position, so node
//! `j` maps to bit `n - j` of the encoding. The same convention fixes the
//! qubit and amplitude ordering used by the simulator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest graph accepted by [`max_cut_brute_force`].
pub const MAX_ENUMERATION_NODES: usize = 24;

/// Undirected graph with unit edge weights.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Graph {
    n_nodes: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Builds a graph from 1-based edges. Edges are normalized to `u < v`
    /// and sorted; self-loops, duplicates and out-of-range endpoints are
    /// rejected, as is an edgeless graph.
    pub fn new(n_nodes: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n_nodes == 0 {
            return Err(Error::InvalidArgument("graph needs at least one node".into()));
        }
        let mut normalized = Vec::new();
        for (a, b) in edges {
            if a == b {
                return Err(Error::InvalidArgument(format!("self-loop on node {a}")));
            }
            let (u, v) = if a < b { (a, b) } else { (b, a) };
            if u < 1 || v > n_nodes {
                return Err(Error::InvalidArgument(format!(
                    "edge ({a}, {b}) outside nodes 1..={n_nodes}"
                )));
            }
            normalized.push((u, v));
        }
        normalized.sort_unstable();
        let before = normalized.len();
        normalized.dedup();
        if normalized.len() != before {
            return Err(Error::InvalidArgument("duplicate edge".into()));
        }
        if normalized.is_empty() {
            return Err(Error::EmptyGraph);
        }
        Ok(Self { n_nodes, edges: normalized })
    }

    /// Complete graph on `n` nodes.
    pub fn complete(n: usize) -> Result<Self> {
        Self::new(n, (1..=n).flat_map(|u| (u + 1..=n).map(move |v| (u, v))))
    }

    /// Cycle `1 - 2 - ... - n - 1`.
    pub fn cycle(n: usize) -> Result<Self> {
        Self::new(n, (1..=n).map(|u| (u, u % n + 1)))
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Edges as sorted 1-based pairs with `u < v`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn to_file(&self) -> GraphFile {
        GraphFile {
            n: self.n_nodes,
            edges: self.edges.iter().map(|&(u, v)| [u, v]).collect(),
        }
    }

    pub fn from_file(file: &GraphFile) -> Result<Self> {
        Self::new(file.n, file.edges.iter().map(|e| (e[0], e[1])))
    }
}

/// On-disk graph: `{ "n": 8, "edges": [[1, 2], ...] }`, 1-based and sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphFile {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
}

/// Train/test tag carried by every dataset entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// One element of a dataset file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub graph_id: usize,
    pub split: Split,
    #[serde(flatten)]
    pub graph: GraphFile,
}

/// Bit string `z1 ... zn` stored through its integer encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CutAssignment {
    n: usize,
    z: u64,
}

impl CutAssignment {
    pub fn from_index(n: usize, z: u64) -> Result<Self> {
        if n == 0 || n > 63 || z >> n != 0 {
            return Err(Error::InvalidArgument(format!("index {z} does not fit {n} bits")));
        }
        Ok(Self { n, z })
    }

    /// Bits in node order, `bits[0]` is `z1`.
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        let mut z = 0u64;
        for &b in bits {
            if b > 1 {
                return Err(Error::InvalidArgument(format!("bit value {b}")));
            }
            z = (z << 1) | u64::from(b);
        }
        Self::from_index(bits.len(), z)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn index(&self) -> u64 {
        self.z
    }

    /// Bit of 1-based node `j`.
    pub fn bit(&self, j: usize) -> u8 {
        ((self.z >> (self.n - j)) & 1) as u8
    }

    pub fn bits(&self) -> Vec<u8> {
        (1..=self.n).map(|j| self.bit(j)).collect()
    }

    pub fn complement(&self) -> Self {
        Self { n: self.n, z: !self.z & ((1u64 << self.n) - 1) }
    }
}

/// Samples G(n, p), visiting pairs in lexicographic order. Edgeless draws are
/// discarded and the stream continues until a graph with an edge appears.
pub fn erdos_renyi(n_nodes: usize, edge_prob: f64, seed: u64) -> Result<Graph> {
    if n_nodes < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 nodes, got {n_nodes}")));
    }
    if !(edge_prob > 0.0 && edge_prob <= 1.0) {
        return Err(Error::InvalidArgument(format!("edge probability {edge_prob} not in (0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let mut edges = Vec::new();
        for u in 1..=n_nodes {
            for v in u + 1..=n_nodes {
                if rng.gen::<f64>() < edge_prob {
                    edges.push((u, v));
                }
            }
        }
        if !edges.is_empty() {
            return Graph::new(n_nodes, edges);
        }
    }
}

fn cut_of_index(g: &Graph, z: u64) -> usize {
    let n = g.n_nodes;
    g.edges
        .iter()
        .filter(|&&(u, v)| ((z >> (n - u)) ^ (z >> (n - v))) & 1 == 1)
        .count()
}

/// Number of edges crossing the cut.
pub fn cut_value(g: &Graph, z: &CutAssignment) -> Result<f64> {
    if z.len() != g.n_nodes {
        return Err(Error::SizeMismatch { expected: g.n_nodes, actual: z.len() });
    }
    Ok(cut_of_index(g, z.index()) as f64)
}

/// `C(z)` for every basis index `z` in `0..2^n`.
pub fn cut_table(g: &Graph) -> Result<Vec<f64>> {
    if g.n_nodes > MAX_ENUMERATION_NODES {
        return Err(Error::GraphTooLarge(g.n_nodes));
    }
    Ok((0..1u64 << g.n_nodes).map(|z| cut_of_index(g, z) as f64).collect())
}

/// Exhaustive Max-Cut. Ties go to the smallest integer encoding.
pub fn max_cut_brute_force(g: &Graph) -> Result<(f64, CutAssignment)> {
    if g.n_nodes > MAX_ENUMERATION_NODES {
        return Err(Error::GraphTooLarge(g.n_nodes));
    }
    let mut best = (0usize, 0u64);
    for z in 0..1u64 << g.n_nodes {
        let c = cut_of_index(g, z);
        if c > best.0 {
            best = (c, z);
        }
    }
    Ok((best.0 as f64, CutAssignment::from_index(g.n_nodes, best.1)?))
}
