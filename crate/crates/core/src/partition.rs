//! Row/column index partitions and the weighted block sampler.
//!
//! Blocks hold 0-based indices. A block `k` is drawn with probability
//! `‖A_block‖²_F / ‖A‖²_F`; zero-weight blocks stay in the cover but are never
//! drawn.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrix::{Axis, Matrix};

/// Deterministic random stream. Trials of one experiment share a seed and
/// use the trial number as the ChaCha stream id, so substreams never overlap.
#[derive(Clone, Debug)]
pub struct RngStream {
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self::substream(seed, 0)
    }

    pub fn substream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        RngStream { rng }
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn gaussian(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn gaussian_vec(&mut self, len: usize) -> Vec<f64> {
        (0..len).map(|_| self.gaussian()).collect()
    }

    /// Uniform integer in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }
}

/// An ordered disjoint cover of `0..universe` with optional sampling weights.
#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    universe: usize,
    blocks: Vec<Vec<usize>>,
    norms_sq: Option<Vec<f64>>,
    /// Prefix sums over the blocks in `support`.
    cumulative: Vec<f64>,
    /// Block ids with positive weight, in block order.
    support: Vec<usize>,
}

impl Partition {
    /// Contiguous blocks of size `tau`; the last block takes the remainder.
    pub fn contiguous(universe: usize, tau: usize) -> Result<Self> {
        if tau == 0 || tau > universe {
            return Err(Error::usage(format!(
                "block size must satisfy 1 <= tau <= {universe}, got {tau}"
            )));
        }
        let s = universe.div_ceil(tau);
        let blocks = (0..s).map(|i| (i * tau..((i + 1) * tau).min(universe)).collect()).collect();
        Self::from_blocks(universe, blocks)
    }

    /// Arbitrary cover; rejects overlaps, gaps, empty blocks and out-of-range indices.
    pub fn from_blocks(universe: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        if universe == 0 {
            return Err(Error::usage("partition universe must be nonempty"));
        }
        let mut seen = vec![false; universe];
        for (k, b) in blocks.iter().enumerate() {
            if b.is_empty() {
                return Err(Error::usage(format!("block {k} is empty")));
            }
            for &i in b {
                if i >= universe {
                    return Err(Error::usage(format!("index {i} outside 0..{universe}")));
                }
                if seen[i] {
                    return Err(Error::usage(format!("index {i} appears in more than one block")));
                }
                seen[i] = true;
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::usage(format!("index {i} is not covered")));
        }
        Ok(Partition { universe, blocks, norms_sq: None, cumulative: Vec::new(), support: Vec::new() })
    }

    /// Attaches `‖A_block‖²_F` weights for the given axis and builds the sampler.
    pub fn attach_norms(mut self, a: &Matrix, axis: Axis) -> Result<Self> {
        let (dim, norms) = match axis {
            Axis::Rows => (a.rows(), a.row_norms_sq()),
            Axis::Cols => (a.cols(), a.col_norms_sq()),
        };
        if dim != self.universe {
            return Err(Error::usage(format!(
                "partition covers {} indices but the matrix has {dim} {axis:?}",
                self.universe
            )));
        }
        let weights: Vec<f64> = self.blocks.iter().map(|b| b.iter().fold(0.0, |s, &i| s + norms[i])).collect();
        self.set_weights(weights);
        Ok(self)
    }

    fn set_weights(&mut self, weights: Vec<f64>) {
        let mut total = 0.0;
        self.cumulative.clear();
        self.support.clear();
        for (k, &w) in weights.iter().enumerate() {
            if w > 0.0 {
                total += w;
                self.cumulative.push(total);
                self.support.push(k);
            }
        }
        self.norms_sq = Some(weights);
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn block(&self, k: usize) -> &[usize] {
        &self.blocks[k]
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Per-block squared Frobenius norms, once attached.
    pub fn norms_sq(&self) -> Option<&[f64]> {
        self.norms_sq.as_deref()
    }

    pub fn total_weight(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    /// Sampling probability of block `k` (0 for zero-weight blocks).
    pub fn probability(&self, k: usize) -> f64 {
        match &self.norms_sq {
            Some(w) if self.total_weight() > 0.0 => w[k] / self.total_weight(),
            _ => 0.0,
        }
    }

    /// Prefix sums over the positive-weight blocks.
    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    /// Draws a block id: uniform `u` in `[0, total)` then binary search.
    pub fn sample_block(&self, rng: &mut RngStream) -> Result<usize> {
        let total = self.total_weight();
        if self.norms_sq.is_none() {
            return Err(Error::usage("partition has no weights attached"));
        }
        if total <= 0.0 {
            return Err(Error::data("all block weights are zero (zero matrix)"));
        }
        Ok(self.draw(rng.uniform() * total))
    }

    /// Sampler core once the weights are known to be valid.
    pub(crate) fn draw(&self, u: f64) -> usize {
        let pos = self.cumulative.partition_point(|&c| c <= u);
        self.support[pos.min(self.support.len() - 1)]
    }
}
