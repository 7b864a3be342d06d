//! Finite-alphabet probability primitives.
//!
//! Everything downstream is built on two value types: [`Pmf`], a validated
//! probability vector, and [`StochasticKernel`], a validated row-stochastic
//! matrix. Product alphabets are flattened row-major: the pair `(a, b)` over
//! `A x B` maps to index `a * |B| + b`. That convention is fixed here and
//! used by every other module.

use alloc::vec;
use alloc::vec::Vec;

use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::PMF_TOLERANCE;

/// A probability mass function over a finite alphabet `{0, .., n-1}`.
///
/// Invariants (enforced at construction): every entry is non-negative and
/// the entries sum to one within [`PMF_TOLERANCE`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "Vec<f64>", into = "Vec<f64>"))]
pub struct Pmf {
    probs: Vec<f64>,
}

impl Pmf {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidPmf {
                index: 0,
                detail: "empty alphabet",
            });
        }
        let mut sum = 0.0;
        for (i, &p) in probs.iter().enumerate() {
            if p.is_nan() || p < 0.0 {
                return Err(Error::InvalidPmf {
                    index: i,
                    detail: "negative or NaN entry",
                });
            }
            sum += p;
        }
        if libm::fabs(sum - 1.0) > PMF_TOLERANCE {
            return Err(Error::InvalidPmf {
                index: 0,
                detail: "entries do not sum to 1",
            });
        }
        Ok(Pmf { probs })
    }

    /// Uniform distribution over `n` symbols.
    pub fn uniform(n: usize) -> Self {
        Pmf {
            probs: vec![1.0 / n as f64; n],
        }
    }

    /// Point mass on symbol `i`.
    pub fn point_mass(n: usize, i: usize) -> Self {
        let mut probs = vec![0.0; n];
        probs[i] = 1.0;
        Pmf { probs }
    }

    /// Binary pmf `(1 - p, p)` with `p` the probability of symbol 1.
    pub fn bernoulli(p: f64) -> Result<Self> {
        Pmf::new(vec![1.0 - p, p])
    }

    pub fn alphabet_size(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, i: usize) -> f64 {
        self.probs[i]
    }

    /// Support indices (entries strictly above zero).
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, _)| i)
    }

    /// Draws one symbol by inverse-CDF lookup.
    pub fn sample(&self, rng: &mut Rng) -> usize {
        let u = rng.uniform();
        let mut cum = 0.0;
        for (i, &p) in self.probs.iter().enumerate() {
            cum += p;
            if u < cum {
                return i;
            }
        }
        self.probs.len() - 1
    }
}

impl TryFrom<Vec<f64>> for Pmf {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Pmf::new(v)
    }
}

impl From<Pmf> for Vec<f64> {
    fn from(p: Pmf) -> Vec<f64> {
        p.probs
    }
}

/// A row-stochastic matrix `w(y | x)`: `rows` input symbols, `cols` output
/// symbols, each row a valid [`Pmf`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(
    feature = "serde",
    serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")
)]
pub struct StochasticKernel {
    rows: usize,
    cols: usize,
    matrix: Vec<f64>,
}

impl StochasticKernel {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::RejectedInput("kernel with zero rows".into()));
        }
        let cols = rows[0].len();
        let mut matrix = Vec::with_capacity(rows.len() * cols);
        for row in &rows {
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    what: "kernel row width",
                    expected: cols,
                    got: row.len(),
                });
            }
            Pmf::new(row.clone())?;
            matrix.extend_from_slice(row);
        }
        Ok(StochasticKernel {
            rows: rows.len(),
            cols,
            matrix,
        })
    }

    /// Binary symmetric channel with crossover probability `q`.
    pub fn bsc(q: f64) -> Result<Self> {
        StochasticKernel::from_rows(vec![vec![1.0 - q, q], vec![q, 1.0 - q]])
    }

    /// Identity kernel on `n` symbols.
    pub fn identity(n: usize) -> Self {
        let mut matrix = vec![0.0; n * n];
        for i in 0..n {
            matrix[i * n + i] = 1.0;
        }
        StochasticKernel {
            rows: n,
            cols: n,
            matrix,
        }
    }

    /// Kernel whose every row equals `q` (output independent of input).
    pub fn constant(rows: usize, q: &Pmf) -> Self {
        let mut matrix = Vec::with_capacity(rows * q.alphabet_size());
        for _ in 0..rows {
            matrix.extend_from_slice(q.probs());
        }
        StochasticKernel {
            rows,
            cols: q.alphabet_size(),
            matrix,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.matrix[x * self.cols + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.matrix[x * self.cols..(x + 1) * self.cols]
    }

    pub fn row_pmf(&self, x: usize) -> Pmf {
        Pmf {
            probs: self.row(x).to_vec(),
        }
    }

    /// Marginalizes a kernel into `Y1 x Y2` (row-major, `|Y2|` fastest) over
    /// the second coordinate, keeping `|Y1|` outputs.
    pub fn marginalize_second(&self, y2_size: usize) -> Result<Self> {
        if self.cols % y2_size != 0 {
            return Err(Error::DimensionMismatch {
                what: "product alphabet",
                expected: y2_size,
                got: self.cols,
            });
        }
        let y1_size = self.cols / y2_size;
        let mut rows = Vec::with_capacity(self.rows);
        for x in 0..self.rows {
            let mut row = vec![0.0; y1_size];
            for y1 in 0..y1_size {
                for y2 in 0..y2_size {
                    row[y1] += self.get(x, y1 * y2_size + y2);
                }
            }
            rows.push(row);
        }
        StochasticKernel::from_rows(rows)
    }

    /// Marginalizes a kernel into `Y1 x Y2` over the first coordinate.
    pub fn marginalize_first(&self, y2_size: usize) -> Result<Self> {
        if self.cols % y2_size != 0 {
            return Err(Error::DimensionMismatch {
                what: "product alphabet",
                expected: y2_size,
                got: self.cols,
            });
        }
        let y1_size = self.cols / y2_size;
        let mut rows = Vec::with_capacity(self.rows);
        for x in 0..self.rows {
            let mut row = vec![0.0; y2_size];
            for y1 in 0..y1_size {
                for y2 in 0..y2_size {
                    row[y2] += self.get(x, y1 * y2_size + y2);
                }
            }
            rows.push(row);
        }
        StochasticKernel::from_rows(rows)
    }
}

impl TryFrom<Vec<Vec<f64>>> for StochasticKernel {
    type Error = Error;
    fn try_from(v: Vec<Vec<f64>>) -> Result<Self> {
        StochasticKernel::from_rows(v)
    }
}

impl From<StochasticKernel> for Vec<Vec<f64>> {
    fn from(k: StochasticKernel) -> Vec<Vec<f64>> {
        (0..k.rows()).map(|x| k.row(x).to_vec()).collect()
    }
}

/// Induced output distribution `(p ∘ w)(y) = Σ_x p(x) w(y|x)`.
pub fn push_forward(p: &Pmf, w: &StochasticKernel) -> Result<Pmf> {
    if p.alphabet_size() != w.rows() {
        return Err(Error::DimensionMismatch {
            what: "push_forward input alphabet",
            expected: w.rows(),
            got: p.alphabet_size(),
        });
    }
    let mut out = vec![0.0; w.cols()];
    for x in 0..w.rows() {
        let px = p.get(x);
        if px == 0.0 {
            continue;
        }
        for y in 0..w.cols() {
            out[y] += px * w.get(x, y);
        }
    }
    Ok(Pmf { probs: out })
}

/// Joint law `p(x) w(y|x)` over the product alphabet, index `x * cols + y`.
pub fn joint(p: &Pmf, w: &StochasticKernel) -> Result<Pmf> {
    if p.alphabet_size() != w.rows() {
        return Err(Error::DimensionMismatch {
            what: "joint input alphabet",
            expected: w.rows(),
            got: p.alphabet_size(),
        });
    }
    let mut out = Vec::with_capacity(w.rows() * w.cols());
    for x in 0..w.rows() {
        for y in 0..w.cols() {
            out.push(p.get(x) * w.get(x, y));
        }
    }
    Ok(Pmf { probs: out })
}

/// Empirical pmf (type) of a symbol sequence.
pub fn empirical_type(sequence: &[usize], alphabet_size: usize) -> Result<Pmf> {
    if sequence.is_empty() {
        return Err(Error::RejectedInput("empty sequence has no type".into()));
    }
    let mut counts = vec![0usize; alphabet_size];
    for &s in sequence {
        if s >= alphabet_size {
            return Err(Error::RejectedInput("symbol outside alphabet".into()));
        }
        counts[s] += 1;
    }
    let n = sequence.len() as f64;
    Ok(Pmf {
        probs: counts.iter().map(|&c| c as f64 / n).collect(),
    })
}

/// A reproducible random-stream identifier.
///
/// `(master, stream)` deterministically fixes the entire stream: the master
/// seed is expanded into a ChaCha12 key and the stream id selects one of
/// 2^64 independent streams of that key. Sub-streams for trials, blocks,
/// and codebooks are derived with [`Seed::derive`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Seed {
    pub master: u64,
    pub stream: u64,
}

/// Labels for derived sub-streams so distinct purposes never collide.
#[derive(Debug, Clone, Copy)]
pub enum StreamRole {
    TrialNoise,
    Codebook,
    Keys,
    TypeCodebook,
    Bootstrap,
    Scratch,
}

impl StreamRole {
    fn tag(self) -> u64 {
        match self {
            StreamRole::TrialNoise => 0x9e37_79b9_7f4a_7c15,
            StreamRole::Codebook => 0xbf58_476d_1ce4_e5b9,
            StreamRole::Keys => 0x94d0_49bb_1331_11eb,
            StreamRole::TypeCodebook => 0xd6e8_feb8_6659_fd93,
            StreamRole::Bootstrap => 0xa076_1d64_78bd_642f,
            StreamRole::Scratch => 0xe703_7ed1_a0b4_28db,
        }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl Seed {
    pub fn new(master: u64, stream: u64) -> Self {
        Seed { master, stream }
    }

    /// Derives a sub-stream for `(role, a, b)` under the same master seed.
    pub fn derive(&self, role: StreamRole, a: u64, b: u64) -> Seed {
        let mut st = self.stream ^ role.tag();
        let mut mixed = splitmix64(&mut st);
        st ^= a;
        mixed ^= splitmix64(&mut st);
        st ^= b;
        mixed ^= splitmix64(&mut st);
        Seed {
            master: self.master,
            stream: mixed,
        }
    }

    /// Instantiates the generator for this seed.
    pub fn rng(&self) -> Rng {
        let mut key = [0u8; 32];
        let mut st = self.master;
        for chunk in key.chunks_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut st).to_le_bytes());
        }
        let mut inner = rand_chacha::ChaCha12Rng::from_seed(key);
        inner.set_stream(self.stream);
        Rng { inner }
    }
}

/// Deterministic, platform-independent random generator (ChaCha12).
#[derive(Debug, Clone)]
pub struct Rng {
    inner: rand_chacha::ChaCha12Rng,
}

impl Rng {
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform draw in `[0, 1)` with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, n)` (rejection-free modulo of a 64-bit draw;
    /// acceptable bias for n far below 2^64).
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        (self.next_u64() % n as u64) as usize
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, slice: &mut [T]) {
        for i in (1..slice.len()).rev() {
            let j = self.below(i + 1);
            slice.swap(i, j);
        }
    }
}

/// Draws one symbol from `p` with a fresh generator for `seed`.
pub fn sample(p: &Pmf, seed: Seed) -> usize {
    p.sample(&mut seed.rng())
}
