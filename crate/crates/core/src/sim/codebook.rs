//! Constant-composition codebooks with the three-way index structure
//! (message part, local randomness part, structure-key part).

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::prob::{Pmf, Seed};

/// A block codebook. Every word is a permutation of the same rounded-type
/// multiset, so all words share one exact empirical type.
#[derive(Debug, Clone)]
pub struct Codebook {
    pub block_len: usize,
    /// Requested composition.
    pub composition: Pmf,
    /// Realized per-symbol counts (nearest type with integer counts).
    pub counts: Vec<usize>,
    /// Index dimensions `(|m|, |n|, |r1|)`.
    pub dims: [usize; 3],
    /// True when the natural `ceil(exp(rate * len))` sizes exceeded the cap
    /// and were scaled down.
    pub capped: bool,
    words: Vec<Vec<usize>>,
}

impl Codebook {
    pub fn total_words(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn flat_index(&self, m: usize, n: usize, r1: usize) -> usize {
        (m * self.dims[1] + n) * self.dims[2] + r1
    }

    pub fn word(&self, m: usize, n: usize, r1: usize) -> &[usize] {
        &self.words[self.flat_index(m, n, r1)]
    }

    pub fn word_flat(&self, idx: usize) -> &[usize] {
        &self.words[idx]
    }

    pub fn words(&self) -> impl Iterator<Item = &[usize]> {
        self.words.iter().map(|w| w.as_slice())
    }

    /// Builds a codebook from explicit words (testing and tiny instances).
    pub fn from_words(words: Vec<Vec<usize>>, dims: [usize; 3], alphabet: usize) -> Result<Self> {
        if words.len() != dims[0] * dims[1] * dims[2] {
            return Err(Error::DimensionMismatch {
                what: "codebook word count",
                expected: dims[0] * dims[1] * dims[2],
                got: words.len(),
            });
        }
        let block_len = words.first().map_or(0, |w| w.len());
        if block_len == 0 {
            return Err(Error::RejectedInput("empty codeword".into()));
        }
        let composition = crate::prob::empirical_type(&words[0], alphabet)?;
        let counts = words[0]
            .iter()
            .fold(alloc::vec![0usize; alphabet], |mut c, &s| {
                c[s] += 1;
                c
            });
        Ok(Codebook {
            block_len,
            composition,
            counts,
            dims,
            capped: false,
            words,
        })
    }
}

/// Rounds `p * len` to integer counts summing to `len` (largest remainder,
/// ties toward the smaller symbol index).
pub fn round_composition(p: &Pmf, len: usize) -> Vec<usize> {
    let k = p.alphabet_size();
    let mut counts = alloc::vec![0usize; k];
    let mut fractions: Vec<(usize, f64)> = Vec::with_capacity(k);
    let mut assigned = 0usize;
    for i in 0..k {
        let exact = p.get(i) * len as f64;
        let floor = libm::floor(exact) as usize;
        counts[i] = floor;
        assigned += floor;
        fractions.push((i, exact - floor as f64));
    }
    // Highest fractional part first; stable order breaks ties by index.
    fractions.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    let mut remaining = len - assigned;
    for (i, _) in fractions {
        if remaining == 0 {
            break;
        }
        counts[i] += 1;
        remaining -= 1;
    }
    counts
}

/// One uniformly random permutation of the counts multiset.
pub fn constant_composition_word(counts: &[usize], rng: &mut crate::prob::Rng) -> Vec<usize> {
    let mut word = Vec::with_capacity(counts.iter().sum());
    for (symbol, &c) in counts.iter().enumerate() {
        for _ in 0..c {
            word.push(symbol);
        }
    }
    rng.shuffle(&mut word);
    word
}

/// Draws a constant-composition codebook of type `type_p` and length
/// `block_len`, with index dimensions `ceil(exp(rate_i * block_len))` for
/// the `(message, local randomness, structure key)` triple, scaled down
/// proportionally when the product exceeds `cap`.
pub fn build_codebook(
    type_p: &Pmf,
    block_len: usize,
    rates_triple: [f64; 3],
    cap: usize,
    seed: Seed,
) -> Result<Codebook> {
    if cap < 2 {
        return Err(Error::RejectedInput("codebook cap below 2".into()));
    }
    if block_len == 0 {
        return Err(Error::RejectedInput("zero block length".into()));
    }
    let mut dims = [1usize; 3];
    for (d, &rate) in dims.iter_mut().zip(rates_triple.iter()) {
        if rate < 0.0 {
            return Err(Error::RejectedInput("negative codebook rate".into()));
        }
        let raw = libm::ceil(libm::exp(rate * block_len as f64));
        *d = if raw.is_finite() && raw < 1e17 {
            raw as usize
        } else {
            usize::MAX / 4
        }
        .max(1);
    }
    let natural: u128 = dims.iter().map(|&d| d as u128).product();
    let capped = natural > cap as u128;
    if capped {
        let factor = libm::cbrt(cap as f64 / natural as f64);
        for d in &mut dims {
            *d = ((*d as f64 * factor) as usize).max(1);
        }
        // Proportional scaling can overshoot slightly; trim largest dims.
        while dims.iter().map(|&d| d as u128).product::<u128>() > cap as u128 {
            let imax = (0..3).max_by_key(|&i| dims[i]).unwrap();
            dims[imax] -= 1;
        }
    }

    let counts = round_composition(type_p, block_len);
    let total = dims[0] * dims[1] * dims[2];
    let mut rng = seed.rng();
    let words = (0..total)
        .map(|_| constant_composition_word(&counts, &mut rng))
        .collect();
    Ok(Codebook {
        block_len,
        composition: type_p.clone(),
        counts,
        dims,
        capped,
        words,
    })
}
