use std::cmp::Ordering;

use crate::error::{Result, SnnError};

/// Binary support mask, bit-packed; `true` marks a kept weight.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PruneMask {
    len: usize,
    words: Vec<u64>,
}

impl PruneMask {
    pub fn all_ones(len: usize) -> Self {
        let mut mask = PruneMask {
            len,
            words: vec![u64::MAX; len.div_ceil(64)],
        };
        mask.clear_tail();
        mask
    }

    pub fn all_zeros(len: usize) -> Self {
        PruneMask {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut mask = Self::all_zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            mask.set(i, b);
        }
        mask
    }

    /// Support of the nonzero entries of `values`.
    pub fn from_nonzero(values: &[f64]) -> Self {
        let mut mask = Self::all_zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            mask.set(i, v != 0.0);
        }
        mask
    }

    /// Rebuilds a mask from its packed words; bits past `len` must be clear.
    pub fn from_words(len: usize, words: Vec<u64>) -> Result<Self> {
        if words.len() != len.div_ceil(64) {
            return Err(SnnError::Dimension {
                context: "mask words",
                expected: len.div_ceil(64),
                actual: words.len(),
            });
        }
        let mask = PruneMask { len, words };
        let mut check = mask.clone();
        check.clear_tail();
        if check != mask {
            return Err(SnnError::Format("mask has bits set past its length".into()));
        }
        Ok(mask)
    }

    fn clear_tail(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "mask index {i} out of range {}", self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, keep: bool) {
        assert!(i < self.len, "mask index {i} out of range {}", self.len);
        let bit = 1u64 << (i % 64);
        if keep {
            self.words[i / 64] |= bit;
        } else {
            self.words[i / 64] &= !bit;
        }
    }

    /// Number of kept entries.
    pub fn ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(|i| self.get(i))
    }

    /// Zeroes every entry of `values` outside the mask.
    pub fn apply(&self, values: &mut [f64]) {
        for (i, v) in values.iter_mut().enumerate() {
            if !self.get(i) {
                *v = 0.0;
            }
        }
    }
}

fn check_sparsity(s: f64) -> Result<()> {
    if !(0.0..1.0).contains(&s) {
        return Err(SnnError::OutOfRange {
            name: "sparsity",
            value: s,
            expected: "0 <= s < 1",
        });
    }
    Ok(())
}

/// How many of `n` weights survive sparsity `s`: `ceil((1 - s) n)`, with
/// products that are integral up to rounding error (e.g. `0.7 * 10`)
/// treated as integral.
pub fn keep_count(n: usize, s: f64) -> Result<usize> {
    check_sparsity(s)?;
    let x = (1.0 - s) * n as f64;
    let r = x.round();
    let k = if (x - r).abs() < 1e-9 * (n as f64).max(1.0) {
        r
    } else {
        x.ceil()
    };
    Ok((k as usize).min(n))
}

/// Keeps the largest-magnitude `keep_count(n, s)` entries of `v` and zeroes
/// the rest. At equal magnitude the lower index is kept.
pub fn prune_project(v: &[f64], s: f64) -> Result<(Vec<f64>, PruneMask)> {
    let keep = keep_count(v.len(), s)?;
    if v.iter().any(|x| !x.is_finite()) {
        return Err(SnnError::NonFinite("prune_project input"));
    }
    let mut order: Vec<usize> = (0..v.len()).collect();
    let by_rank =
        |&a: &usize, &b: &usize| -> Ordering { v[b].abs().total_cmp(&v[a].abs()).then(a.cmp(&b)) };
    if keep > 0 && keep < v.len() {
        order.select_nth_unstable_by(keep - 1, by_rank);
    }
    let mut mask = PruneMask::all_zeros(v.len());
    for &i in &order[..keep] {
        mask.set(i, true);
    }
    let mut z = v.to_vec();
    mask.apply(&mut z);
    Ok((z, mask))
}

/// Bitwidth and iteration count of the scale-and-level quantizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuantSpec {
    pub bits: u32,
    pub iterations: usize,
}

impl QuantSpec {
    pub fn new(bits: u32, iterations: usize) -> Result<Self> {
        let spec = QuantSpec { bits, iterations };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=30).contains(&self.bits) {
            return Err(SnnError::OutOfRange {
                name: "bits",
                value: self.bits as f64,
                expected: "1 <= b <= 30",
            });
        }
        if self.iterations == 0 {
            return Err(SnnError::OutOfRange {
                name: "iterations",
                value: 0.0,
                expected: "I >= 1",
            });
        }
        Ok(())
    }

    /// Largest level magnitude, `2^(b-1)`.
    pub fn max_level(&self) -> i64 {
        1i64 << (self.bits - 1)
    }

    /// Every level, ascending: `-2^(b-1), ..., -1, 0, 1, ..., 2^(b-1)`.
    pub fn levels(&self) -> Vec<i64> {
        let pos: Vec<i64> = (0..self.bits).map(|k| 1i64 << k).collect();
        let mut all: Vec<i64> = pos.iter().rev().map(|l| -l).collect();
        all.push(0);
        all.extend(pos);
        all
    }
}

/// Fitted quantization of one layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantState {
    pub bits: u32,
    pub alpha: f64,
}

/// Nearest element of `{0, ±1, ±2, ..., ±2^(b-1)}` to `x`; ties go to the
/// level of smaller magnitude.
pub fn nearest_level(x: f64, bits: u32) -> i64 {
    let m = x.abs();
    let mut lower = 0i64;
    let mut level = 0i64;
    for k in 0..bits {
        let upper = 1i64 << k;
        if m <= (lower + upper) as f64 / 2.0 {
            break;
        }
        level = upper;
        lower = upper;
    }
    if x < 0.0 {
        -level
    } else {
        level
    }
}

/// Output of [`quantize_project`].
#[derive(Debug, Clone, PartialEq)]
pub struct Quantized {
    /// `alpha * levels`.
    pub z: Vec<f64>,
    pub levels: Vec<i64>,
    pub alpha: f64,
    /// Iterations actually run.
    pub iterations: usize,
    /// `||v - alpha_k * levels_k||` after each iteration.
    pub residuals: Vec<f64>,
    /// Every entry fell on level 0; `alpha` is the last usable scale.
    pub degenerate: bool,
}

fn assign(v: &[f64], alpha: f64, bits: u32, levels: &mut [i64]) -> f64 {
    let mut zz = 0.0;
    for (l, &x) in levels.iter_mut().zip(v) {
        *l = nearest_level(x / alpha, bits);
        zz += (*l * *l) as f64;
    }
    zz
}

fn residual(v: &[f64], alpha: f64, levels: &[i64]) -> f64 {
    v.iter()
        .zip(levels)
        .map(|(&x, &l)| {
            let d = x - alpha * l as f64;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Alternating fit of a scale `alpha` and levels so that `alpha * levels`
/// approximates `v`.
///
/// Starts from `alpha = 1`. When that scale sends every entry of a nonzero
/// `v` to level 0 (typical for small weights), the start is replaced by
/// `mean(|v|)`. Each iteration snaps `v / alpha` to the nearest levels and
/// then refits `alpha = v.levels / levels.levels`. An all-zero assignment
/// stops the loop and sets [`Quantized::degenerate`].
pub fn quantize_project(v: &[f64], spec: &QuantSpec) -> Result<Quantized> {
    spec.validate()?;
    if v.iter().any(|x| !x.is_finite()) {
        return Err(SnnError::NonFinite("quantize_project input"));
    }
    let mut levels = vec![0i64; v.len()];
    let mut alpha = 1.0;
    if !v.is_empty() && assign(v, alpha, spec.bits, &mut levels) == 0.0 {
        let mean_abs = v.iter().map(|x| x.abs()).sum::<f64>() / v.len() as f64;
        if mean_abs > 0.0 {
            alpha = mean_abs;
        }
    }
    let mut residuals = Vec::with_capacity(spec.iterations);
    let mut previous: Option<Vec<i64>> = None;
    let mut iterations = 0;
    let mut degenerate = false;
    for _ in 0..spec.iterations {
        let zz = assign(v, alpha, spec.bits, &mut levels);
        iterations += 1;
        if zz == 0.0 {
            degenerate = true;
            break;
        }
        let vz: f64 = v.iter().zip(&levels).map(|(&x, &l)| x * l as f64).sum();
        alpha = vz / zz;
        residuals.push(residual(v, alpha, &levels));
        if previous.as_deref() == Some(&levels[..]) {
            break;
        }
        previous = Some(levels.clone());
    }
    let z = levels.iter().map(|&l| alpha * l as f64).collect();
    Ok(Quantized {
        z,
        levels,
        alpha,
        iterations,
        residuals,
        degenerate,
    })
}

/// Entries of `w` that are not exactly `alpha * level` for a valid level.
pub fn off_level_count(w: &[f64], alpha: f64, bits: u32) -> usize {
    w.iter()
        .filter(|&&x| {
            let l = nearest_level(x / alpha, bits);
            x != alpha * l as f64
        })
        .count()
}
