//! Residual memory, spike and operation fractions of a compressed network.

use std::fmt::Write as _;

use crate::error::{Result, SnnError};

/// Bitwidth of an uncompressed weight.
pub const BASELINE_BITS: u32 = 32;

/// Fraction of weight memory left: `(1 - s) * b / B`.
pub fn residual_memory(s: f64, b: u32, baseline_bits: u32) -> Result<f64> {
    if !(0.0..1.0).contains(&s) {
        return Err(SnnError::OutOfRange {
            name: "sparsity",
            value: s,
            expected: "0 <= s < 1",
        });
    }
    if b == 0 || b > baseline_bits {
        return Err(SnnError::OutOfRange {
            name: "bits",
            value: b as f64,
            expected: "1 <= b <= baseline bits",
        });
    }
    Ok((1.0 - s) * b as f64 / baseline_bits as f64)
}

/// Fraction of spikes left: `r / R`.
pub fn residual_spikes(r: f64, baseline_rate: f64) -> Result<f64> {
    if baseline_rate == 0.0 {
        return Err(SnnError::UndefinedBaseline);
    }
    if !(baseline_rate > 0.0 && baseline_rate.is_finite()) {
        return Err(SnnError::OutOfRange {
            name: "baseline rate",
            value: baseline_rate,
            expected: "R > 0",
        });
    }
    if !(r >= 0.0 && r.is_finite()) {
        return Err(SnnError::OutOfRange {
            name: "rate",
            value: r,
            expected: "r >= 0",
        });
    }
    Ok(r / baseline_rate)
}

/// Coarse fraction of operations left: `R_mem * R_s`.
///
/// `R_s` may exceed 1 when compression raises the spike rate.
pub fn residual_ops(r_mem: f64, r_s: f64) -> Result<f64> {
    if !(r_mem > 0.0 && r_mem <= 1.0) {
        return Err(SnnError::OutOfRange {
            name: "R_mem",
            value: r_mem,
            expected: "0 < R_mem <= 1",
        });
    }
    if !(r_s >= 0.0 && r_s.is_finite()) {
        return Err(SnnError::OutOfRange {
            name: "R_s",
            value: r_s,
            expected: "R_s >= 0",
        });
    }
    Ok(r_mem * r_s)
}

/// Rounds half away from zero for non-negative `x` at `decimals` places.
///
/// A relative nudge of 1e-9 keeps decimal halves such as `0.9375 * 100`
/// that land just below `.5` in binary rounding up.
pub fn round_half_up(x: f64, decimals: i32) -> f64 {
    let scale = 10f64.powi(decimals);
    let scaled = x * scale;
    (scaled + 0.5 + 1e-9 * scaled.abs().max(1.0)).floor() / scale
}

/// A fraction as a percentage with two decimals, e.g. `0.0234375 -> 2.34`.
pub fn percent(fraction: f64) -> f64 {
    round_half_up(fraction * 100.0, 2)
}

/// Compression multiplier shown next to a percentage: the reciprocal of
/// the rounded fraction, to two decimals. `None` for a zero fraction.
pub fn multiplier(fraction: f64) -> Option<f64> {
    let p = percent(fraction);
    (p > 0.0).then(|| round_half_up(100.0 / p, 2))
}

/// Everything reported for one compressed network.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressionReport {
    pub lambda: f64,
    pub sparsity: f64,
    pub bits: u32,
    pub baseline_bits: u32,
    /// Hidden-layer spike rate of the uncompressed network.
    pub baseline_rate: f64,
    /// Hidden-layer spike rate after compression.
    pub rate: f64,
    pub r_mem: f64,
    pub r_s: f64,
    pub r_ops: f64,
    pub baseline_accuracy: f64,
    pub accuracy: f64,
}

impl CompressionReport {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        lambda: f64,
        sparsity: f64,
        bits: u32,
        baseline_bits: u32,
        baseline_rate: f64,
        rate: f64,
        baseline_accuracy: f64,
        accuracy: f64,
    ) -> Result<Self> {
        let r_mem = residual_memory(sparsity, bits, baseline_bits)?;
        let r_s = residual_spikes(rate, baseline_rate)?;
        let r_ops = residual_ops(r_mem, r_s)?;
        Ok(CompressionReport {
            lambda,
            sparsity,
            bits,
            baseline_bits,
            baseline_rate,
            rate,
            r_mem,
            r_s,
            r_ops,
            baseline_accuracy,
            accuracy,
        })
    }

    /// `accuracy - baseline_accuracy`; negative when compression hurts.
    pub fn accuracy_loss(&self) -> f64 {
        self.accuracy - self.baseline_accuracy
    }

    pub const CSV_HEADER: &'static str = "lambda,sparsity,bits,rate,r_mem_pct,r_mem_x,r_ops_pct,r_ops_x,accuracy_pct,accuracy_loss_pct,baseline_rate,r_s,baseline_accuracy_pct";

    /// One CSV row; the leading columns follow the usual compression table
    /// layout (lambda, s, b, r, R_mem, R_ops, accuracy, accuracy loss).
    pub fn csv_row(&self) -> String {
        let x = |v: Option<f64>| v.map_or(String::new(), |m| format!("{m:.2}"));
        let mut out = String::new();
        let _ = write!(
            out,
            "{},{},{},{:.6},{:.2},{},{:.2},{},{:.2},{:.2},{:.6},{:.6},{:.2}",
            self.lambda,
            self.sparsity,
            self.bits,
            self.rate,
            percent(self.r_mem),
            x(multiplier(self.r_mem)),
            percent(self.r_ops),
            x(multiplier(self.r_ops)),
            self.accuracy * 100.0,
            self.accuracy_loss() * 100.0,
            self.baseline_rate,
            self.r_s,
            self.baseline_accuracy * 100.0,
        );
        out
    }

    pub fn to_csv(reports: &[CompressionReport]) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in reports {
            out.push_str(&r.csv_row());
            out.push('\n');
        }
        out
    }
}
