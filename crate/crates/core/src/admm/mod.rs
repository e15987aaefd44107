//! ADMM-constrained retraining: sparsity and quantization projections,
//! the augmented loss, and the pruning / quantization / joint drivers.

mod driver;
mod project;

use std::ops::Range;

use crate::error::{Result, SnnError};

pub use driver::{admm_joint, admm_prune, admm_quantize, hard_compress, CompressSession, DiagRow};
pub use project::{
    keep_count, nearest_level, off_level_count, prune_project, quantize_project, PruneMask,
    QuantSpec, QuantState, Quantized,
};

/// Target set for one compressed layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Constraint {
    /// Keep `ceil((1 - s) n)` weights.
    Sparse(f64),
    /// Weights in `alpha * {0, ±1, ..., ±2^(b-1)}`.
    Quantized(QuantSpec),
    /// Both: prune, then quantize the survivors.
    SparseQuantized(f64, QuantSpec),
}

/// Result of projecting one tensor onto a [`Constraint`].
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub z: Vec<f64>,
    pub alpha: Option<f64>,
    pub degenerate: bool,
    /// Support chosen by pruning; `None` for quantization alone.
    pub mask: Option<PruneMask>,
}

impl Constraint {
    pub fn validate(&self) -> Result<()> {
        match self {
            Constraint::Sparse(s) => keep_count(0, *s).map(|_| ()),
            Constraint::Quantized(q) => q.validate(),
            Constraint::SparseQuantized(s, q) => {
                keep_count(0, *s)?;
                q.validate()
            }
        }
    }

    /// Closest point of the constraint set to `v`, with entries outside
    /// `support` forced to zero first.
    pub fn project(&self, v: &[f64], support: Option<&PruneMask>) -> Result<Projection> {
        let mut v = v.to_vec();
        if let Some(m) = support {
            m.apply(&mut v);
        }
        let quantize =
            |v: &[f64], spec: &QuantSpec, mask: Option<PruneMask>| -> Result<Projection> {
                let q = quantize_project(v, spec)?;
                Ok(Projection {
                    z: q.z,
                    alpha: Some(q.alpha),
                    degenerate: q.degenerate,
                    mask,
                })
            };
        match self {
            Constraint::Sparse(s) => {
                let (z, mask) = prune_project(&v, *s)?;
                Ok(Projection {
                    z,
                    alpha: None,
                    degenerate: false,
                    mask: Some(mask),
                })
            }
            Constraint::Quantized(spec) => quantize(&v, spec, None),
            Constraint::SparseQuantized(s, spec) => {
                let (pruned, mask) = prune_project(&v, *s)?;
                quantize(&pruned, spec, Some(mask))
            }
        }
    }

    /// Entries of `w` that break the constraint; 0 means `w` is feasible.
    ///
    /// Sparsity counts surplus nonzeros and nonzeros outside `support`;
    /// quantization counts entries off the `alpha` grid.
    pub fn violations(&self, w: &[f64], alpha: Option<f64>, support: Option<&PruneMask>) -> usize {
        let outside = support.map_or(0, |m| {
            w.iter()
                .enumerate()
                .filter(|&(i, &x)| x != 0.0 && !m.get(i))
                .count()
        });
        let surplus = |s: f64| {
            let keep = keep_count(w.len(), s).unwrap_or(w.len());
            w.iter().filter(|&&x| x != 0.0).count().saturating_sub(keep)
        };
        let off_grid = |spec: &QuantSpec| match alpha {
            Some(a) => off_level_count(w, a, spec.bits),
            None => w.iter().filter(|&&x| x != 0.0).count(),
        };
        outside
            + match self {
                Constraint::Sparse(s) => surplus(*s),
                Constraint::Quantized(spec) => off_grid(spec),
                Constraint::SparseQuantized(s, spec) => surplus(*s) + off_grid(spec),
            }
    }
}

/// Which weight layers are compressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CompressScope {
    /// Every layer except the first and the last.
    #[default]
    Interior,
    /// Every layer except the last.
    AllButLast,
    All,
}

impl CompressScope {
    pub fn resolve(&self, num_layers: usize) -> Range<usize> {
        match self {
            CompressScope::Interior if num_layers < 3 => 0..0,
            CompressScope::Interior => 1..num_layers - 1,
            CompressScope::AllButLast => 0..num_layers.saturating_sub(1),
            CompressScope::All => 0..num_layers,
        }
    }
}

impl std::str::FromStr for CompressScope {
    type Err = SnnError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interior" => Ok(CompressScope::Interior),
            "all_but_last" => Ok(CompressScope::AllButLast),
            "all" => Ok(CompressScope::All),
            other => Err(SnnError::InvalidParam(format!(
                "compress scope '{other}' (expected interior, all_but_last or all)"
            ))),
        }
    }
}

impl std::fmt::Display for CompressScope {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CompressScope::Interior => "interior",
            CompressScope::AllButLast => "all_but_last",
            CompressScope::All => "all",
        })
    }
}

/// ADMM variables of one compressed layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerAdmm {
    pub layer: usize,
    /// Constraint-satisfying copy of the weights.
    pub z: Vec<f64>,
    /// Scaled multipliers.
    pub y: Vec<f64>,
    pub alpha: Option<f64>,
}

/// ADMM variables of every compressed layer plus the penalty weight.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub rho: f64,
    pub layers: Vec<LayerAdmm>,
}

fn check_len(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(SnnError::Dimension {
            context,
            expected,
            actual,
        });
    }
    Ok(())
}

/// `base_loss + (rho / 2) * sum_l ||W_l - Z_l + Y_l||^2`.
pub fn augmented_loss(
    base_loss: f64,
    w: &[&[f64]],
    z: &[&[f64]],
    y: &[&[f64]],
    rho: f64,
) -> Result<f64> {
    check_len("augmented_loss Z layers", w.len(), z.len())?;
    check_len("augmented_loss Y layers", w.len(), y.len())?;
    let mut sum = 0.0;
    for ((w, z), y) in w.iter().zip(z).zip(y) {
        check_len("augmented_loss Z", w.len(), z.len())?;
        check_len("augmented_loss Y", w.len(), y.len())?;
        sum += w
            .iter()
            .zip(*z)
            .zip(*y)
            .map(|((w, z), y)| {
                let d = w - z + y;
                d * d
            })
            .sum::<f64>();
    }
    Ok(base_loss + 0.5 * rho * sum)
}

/// Gradient of the proximal term with respect to `W`: `rho (W - Z + Y)`.
pub fn proximal_grad(w: &[f64], z: &[f64], y: &[f64], rho: f64) -> Result<Vec<f64>> {
    check_len("proximal_grad Z", w.len(), z.len())?;
    check_len("proximal_grad Y", w.len(), y.len())?;
    Ok(w.iter()
        .zip(z)
        .zip(y)
        .map(|((w, z), y)| rho * (w - z + y))
        .collect())
}

/// `Y + W - Z`.
pub fn multiplier_update(y: &[f64], w: &[f64], z: &[f64]) -> Result<Vec<f64>> {
    check_len("multiplier_update W", y.len(), w.len())?;
    check_len("multiplier_update Z", y.len(), z.len())?;
    Ok(y.iter()
        .zip(w)
        .zip(z)
        .map(|((y, w), z)| y + w - z)
        .collect())
}
