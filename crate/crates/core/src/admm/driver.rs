use std::fmt::Write as _;
use std::ops::Range;

use super::{AdmmState, CompressScope, Constraint, LayerAdmm, PruneMask, QuantSpec, QuantState};
use crate::data::{Dataset, Split};
use crate::error::{Result, SnnError};
use crate::net::SpikingNetwork;
use crate::stbp::{evaluate, EpochRecord, Gradients, History, TrainHooks, Trainer};

/// Per-epoch state of one compressed layer.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagRow {
    pub epoch: usize,
    pub stage: String,
    pub layer: usize,
    /// `||W - Z||` for ADMM epochs, `||W - proj(W)||` for hard epochs.
    pub w_minus_z: f64,
    pub alpha: Option<f64>,
    /// Constraint violations of `Z` (ADMM) or of `W` (hard); always 0.
    pub violations: usize,
}

impl DiagRow {
    pub const CSV_HEADER: &'static str = "epoch,stage,layer,w_minus_z,alpha,violations";

    pub fn to_csv(rows: &[DiagRow]) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in rows {
            let alpha = r.alpha.map_or(String::new(), |a| format!("{a:.9e}"));
            let _ = writeln!(
                out,
                "{},{},{},{:.9e},{},{}",
                r.epoch, r.stage, r.layer, r.w_minus_z, alpha, r.violations
            );
        }
        out
    }
}

/// Everything a compression run needs besides the network itself.
#[derive(Debug)]
pub struct CompressSession<'d> {
    pub trainer: Trainer,
    pub rho: f64,
    pub scope: CompressScope,
    pub train_data: &'d Dataset,
    /// Evaluated after every epoch when present.
    pub eval_data: Option<&'d Dataset>,
    pub history: History,
    pub diagnostics: Vec<DiagRow>,
    pub warnings: Vec<String>,
}

impl<'d> CompressSession<'d> {
    pub fn new(
        trainer: Trainer,
        rho: f64,
        scope: CompressScope,
        train_data: &'d Dataset,
        eval_data: Option<&'d Dataset>,
    ) -> Result<Self> {
        if !(rho >= 0.0 && rho.is_finite()) {
            return Err(SnnError::OutOfRange {
                name: "rho",
                value: rho,
                expected: "rho >= 0",
            });
        }
        Ok(CompressSession {
            trainer,
            rho,
            scope,
            train_data,
            eval_data,
            history: History::default(),
            diagnostics: Vec::new(),
            warnings: Vec::new(),
        })
    }

    fn layers(&self, net: &SpikingNetwork) -> Result<Range<usize>> {
        let range = self.scope.resolve(net.num_layers());
        if range.is_empty() {
            return Err(SnnError::InvalidParam(format!(
                "compress scope '{}' selects no layer of a {}-layer network",
                self.scope,
                net.num_layers()
            )));
        }
        Ok(range)
    }

    fn epoch(
        &mut self,
        net: &mut SpikingNetwork,
        hooks: &mut dyn TrainHooks,
        stage: &str,
    ) -> Result<usize> {
        let row = self.trainer.run_epoch(net, self.train_data, hooks, stage)?;
        let epoch = row.epoch;
        self.history.rows.push(row);
        if let Some(test) = self.eval_data {
            let cfg = &self.trainer.config;
            let ev = evaluate(net, test, &self.trainer.params, cfg.timesteps, cfg.seed)?;
            self.history.rows.push(EpochRecord {
                epoch,
                stage: stage.to_string(),
                split: Split::Test,
                loss: ev.loss,
                accuracy: ev.accuracy,
                avg_spike_rate: ev.spikes.map(|s| s.avg_rate),
            });
        }
        Ok(epoch)
    }

    fn warn_degenerate(&mut self, stage: &str, layer: usize) {
        self.warnings.push(format!(
            "{stage}: layer {layer} quantized to all zeros; scale kept from the previous fit"
        ));
    }
}

fn norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Adds the proximal term `(rho/2)||W - Z + Y||^2` to the training loss.
struct ProximalHooks<'a> {
    state: &'a AdmmState,
}

impl TrainHooks for ProximalHooks<'_> {
    fn penalty(&self, net: &SpikingNetwork) -> f64 {
        let rho = self.state.rho;
        self.state
            .layers
            .iter()
            .map(|la| {
                let w = net.layers[la.layer].weights.values();
                let sq: f64 = w
                    .iter()
                    .zip(&la.z)
                    .zip(&la.y)
                    .map(|((w, z), y)| (w - z + y) * (w - z + y))
                    .sum();
                0.5 * rho * sq
            })
            .sum()
    }

    fn add_penalty_grad(&self, net: &SpikingNetwork, grads: &mut Gradients) -> Result<()> {
        let rho = self.state.rho;
        if rho == 0.0 {
            return Ok(());
        }
        for la in &self.state.layers {
            let w = net.layers[la.layer].weights.values();
            for (((g, w), z), y) in grads.layers[la.layer]
                .iter_mut()
                .zip(w)
                .zip(&la.z)
                .zip(&la.y)
            {
                *g += rho * (w - z + y);
            }
        }
        Ok(())
    }
}

/// Re-projects the compressed layers after every update.
struct ProjectHooks {
    constraint: Constraint,
    layers: Range<usize>,
    alphas: Vec<Option<f64>>,
    masks: Vec<Option<PruneMask>>,
    degenerate: Vec<bool>,
}

impl ProjectHooks {
    fn new(constraint: Constraint, layers: Range<usize>, num_layers: usize) -> Self {
        ProjectHooks {
            constraint,
            layers,
            alphas: vec![None; num_layers],
            masks: vec![None; num_layers],
            degenerate: vec![false; num_layers],
        }
    }
}

impl TrainHooks for ProjectHooks {
    fn after_step(&mut self, net: &mut SpikingNetwork) -> Result<()> {
        for l in self.layers.clone() {
            let layer = &mut net.layers[l];
            let p = self
                .constraint
                .project(layer.weights.values(), layer.mask.as_ref())?;
            layer.weights.values_mut().copy_from_slice(&p.z);
            self.masks[l] = p.mask;
            if p.degenerate {
                self.degenerate[l] = true;
            } else {
                self.alphas[l] = p.alpha;
            }
        }
        Ok(())
    }
}

/// ADMM retraining: each epoch trains `W` under the proximal term, then
/// sets `Z = proj(W + Y)` and `Y += W - Z`.
fn admm_phase(
    net: &mut SpikingNetwork,
    sess: &mut CompressSession<'_>,
    constraint: Constraint,
    stage: &str,
) -> Result<()> {
    let layers = sess.layers(net)?;
    let mut state = AdmmState {
        rho: sess.rho,
        layers: Vec::with_capacity(layers.len()),
    };
    for l in layers {
        let layer = &net.layers[l];
        let p = constraint.project(layer.weights.values(), layer.mask.as_ref())?;
        if p.degenerate {
            sess.warn_degenerate(stage, l);
        }
        state.layers.push(LayerAdmm {
            layer: l,
            y: vec![0.0; p.z.len()],
            z: p.z,
            alpha: p.alpha,
        });
    }
    for _ in 0..sess.trainer.config.admm_epochs {
        let epoch = sess.epoch(net, &mut ProximalHooks { state: &state }, stage)?;
        for la in &mut state.layers {
            let layer = &net.layers[la.layer];
            let w = layer.weights.values();
            let v: Vec<f64> = w.iter().zip(&la.y).map(|(w, y)| w + y).collect();
            let p = constraint.project(&v, layer.mask.as_ref())?;
            if p.degenerate {
                sess.warnings.push(format!(
                    "{stage}: layer {} quantized to all zeros at epoch {epoch}",
                    la.layer
                ));
            } else {
                la.alpha = p.alpha;
            }
            la.z = p.z;
            for ((y, w), z) in la.y.iter_mut().zip(w).zip(&la.z) {
                *y += w - z;
            }
            sess.diagnostics.push(DiagRow {
                epoch,
                stage: stage.to_string(),
                layer: la.layer,
                w_minus_z: norm_diff(w, &la.z),
                alpha: la.alpha,
                violations: constraint.violations(&la.z, la.alpha, layer.mask.as_ref()),
            });
        }
    }
    Ok(())
}

/// Projected retraining: the compressed layers are projected before the
/// first update and after every update, so they end exactly feasible.
fn hard_phase(
    net: &mut SpikingNetwork,
    sess: &mut CompressSession<'_>,
    constraint: Constraint,
    stage: &str,
) -> Result<()> {
    let layers = sess.layers(net)?;
    let mut hooks = ProjectHooks::new(constraint, layers.clone(), net.num_layers());
    hooks.after_step(net)?;
    for _ in 0..sess.trainer.config.hard_epochs {
        let epoch = sess.epoch(net, &mut hooks, stage)?;
        for l in layers.clone() {
            let layer = &net.layers[l];
            let w = layer.weights.values();
            let p = constraint.project(w, layer.mask.as_ref())?;
            sess.diagnostics.push(DiagRow {
                epoch,
                stage: stage.to_string(),
                layer: l,
                w_minus_z: norm_diff(w, &p.z),
                alpha: hooks.alphas[l],
                violations: constraint.violations(w, hooks.alphas[l], layer.mask.as_ref()),
            });
        }
    }
    for l in layers {
        if hooks.degenerate[l] {
            sess.warn_degenerate(stage, l);
        }
        let layer = &mut net.layers[l];
        match constraint {
            Constraint::Sparse(_) => {
                layer.mask = hooks.masks[l].take();
            }
            Constraint::Quantized(spec) => {
                layer.quant = Some(QuantState {
                    bits: spec.bits,
                    alpha: hooks.alphas[l].unwrap_or(1.0),
                });
            }
            Constraint::SparseQuantized(_, spec) => {
                layer.mask = hooks.masks[l].take();
                layer.quant = Some(QuantState {
                    bits: spec.bits,
                    alpha: hooks.alphas[l].unwrap_or(1.0),
                });
            }
        }
    }
    Ok(())
}

/// ADMM connection pruning: ADMM retraining toward sparsity `s`, then hard
/// pruning retraining. Compressed layers end with a mask of their support.
pub fn admm_prune(net: &mut SpikingNetwork, sess: &mut CompressSession<'_>, s: f64) -> Result<()> {
    let c = Constraint::Sparse(s);
    c.validate()?;
    admm_phase(net, sess, c, "admm-prune")?;
    hard_phase(net, sess, c, "hard-prune")
}

/// ADMM weight quantization to `spec.bits` bits per layer.
pub fn admm_quantize(
    net: &mut SpikingNetwork,
    sess: &mut CompressSession<'_>,
    spec: QuantSpec,
) -> Result<()> {
    let c = Constraint::Quantized(spec);
    c.validate()?;
    admm_phase(net, sess, c, "admm-quant")?;
    hard_phase(net, sess, c, "hard-quant")
}

/// Pruning, then ADMM quantization restricted to the pruned support, then
/// hard quantization retraining on that support.
pub fn admm_joint(
    net: &mut SpikingNetwork,
    sess: &mut CompressSession<'_>,
    s: f64,
    spec: QuantSpec,
) -> Result<()> {
    Constraint::SparseQuantized(s, spec).validate()?;
    admm_prune(net, sess, s)?;
    let c = Constraint::Quantized(spec);
    admm_phase(net, sess, c, "admm-joint")?;
    hard_phase(net, sess, c, "hard-joint")
}

/// Projected retraining alone, without the ADMM phase; the baseline the
/// ADMM drivers are compared against.
pub fn hard_compress(
    net: &mut SpikingNetwork,
    sess: &mut CompressSession<'_>,
    constraint: Constraint,
) -> Result<()> {
    constraint.validate()?;
    hard_phase(net, sess, constraint, "hard")
}
