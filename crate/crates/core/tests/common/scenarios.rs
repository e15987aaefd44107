//! End-to-end scenarios on the synthetic two-class problem.

use snn_compress::admm::{
    admm_joint, admm_prune, admm_quantize, hard_compress, keep_count, off_level_count,
    CompressScope, CompressSession, Constraint, QuantSpec,
};
use snn_compress::data::{synthetic_two_class, Dataset};
use snn_compress::lif::LifParams;
use snn_compress::net::SpikingNetwork;
use snn_compress::stbp::{History, NoHooks, TrainConfig, Trainer};

pub const SPARSITY: f64 = 0.5;
pub const BITS: u32 = 2;

fn train_config(seed: u64) -> TrainConfig {
    TrainConfig {
        timesteps: 6,
        batch_size: 20,
        learning_rate: 0.1,
        admm_epochs: 3,
        hard_epochs: 3,
        seed,
        ..TrainConfig::default()
    }
}

/// A pretrained 16-12-8-2 network and its training data.
pub fn pretrained(seed: u64) -> (SpikingNetwork, Dataset) {
    let data = synthetic_two_class(200, seed).unwrap();
    let mut net = SpikingNetwork::init("16-12-8-2".parse().unwrap(), seed).unwrap();
    let mut trainer = Trainer::new(train_config(seed), LifParams::default()).unwrap();
    trainer
        .run(
            &mut net,
            &data,
            5,
            &mut NoHooks,
            "pretrain",
            None,
            &mut History::default(),
        )
        .unwrap();
    (net, data)
}

/// Checks every compressed layer of `net` by direct weight inspection.
fn inspect(
    net: &SpikingNetwork,
    sparsity: Option<f64>,
    bits: Option<u32>,
) -> Result<String, String> {
    let mut notes = Vec::new();
    for (l, layer) in net.layers.iter().enumerate() {
        let w = layer.weights.values();
        let n = w.len();
        let zeros = w.iter().filter(|x| **x == 0.0).count();
        if let Some(s) = sparsity {
            let pruned = n - keep_count(n, s).unwrap();
            let mask = layer.mask.as_ref().ok_or(format!("layer {l}: no mask"))?;
            if mask.len() - mask.ones() != pruned {
                return Err(format!(
                    "layer {l}: mask prunes {} of {n}, target {pruned}",
                    mask.len() - mask.ones()
                ));
            }
            if w.iter()
                .zip(mask.iter())
                .any(|(x, keep)| !keep && *x != 0.0)
            {
                return Err(format!("layer {l}: nonzero weight outside the mask"));
            }
            // Quantization may round surviving weights to zero as well.
            if (bits.is_none() && zeros != pruned) || zeros < pruned {
                return Err(format!("layer {l}: {zeros} zeros, target {pruned}"));
            }
        }
        if let Some(b) = bits {
            let q = layer
                .quant
                .ok_or(format!("layer {l}: no quantization state"))?;
            let off = off_level_count(w, q.alpha, b);
            if q.bits != b || off != 0 {
                return Err(format!(
                    "layer {l}: {off} weights off the {b}-bit grid of alpha {}",
                    q.alpha
                ));
            }
        }
        notes.push(format!("L{l} {zeros}/{n} zero"));
    }
    Ok(notes.join(", "))
}

/// Runs every ADMM driver and every hard-compression constraint and
/// inspects the result. One `(name, outcome)` per run.
pub fn constraint_exactness(seed: u64) -> Vec<(String, Result<String, String>)> {
    let (base, data) = pretrained(seed);
    let spec = QuantSpec::new(BITS, 3).unwrap();
    let runs: Vec<(&str, Option<f64>, Option<u32>)> = vec![
        ("admm_prune", Some(SPARSITY), None),
        ("admm_quantize", None, Some(BITS)),
        ("admm_joint", Some(SPARSITY), Some(BITS)),
        ("hard_compress sparse", Some(SPARSITY), None),
        ("hard_compress quantized", None, Some(BITS)),
        ("hard_compress sparse+quantized", Some(SPARSITY), Some(BITS)),
    ];
    runs.into_iter()
        .map(|(name, s, b)| {
            let mut net = base.clone();
            let trainer = Trainer::new(train_config(seed), LifParams::default()).unwrap();
            let mut sess =
                CompressSession::new(trainer, 5e-4, CompressScope::All, &data, None).unwrap();
            let run = match name {
                "admm_prune" => admm_prune(&mut net, &mut sess, SPARSITY),
                "admm_quantize" => admm_quantize(&mut net, &mut sess, spec),
                "admm_joint" => admm_joint(&mut net, &mut sess, SPARSITY, spec),
                "hard_compress sparse" => {
                    hard_compress(&mut net, &mut sess, Constraint::Sparse(SPARSITY))
                }
                "hard_compress quantized" => {
                    hard_compress(&mut net, &mut sess, Constraint::Quantized(spec))
                }
                _ => hard_compress(
                    &mut net,
                    &mut sess,
                    Constraint::SparseQuantized(SPARSITY, spec),
                ),
            };
            let outcome = run
                .map_err(|e| e.to_string())
                .and_then(|_| inspect(&net, s, b));
            (name.to_string(), outcome)
        })
        .collect()
}
