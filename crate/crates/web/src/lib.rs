//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each export returns a JSON string. The plain `*_json` functions hold the
//! logic so they can be tested natively.

use serde_json::json;
use snn_compress::admm::{Constraint, QuantSpec};
use snn_compress::lif::{lif_step, LifParams, NeuronState};
use snn_compress::metrics::{multiplier, percent, residual_memory, residual_ops, residual_spikes};
use wasm_bindgen::prelude::*;

fn finite(name: &str, xs: &[f64]) -> Result<(), String> {
    match xs.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(format!("{name}[{i}] is not a finite number")),
        None => Ok(()),
    }
}

/// Membrane potential and spikes of one neuron driven by `inputs`.
pub fn lif_trace_json(inputs: &[f64], decay: f64, threshold: f64) -> Result<String, String> {
    finite("inputs", inputs)?;
    let params = LifParams::new(decay, threshold, LifParams::default().surrogate_width)
        .map_err(|e| e.to_string())?;
    let mut state = NeuronState::zeros(1);
    let (mut u, mut o) = (
        Vec::with_capacity(inputs.len()),
        Vec::with_capacity(inputs.len()),
    );
    for &x in inputs {
        state = lif_step(&state, &[x], &params).map_err(|e| e.to_string())?;
        u.push(state.u[0]);
        o.push(state.o[0]);
    }
    let rate = if o.is_empty() {
        0.0
    } else {
        o.iter().sum::<f64>() / o.len() as f64
    };
    Ok(json!({ "u": u, "o": o, "rate": rate }).to_string())
}

/// Projects `values` onto the sparse and/or quantized set.
///
/// `sparsity = 0` skips pruning; `bits = 0` skips quantization.
pub fn project_json(
    values: &[f64],
    sparsity: f64,
    bits: u32,
    iterations: usize,
) -> Result<String, String> {
    finite("values", values)?;
    let spec = || QuantSpec::new(bits, iterations).map_err(|e| e.to_string());
    let constraint = match (sparsity > 0.0, bits > 0) {
        (false, false) => {
            return Ok(json!({ "z": values, "alpha": null, "degenerate": false }).to_string())
        }
        (true, false) => Constraint::Sparse(sparsity),
        (false, true) => Constraint::Quantized(spec()?),
        (true, true) => Constraint::SparseQuantized(sparsity, spec()?),
    };
    let p = constraint
        .project(values, None)
        .map_err(|e| e.to_string())?;
    Ok(json!({ "z": p.z, "alpha": p.alpha, "degenerate": p.degenerate }).to_string())
}

/// Residual memory, spikes and operations with their display forms.
pub fn metrics_json(
    sparsity: f64,
    bits: u32,
    baseline_bits: u32,
    baseline_rate: f64,
    rate: f64,
) -> Result<String, String> {
    let r_mem = residual_memory(sparsity, bits, baseline_bits).map_err(|e| e.to_string())?;
    let r_s = residual_spikes(rate, baseline_rate).map_err(|e| e.to_string())?;
    let r_ops = residual_ops(r_mem, r_s).map_err(|e| e.to_string())?;
    Ok(json!({
        "r_mem": r_mem,
        "r_s": r_s,
        "r_ops": r_ops,
        "r_mem_pct": percent(r_mem),
        "r_mem_x": multiplier(r_mem),
        "r_ops_pct": percent(r_ops),
        "r_ops_x": multiplier(r_ops),
    })
    .to_string())
}

#[wasm_bindgen]
pub fn lif_trace(inputs: &[f64], decay: f64, threshold: f64) -> Result<String, JsError> {
    lif_trace_json(inputs, decay, threshold).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn project(
    values: &[f64],
    sparsity: f64,
    bits: u32,
    iterations: usize,
) -> Result<String, JsError> {
    project_json(values, sparsity, bits, iterations).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn metrics(
    sparsity: f64,
    bits: u32,
    baseline_bits: u32,
    baseline_rate: f64,
    rate: f64,
) -> Result<String, JsError> {
    metrics_json(sparsity, bits, baseline_bits, baseline_rate, rate).map_err(|e| JsError::new(&e))
}
