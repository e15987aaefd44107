use super::LabelVector;
use crate::error::{Result, SnnError};
use crate::lif::LifParams;
use crate::net::{ForwardRecord, RateScope, SpikingNetwork};

/// Loss gradients for every weight layer, laid out like the weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &SpikingNetwork) -> Self {
        Gradients {
            layers: net
                .layers
                .iter()
                .map(|l| vec![0.0; l.weights.values().len()])
                .collect(),
        }
    }

    pub fn fill_zero(&mut self) {
        self.layers.iter_mut().for_each(|g| g.fill(0.0));
    }

    pub fn scale(&mut self, k: f64) {
        self.layers.iter_mut().flatten().for_each(|g| *g *= k);
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().flatten().all(|g| g.is_finite())
    }

    /// Errors unless every layer has the length of the matching weight tensor.
    pub fn check_shape(&self, net: &SpikingNetwork) -> Result<()> {
        if self.layers.len() != net.num_layers() {
            return Err(SnnError::Dimension {
                context: "gradient layer count",
                expected: net.num_layers(),
                actual: self.layers.len(),
            });
        }
        for (g, l) in self.layers.iter().zip(&net.layers) {
            if g.len() != l.weights.values().len() {
                return Err(SnnError::Dimension {
                    context: "gradient layer length",
                    expected: l.weights.values().len(),
                    actual: g.len(),
                });
            }
        }
        Ok(())
    }
}

/// Backpropagates the rate loss (plus `lambda` times the hidden spike rate)
/// through layers and timesteps of one recorded simulation.
pub fn backward_pass(
    net: &SpikingNetwork,
    record: &ForwardRecord,
    label: &LabelVector,
    params: &LifParams,
    lambda: f64,
) -> Result<Gradients> {
    let mut grads = Gradients::zeros_like(net);
    accumulate_gradients(net, record, label, params, lambda, &mut grads)?;
    Ok(grads)
}

fn check_record(net: &SpikingNetwork, record: &ForwardRecord, label: &LabelVector) -> Result<()> {
    if record.layers.len() != net.num_layers() {
        return Err(SnnError::Dimension {
            context: "record layer count",
            expected: net.num_layers(),
            actual: record.layers.len(),
        });
    }
    if record.input.width() != net.input_len() {
        return Err(SnnError::Dimension {
            context: "record input width",
            expected: net.input_len(),
            actual: record.input.width(),
        });
    }
    for (trace, layer) in record.layers.iter().zip(&net.layers) {
        if trace.width() != layer.weights.out_len() {
            return Err(SnnError::Dimension {
                context: "record layer width",
                expected: layer.weights.out_len(),
                actual: trace.width(),
            });
        }
    }
    if label.len() != net.output_len() {
        return Err(SnnError::Dimension {
            context: "label width",
            expected: net.output_len(),
            actual: label.len(),
        });
    }
    Ok(())
}

/// Adds the gradient of one sample into `grads`.
///
/// The adjoint `gu[t][l] = dL/du` obeys
/// `gu = go * surrogate(u) + gu[t+1] * decay * (1 - o)` with
/// `go = W[l+1]^T gu[t][l+1] - gu[t+1] * decay * u`, plus the rate-loss
/// term on the output layer and the activity term on hidden layers.
/// Nothing flows back from beyond the last timestep.
pub(crate) fn accumulate_gradients(
    net: &SpikingNetwork,
    record: &ForwardRecord,
    label: &LabelVector,
    params: &LifParams,
    lambda: f64,
    grads: &mut Gradients,
) -> Result<()> {
    check_record(net, record, label)?;
    grads.check_shape(net)?;
    if !(lambda >= 0.0) {
        return Err(SnnError::OutOfRange {
            name: "lambda",
            value: lambda,
            expected: "lambda >= 0",
        });
    }
    let n_layers = net.num_layers();
    let t_len = record.timesteps();
    let t_f = t_len as f64;
    let hidden = RateScope::Hidden.resolve(n_layers);
    let activity = if lambda > 0.0 {
        let neurons: usize = record.layers[hidden.clone()]
            .iter()
            .map(|l| l.width())
            .sum();
        if neurons == 0 {
            return Err(SnnError::Empty("hidden layers for the activity penalty"));
        }
        lambda / (neurons as f64 * t_f)
    } else {
        0.0
    };
    let rates = record.output_rates();
    let out_grad: Vec<f64> = rates
        .iter()
        .zip(label.values())
        .map(|(r, y)| -2.0 * (y - r) / t_f)
        .collect();

    let widths: Vec<usize> = record.layers.iter().map(|l| l.width()).collect();
    let mut gu_next: Vec<Vec<f64>> = widths.iter().map(|&w| vec![0.0; w]).collect();
    let mut gu_cur = gu_next.clone();
    let mut go_buf = vec![0.0; widths.iter().copied().max().unwrap_or(0)];

    for t in (0..t_len).rev() {
        let has_future = t + 1 < t_len;
        for l in (0..n_layers).rev() {
            let trace = &record.layers[l];
            let go = &mut go_buf[..widths[l]];
            let (below, above) = gu_cur.split_at_mut(l + 1);
            if l + 1 == n_layers {
                go.copy_from_slice(&out_grad);
            } else {
                go.fill(if hidden.contains(&l) { activity } else { 0.0 });
                net.layers[l + 1].weights.backprop_input(&above[0], go);
            }
            let gu = &mut below[l];
            let u = trace.u(t);
            let o = trace.o(t);
            let future = &gu_next[l];
            for i in 0..gu.len() {
                let (g_o, carry) = if has_future {
                    (
                        go[i] - future[i] * params.decay * u[i],
                        future[i] * params.decay * (1.0 - o[i]),
                    )
                } else {
                    (go[i], 0.0)
                };
                gu[i] = g_o * params.surrogate(u[i]) + carry;
            }
            net.layers[l].weights.accumulate_grad(
                &mut grads.layers[l],
                gu,
                record.presynaptic(l, t),
            );
        }
        std::mem::swap(&mut gu_next, &mut gu_cur);
    }
    Ok(())
}
