use super::{SpikeTrain, SpikingNetwork};
use crate::error::{Result, SnnError};
use crate::lif::{step_in_place, LifParams};

/// Membrane potentials and spikes of one layer at every timestep.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerTrace {
    width: usize,
    u: Vec<f64>,
    o: Vec<f64>,
}

impl LayerTrace {
    fn new(width: usize, timesteps: usize) -> Self {
        LayerTrace {
            width,
            u: vec![0.0; width * timesteps],
            o: vec![0.0; width * timesteps],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn u(&self, t: usize) -> &[f64] {
        &self.u[t * self.width..(t + 1) * self.width]
    }

    pub fn o(&self, t: usize) -> &[f64] {
        &self.o[t * self.width..(t + 1) * self.width]
    }

    pub fn spikes(&self) -> &[f64] {
        &self.o
    }

    pub fn spike_count(&self) -> f64 {
        self.o.iter().sum()
    }
}

/// Full state history of one simulation, as needed by the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardRecord {
    pub input: SpikeTrain,
    pub layers: Vec<LayerTrace>,
}

impl ForwardRecord {
    pub fn timesteps(&self) -> usize {
        self.input.timesteps()
    }

    pub fn output(&self) -> &LayerTrace {
        self.layers.last().expect("record has at least one layer")
    }

    /// Per-neuron average firing rate of the output layer.
    pub fn output_rates(&self) -> Vec<f64> {
        let out = self.output();
        let t_len = self.timesteps();
        let mut rates = vec![0.0; out.width];
        for t in 0..t_len {
            for (r, o) in rates.iter_mut().zip(out.o(t)) {
                *r += o;
            }
        }
        rates.iter_mut().for_each(|r| *r /= t_len as f64);
        rates
    }

    /// Spikes feeding layer `layer` at timestep `t`.
    pub fn presynaptic(&self, layer: usize, t: usize) -> &[f64] {
        if layer == 0 {
            self.input.at(t)
        } else {
            self.layers[layer - 1].o(t)
        }
    }
}

/// Simulates the network over the input's timesteps from the resting state.
///
/// Within a timestep layers are swept in depth order, so layer `n + 1`
/// integrates the spikes layer `n` emitted in the same timestep.
pub fn forward_pass(
    net: &SpikingNetwork,
    input: &SpikeTrain,
    params: &LifParams,
) -> Result<ForwardRecord> {
    if input.width() != net.input_len() {
        return Err(SnnError::Dimension {
            context: "forward_pass input width",
            expected: net.input_len(),
            actual: input.width(),
        });
    }
    if input.timesteps() == 0 {
        return Err(SnnError::Empty("input spike train"));
    }
    let t_len = input.timesteps();
    let mut layers: Vec<LayerTrace> = net
        .layers
        .iter()
        .map(|l| LayerTrace::new(l.weights.out_len(), t_len))
        .collect();
    let max_width = layers.iter().map(|l| l.width).max().unwrap_or(0);
    let mut drive = vec![0.0; max_width];

    for t in 0..t_len {
        for (n, layer) in net.layers.iter().enumerate() {
            let width = layers[n].width;
            let drive = &mut drive[..width];
            drive.fill(0.0);
            {
                let pre = if n == 0 {
                    input.at(t)
                } else {
                    layers[n - 1].o(t)
                };
                layer.weights.integrate_into(pre, drive);
            }
            let trace = &mut layers[n];
            let (prev, cur) = trace.u.split_at_mut(t * width);
            let (prev_o, cur_o) = trace.o.split_at_mut(t * width);
            let u = &mut cur[..width];
            let o = &mut cur_o[..width];
            if t > 0 {
                u.copy_from_slice(&prev[(t - 1) * width..]);
                o.copy_from_slice(&prev_o[(t - 1) * width..]);
            }
            step_in_place(u, o, drive, params);
        }
    }
    Ok(ForwardRecord {
        input: input.clone(),
        layers,
    })
}
