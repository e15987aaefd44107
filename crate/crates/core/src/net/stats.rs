use std::ops::Range;

use super::ForwardRecord;
use crate::error::{Result, SnnError};

/// Which layers contribute to a spike-rate measurement.
///
/// `Hidden` excludes the input encoding and the output layer and is the
/// scope shared by the activity regularizer and the compression metrics.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum RateScope {
    #[default]
    Hidden,
    All,
    Layers(Range<usize>),
}

impl RateScope {
    /// Concrete layer indices for a network with `num_layers` weight layers.
    pub fn resolve(&self, num_layers: usize) -> Range<usize> {
        match self {
            RateScope::Hidden => 0..num_layers.saturating_sub(1),
            RateScope::All => 0..num_layers,
            RateScope::Layers(r) => r.start.min(num_layers)..r.end.min(num_layers),
        }
    }
}

/// Average spikes per neuron per timestep.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeStats {
    pub avg_rate: f64,
    pub per_layer_rate: Vec<f64>,
    pub total_spikes: f64,
    /// Neuron count times timesteps (times samples when aggregated).
    pub neuron_steps: f64,
}

/// Measures spike rates of `record` over `scope`.
pub fn measure_spike_rate(record: &ForwardRecord, scope: &RateScope) -> Result<SpikeStats> {
    let mut counter = SpikeCounter::new(scope.clone());
    counter.add(record)?;
    counter.stats()
}

/// Accumulates spike counts across many records.
#[derive(Debug, Clone)]
pub struct SpikeCounter {
    scope: RateScope,
    layer_spikes: Vec<f64>,
    layer_steps: Vec<f64>,
}

impl SpikeCounter {
    pub fn new(scope: RateScope) -> Self {
        SpikeCounter {
            scope,
            layer_spikes: Vec::new(),
            layer_steps: Vec::new(),
        }
    }

    pub fn add(&mut self, record: &ForwardRecord) -> Result<()> {
        let range = self.scope.resolve(record.layers.len());
        if range.is_empty() {
            return Err(SnnError::Empty("spike-rate scope"));
        }
        if self.layer_spikes.is_empty() {
            self.layer_spikes = vec![0.0; range.len()];
            self.layer_steps = vec![0.0; range.len()];
        } else if self.layer_spikes.len() != range.len() {
            return Err(SnnError::Dimension {
                context: "spike counter layers",
                expected: self.layer_spikes.len(),
                actual: range.len(),
            });
        }
        let t_len = record.timesteps() as f64;
        for (k, layer) in record.layers[range].iter().enumerate() {
            self.layer_spikes[k] += layer.spike_count();
            self.layer_steps[k] += layer.width() as f64 * t_len;
        }
        Ok(())
    }

    pub fn stats(&self) -> Result<SpikeStats> {
        if self.layer_steps.is_empty() {
            return Err(SnnError::Empty("spike counter"));
        }
        let total_spikes: f64 = self.layer_spikes.iter().sum();
        let neuron_steps: f64 = self.layer_steps.iter().sum();
        Ok(SpikeStats {
            avg_rate: total_spikes / neuron_steps,
            per_layer_rate: self
                .layer_spikes
                .iter()
                .zip(&self.layer_steps)
                .map(|(s, n)| s / n)
                .collect(),
            total_spikes,
            neuron_steps,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lif::LifParams;
    use crate::net::{forward_pass, SpikeTrain, SpikingNetwork};

    fn record(weight: f64, steps: usize, pattern: &[f64]) -> ForwardRecord {
        // 1 input -> 2 hidden -> 1 output; hidden follow the input exactly when weight >= u_th
        let net = SpikingNetwork::dense(&[vec![vec![weight], vec![weight]], vec![vec![0.0, 0.0]]])
            .unwrap();
        let input = SpikeTrain::new(steps, 1, pattern.to_vec()).unwrap();
        forward_pass(&net, &input, &LifParams::default()).unwrap()
    }

    #[test]
    fn silent_record_has_zero_rate() {
        let rec = record(1.0, 4, &[0.0; 4]);
        assert_eq!(
            measure_spike_rate(&rec, &RateScope::Hidden)
                .unwrap()
                .avg_rate,
            0.0
        );
    }

    #[test]
    fn saturated_record_has_unit_rate() {
        let rec = record(1.0, 4, &[1.0; 4]);
        let stats = measure_spike_rate(&rec, &RateScope::Hidden).unwrap();
        assert_eq!(stats.avg_rate, 1.0);
        assert_eq!(stats.total_spikes, 8.0);
    }

    #[test]
    fn two_neurons_ten_steps_four_spikes() {
        let mut pattern = vec![0.0; 10];
        pattern[1] = 1.0;
        pattern[6] = 1.0;
        let rec = record(1.0, 10, &pattern);
        let stats = measure_spike_rate(&rec, &RateScope::Hidden).unwrap();
        assert_eq!(stats.total_spikes, 4.0);
        assert!((stats.avg_rate - 0.2).abs() < 1e-15);
    }

    #[test]
    fn empty_scope_is_an_error() {
        let net = SpikingNetwork::dense(&[vec![vec![1.0]]]).unwrap();
        let input = SpikeTrain::new(2, 1, vec![1.0, 1.0]).unwrap();
        let rec = forward_pass(&net, &input, &LifParams::default()).unwrap();
        assert!(measure_spike_rate(&rec, &RateScope::Hidden).is_err());
        assert_eq!(
            measure_spike_rate(&rec, &RateScope::All).unwrap().avg_rate,
            1.0
        );
    }
}
