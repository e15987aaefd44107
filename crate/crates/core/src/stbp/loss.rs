use crate::error::{Result, SnnError};
use crate::net::{ForwardRecord, SpikeStats};

/// One-hot class target.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelVector {
    class: usize,
    values: Vec<f64>,
}

impl LabelVector {
    pub fn one_hot(class: usize, classes: usize) -> Result<Self> {
        if class >= classes {
            return Err(SnnError::OutOfRange {
                name: "class",
                value: class as f64,
                expected: "class < number of classes",
            });
        }
        let mut values = vec![0.0; classes];
        values[class] = 1.0;
        Ok(LabelVector { class, values })
    }

    pub fn class(&self) -> usize {
        self.class
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Squared distance between the label and the output firing rates.
pub fn rate_loss(record: &ForwardRecord, label: &LabelVector) -> Result<f64> {
    let rates = record.output_rates();
    if rates.len() != label.len() {
        return Err(SnnError::Dimension {
            context: "rate_loss label width",
            expected: rates.len(),
            actual: label.len(),
        });
    }
    Ok(rates
        .iter()
        .zip(label.values())
        .map(|(r, y)| (y - r) * (y - r))
        .sum())
}

/// Index of the largest output rate; ties go to the lowest index.
pub fn predict(record: &ForwardRecord) -> usize {
    argmax(&record.output_rates())
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// `normal_loss + lambda * R`.
pub fn regularized_loss(normal_loss: f64, stats: &SpikeStats, lambda: f64) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(SnnError::OutOfRange {
            name: "lambda",
            value: lambda,
            expected: "lambda >= 0",
        });
    }
    Ok(normal_loss + lambda * stats.avg_rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lif::LifParams;
    use crate::net::{forward_pass, SpikeTrain, SpikingNetwork};

    /// Output neuron `k` fires exactly `counts[k]` times out of `t_len`.
    fn record_with_counts(counts: &[usize], t_len: usize) -> ForwardRecord {
        let n = counts.len();
        // input neuron k drives output neuron k one-to-one with a supra-threshold weight
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let net = SpikingNetwork::dense(&[rows]).unwrap();
        let mut data = vec![0.0; t_len * n];
        for (k, &c) in counts.iter().enumerate() {
            for t in 0..c {
                data[t * n + k] = 1.0;
            }
        }
        let input = SpikeTrain::new(t_len, n, data).unwrap();
        forward_pass(&net, &input, &LifParams::default()).unwrap()
    }

    #[test]
    fn perfect_rate_gives_zero_loss() {
        let rec = record_with_counts(&[0, 10, 0], 10);
        let label = LabelVector::one_hot(1, 3).unwrap();
        assert_eq!(rate_loss(&rec, &label).unwrap(), 0.0);
    }

    #[test]
    fn silence_gives_unit_loss() {
        let rec = record_with_counts(&[0, 0, 0], 10);
        let label = LabelVector::one_hot(2, 3).unwrap();
        assert_eq!(rate_loss(&rec, &label).unwrap(), 1.0);
    }

    #[test]
    fn half_rate_on_true_class() {
        let rec = record_with_counts(&[5, 0], 10);
        let label = LabelVector::one_hot(0, 2).unwrap();
        assert!((rate_loss(&rec, &label).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn width_mismatch() {
        let rec = record_with_counts(&[5, 0], 10);
        assert!(rate_loss(&rec, &LabelVector::one_hot(0, 3).unwrap()).is_err());
    }

    #[test]
    fn prediction_ties_go_low() {
        assert_eq!(argmax(&[0.1, 0.9, 0.0]), 1);
        assert_eq!(argmax(&[0.0, 0.0, 0.0]), 0);
        assert_eq!(argmax(&[0.5, 0.5]), 0);
        assert_eq!(predict(&record_with_counts(&[1, 9, 0], 10)), 1);
        assert_eq!(predict(&record_with_counts(&[5, 5], 10)), 0);
    }

    #[test]
    fn regularized_loss_arithmetic() {
        let stats = |r: f64| SpikeStats {
            avg_rate: r,
            per_layer_rate: vec![r],
            total_spikes: 0.0,
            neuron_steps: 1.0,
        };
        assert_eq!(regularized_loss(0.5, &stats(0.2), 0.0).unwrap(), 0.5);
        assert!((regularized_loss(0.5, &stats(0.2), 0.1).unwrap() - 0.52).abs() < 1e-15);
        assert_eq!(regularized_loss(0.5, &stats(0.0), 0.3).unwrap(), 0.5);
        assert!(regularized_loss(0.5, &stats(0.2), -0.1).is_err());
    }

    #[test]
    fn one_hot_rejects_bad_class() {
        assert!(LabelVector::one_hot(3, 3).is_err());
    }
}
