use std::fmt::Write as _;

use super::backward::accumulate_gradients;
use super::loss::{argmax, rate_loss, LabelVector};
use super::Gradients;
use crate::data::{batches, Dataset, Split};
use crate::error::{Result, SnnError};
use crate::lif::LifParams;
use crate::net::{
    bernoulli_encode, forward_pass, RateScope, SpikeCounter, SpikeStats, SpikingNetwork,
};
use crate::seed::{self, Stream};

/// Optimizer and schedule settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub timesteps: usize,
    /// Pretraining epochs.
    pub pretrain_epochs: usize,
    /// Epochs of ADMM retraining.
    pub admm_epochs: usize,
    /// Epochs of projected (hard) retraining.
    pub hard_epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Weight of the hidden-layer spike-rate penalty.
    pub lambda: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            timesteps: 10,
            pretrain_epochs: 150,
            admm_epochs: 10,
            hard_epochs: 10,
            batch_size: 50,
            learning_rate: 0.1,
            lambda: 0.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.timesteps == 0 {
            return Err(SnnError::OutOfRange {
                name: "timesteps",
                value: 0.0,
                expected: "T >= 1",
            });
        }
        if self.batch_size == 0 {
            return Err(SnnError::OutOfRange {
                name: "batch_size",
                value: 0.0,
                expected: "batch_size >= 1",
            });
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(SnnError::OutOfRange {
                name: "learning_rate",
                value: self.learning_rate,
                expected: "learning_rate > 0",
            });
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(SnnError::OutOfRange {
                name: "lambda",
                value: self.lambda,
                expected: "lambda >= 0",
            });
        }
        Ok(())
    }
}

/// Extension points for constrained retraining.
pub trait TrainHooks {
    /// Extra loss reported alongside the data loss.
    fn penalty(&self, _net: &SpikingNetwork) -> f64 {
        0.0
    }

    /// Adds the gradient of [`TrainHooks::penalty`] to the batch gradient.
    fn add_penalty_grad(&self, _net: &SpikingNetwork, _grads: &mut Gradients) -> Result<()> {
        Ok(())
    }

    /// Runs after every parameter update, e.g. to re-project weights.
    fn after_step(&mut self, _net: &mut SpikingNetwork) -> Result<()> {
        Ok(())
    }
}

/// Plain training with no augmentation.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoHooks;

impl TrainHooks for NoHooks {}

/// `w -= lr * g`; weights outside a layer's mask are left untouched.
pub fn sgd_step(net: &mut SpikingNetwork, grads: &Gradients, learning_rate: f64) -> Result<()> {
    grads.check_shape(net)?;
    for (layer, g) in net.layers.iter_mut().zip(&grads.layers) {
        let mask = layer.mask.clone();
        let w = layer.weights.values_mut();
        match mask {
            None => w
                .iter_mut()
                .zip(g)
                .for_each(|(w, g)| *w -= learning_rate * g),
            Some(mask) => {
                for (i, (w, g)) in w.iter_mut().zip(g).enumerate() {
                    if mask.get(i) {
                        *w -= learning_rate * g;
                    }
                }
            }
        }
    }
    Ok(())
}

/// One history row.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub stage: String,
    pub split: Split,
    pub loss: f64,
    pub accuracy: f64,
    /// Hidden-layer spike rate; `None` for networks without hidden layers.
    pub avg_spike_rate: Option<f64>,
}

/// Per-epoch training and evaluation results.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct History {
    pub rows: Vec<EpochRecord>,
}

impl History {
    pub const CSV_HEADER: &'static str = "epoch,stage,split,loss,accuracy,avg_spike_rate";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let rate = r
                .avg_spike_rate
                .map_or(String::new(), |v| format!("{v:.6}"));
            let _ = writeln!(
                out,
                "{},{},{},{:.6},{:.6},{}",
                r.epoch, r.stage, r.split, r.loss, r.accuracy, rate
            );
        }
        out
    }

    pub fn last(&self, split: Split) -> Option<&EpochRecord> {
        self.rows.iter().rev().find(|r| r.split == split)
    }
}

/// Test-time measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    pub loss: f64,
    pub spikes: Option<SpikeStats>,
}

/// Classifies every sample with a fixed encoding seed per sample index, so
/// repeated evaluations of one network see identical input spikes.
pub fn evaluate(
    net: &SpikingNetwork,
    data: &Dataset,
    params: &LifParams,
    timesteps: usize,
    seed: u64,
) -> Result<Evaluation> {
    if data.is_empty() {
        return Err(SnnError::Empty("dataset"));
    }
    let mut counter = SpikeCounter::new(RateScope::Hidden);
    let has_hidden = net.num_layers() > 1;
    let mut correct = 0usize;
    let mut loss = 0.0;
    for i in 0..data.len() {
        let input = bernoulli_encode(
            data.image(i),
            timesteps,
            seed::derive(seed, Stream::Eval, 0, i as u64),
        )?;
        let rec = forward_pass(net, &input, params)?;
        let label = LabelVector::one_hot(data.label(i), net.output_len())?;
        loss += rate_loss(&rec, &label)?;
        if argmax(&rec.output_rates()) == data.label(i) {
            correct += 1;
        }
        if has_hidden {
            counter.add(&rec)?;
        }
    }
    let n = data.len() as f64;
    Ok(Evaluation {
        accuracy: correct as f64 / n,
        loss: loss / n,
        spikes: if has_hidden {
            Some(counter.stats()?)
        } else {
            None
        },
    })
}

/// Mini-batch SGD driver with a global epoch counter shared by all stages.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub config: TrainConfig,
    pub params: LifParams,
    epoch: usize,
}

impl Trainer {
    pub fn new(config: TrainConfig, params: LifParams) -> Result<Self> {
        config.validate()?;
        params.validate()?;
        Ok(Trainer {
            config,
            params,
            epoch: 0,
        })
    }

    /// Epochs completed so far across every stage.
    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn set_epoch(&mut self, epoch: usize) {
        self.epoch = epoch;
    }

    /// One pass over `data` in seeded mini-batches.
    pub fn run_epoch(
        &mut self,
        net: &mut SpikingNetwork,
        data: &Dataset,
        hooks: &mut dyn TrainHooks,
        stage: &str,
    ) -> Result<EpochRecord> {
        if data.is_empty() {
            return Err(SnnError::Empty("dataset"));
        }
        let cfg = &self.config;
        let epoch = self.epoch;
        let mut grads = Gradients::zeros_like(net);
        let mut counter = SpikeCounter::new(RateScope::Hidden);
        let has_hidden = net.num_layers() > 1;
        let mut correct = 0usize;
        let mut loss_sum = 0.0;
        for batch in batches(data.len(), cfg.batch_size, cfg.seed, epoch)? {
            grads.fill_zero();
            let mut batch_loss = 0.0;
            let mut batch_counter = SpikeCounter::new(RateScope::Hidden);
            for &i in &batch {
                let enc_seed = seed::derive(cfg.seed, Stream::Encode, epoch as u64, i as u64);
                let input = bernoulli_encode(data.image(i), cfg.timesteps, enc_seed)?;
                let rec = forward_pass(net, &input, &self.params)?;
                let label = LabelVector::one_hot(data.label(i), net.output_len())?;
                batch_loss += rate_loss(&rec, &label)?;
                if argmax(&rec.output_rates()) == data.label(i) {
                    correct += 1;
                }
                if has_hidden {
                    batch_counter.add(&rec)?;
                    counter.add(&rec)?;
                }
                accumulate_gradients(net, &rec, &label, &self.params, cfg.lambda, &mut grads)?;
            }
            let b = batch.len() as f64;
            let mut loss = batch_loss / b;
            if cfg.lambda > 0.0 && has_hidden {
                loss += cfg.lambda * batch_counter.stats()?.avg_rate;
            }
            if !loss.is_finite() || !grads.is_finite() {
                return Err(SnnError::Diverged { epoch, loss });
            }
            loss_sum += loss * b;
            grads.scale(1.0 / b);
            hooks.add_penalty_grad(net, &mut grads)?;
            sgd_step(net, &grads, cfg.learning_rate)?;
            hooks.after_step(net)?;
        }
        let n = data.len() as f64;
        let loss = loss_sum / n + hooks.penalty(net);
        if !loss.is_finite() {
            return Err(SnnError::Diverged { epoch, loss });
        }
        self.epoch += 1;
        Ok(EpochRecord {
            epoch,
            stage: stage.to_string(),
            split: Split::Train,
            loss,
            accuracy: correct as f64 / n,
            avg_spike_rate: if has_hidden {
                Some(counter.stats()?.avg_rate)
            } else {
                None
            },
        })
    }

    /// Runs `epochs` epochs, appending a train row and, when `eval` is
    /// given, a test row per epoch to `history`.
    #[allow(clippy::too_many_arguments)]
    pub fn run(
        &mut self,
        net: &mut SpikingNetwork,
        data: &Dataset,
        epochs: usize,
        hooks: &mut dyn TrainHooks,
        stage: &str,
        eval: Option<&Dataset>,
        history: &mut History,
    ) -> Result<()> {
        for _ in 0..epochs {
            let row = self.run_epoch(net, data, hooks, stage)?;
            let epoch = row.epoch;
            history.rows.push(row);
            if let Some(test) = eval {
                let ev = evaluate(
                    net,
                    test,
                    &self.params,
                    self.config.timesteps,
                    self.config.seed,
                )?;
                history.rows.push(EpochRecord {
                    epoch,
                    stage: stage.to_string(),
                    split: Split::Test,
                    loss: ev.loss,
                    accuracy: ev.accuracy,
                    avg_spike_rate: ev.spikes.map(|s| s.avg_rate),
                });
            }
        }
        Ok(())
    }
}

/// Pretrains `net` for `config.pretrain_epochs` epochs.
pub fn train(
    net: &mut SpikingNetwork,
    data: &Dataset,
    config: &TrainConfig,
    params: &LifParams,
    hooks: &mut dyn TrainHooks,
) -> Result<History> {
    let mut trainer = Trainer::new(config.clone(), *params)?;
    let mut history = History::default();
    trainer.run(
        net,
        data,
        config.pretrain_epochs,
        hooks,
        "pretrain",
        None,
        &mut history,
    )?;
    Ok(history)
}
