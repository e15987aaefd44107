//! Layered spiking networks: weights, forward simulation, input encoding
//! and spike statistics.

mod encode;
mod forward;
mod layer;
mod stats;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::admm::{PruneMask, QuantState};
use crate::error::{Result, SnnError};

pub use encode::{bernoulli_encode, SpikeTrain};
pub use forward::{forward_pass, ForwardRecord, LayerTrace};
pub use layer::{conv2d_integrate, dense_integrate, LayerKind, LayerWeights, Shape3};
pub use stats::{measure_spike_rate, RateScope, SpikeCounter, SpikeStats};

/// One entry of an architecture descriptor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerSpec {
    Dense(usize),
    Conv {
        channels: usize,
        kernel: usize,
        stride: usize,
    },
}

/// Network shape written as a dash-separated descriptor.
///
/// The first token is the input: a flat size (`784`) or `CxHxW`
/// (`1x28x28`). Later tokens are dense widths (`400`) or convolutions in
/// `<channels>C<kernel>S<stride>` form (`8C5S2`). A dense layer after a
/// convolution sees the flattened feature map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Architecture {
    pub input: Shape3,
    pub layers: Vec<LayerSpec>,
}

impl Architecture {
    pub fn input_len(&self) -> usize {
        self.input.iter().product()
    }

    /// Resolves every layer's connectivity, checking shapes along the way.
    pub fn layer_kinds(&self) -> Result<Vec<LayerKind>> {
        let mut shape = self.input;
        let mut kinds = Vec::with_capacity(self.layers.len());
        for spec in &self.layers {
            let kind = match *spec {
                LayerSpec::Dense(outputs) => LayerKind::Dense {
                    inputs: shape.iter().product(),
                    outputs,
                },
                LayerSpec::Conv {
                    channels,
                    kernel,
                    stride,
                } => {
                    if kernel > shape[1] || kernel > shape[2] {
                        return Err(SnnError::InvalidParam(format!(
                            "kernel {kernel} does not fit a {}x{} feature map",
                            shape[1], shape[2]
                        )));
                    }
                    LayerKind::Conv2d {
                        in_shape: shape,
                        out_channels: channels,
                        kernel: (kernel, kernel),
                        stride,
                    }
                }
            };
            shape = kind.out_shape();
            kinds.push(kind);
        }
        Ok(kinds)
    }
}

impl FromStr for Architecture {
    type Err = SnnError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: String| SnnError::InvalidParam(format!("architecture {s:?}: {msg}"));
        let mut tokens = s.trim().split('-');
        let head = tokens
            .next()
            .filter(|t| !t.is_empty())
            .ok_or_else(|| bad("empty".into()))?;
        let dims: Vec<usize> = head
            .split('x')
            .map(|d| {
                d.parse::<usize>()
                    .map_err(|_| bad(format!("bad input token {head:?}")))
            })
            .collect::<Result<_>>()?;
        let input = match dims.as_slice() {
            [n] => [*n, 1, 1],
            [c, h, w] => [*c, *h, *w],
            _ => return Err(bad(format!("input must be N or CxHxW, got {head:?}"))),
        };
        if input.contains(&0) {
            return Err(bad("zero input dimension".into()));
        }
        let mut layers = Vec::new();
        for tok in tokens {
            let spec = if let Some((ch, rest)) = tok.split_once('C') {
                let (k, st) = rest
                    .split_once('S')
                    .ok_or_else(|| bad(format!("bad conv token {tok:?}")))?;
                let parse = |v: &str| {
                    v.parse::<usize>()
                        .map_err(|_| bad(format!("bad conv token {tok:?}")))
                };
                LayerSpec::Conv {
                    channels: parse(ch)?,
                    kernel: parse(k)?,
                    stride: parse(st)?,
                }
            } else {
                LayerSpec::Dense(
                    tok.parse()
                        .map_err(|_| bad(format!("bad layer token {tok:?}")))?,
                )
            };
            match spec {
                LayerSpec::Dense(0) => return Err(bad("zero-width layer".into())),
                LayerSpec::Conv {
                    channels,
                    kernel,
                    stride,
                } if channels == 0 || kernel == 0 || stride == 0 => {
                    return Err(bad(format!("bad conv token {tok:?}")))
                }
                _ => {}
            }
            layers.push(spec);
        }
        if layers.is_empty() {
            return Err(bad("needs at least one layer".into()));
        }
        let arch = Architecture { input, layers };
        if matches!(arch.layers[0], LayerSpec::Conv { .. }) && input[1] == 1 && input[2] == 1 {
            return Err(bad("convolution needs a CxHxW input".into()));
        }
        arch.layer_kinds()?;
        Ok(arch)
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.input {
            [n, 1, 1] => write!(f, "{n}")?,
            [c, h, w] => write!(f, "{c}x{h}x{w}")?,
        }
        for spec in &self.layers {
            match spec {
                LayerSpec::Dense(n) => write!(f, "-{n}")?,
                LayerSpec::Conv {
                    channels,
                    kernel,
                    stride,
                } => write!(f, "-{channels}C{kernel}S{stride}")?,
            }
        }
        Ok(())
    }
}

/// A weight layer plus its optional compression state.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: LayerWeights,
    /// Support restriction: masked-out weights stay exactly zero during updates.
    pub mask: Option<PruneMask>,
    pub quant: Option<QuantState>,
}

impl Layer {
    pub fn new(weights: LayerWeights) -> Self {
        Layer {
            weights,
            mask: None,
            quant: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpikingNetwork {
    arch: Architecture,
    pub layers: Vec<Layer>,
}

impl SpikingNetwork {
    /// Random network with weights drawn uniformly from `[-k, k]`, `k = sqrt(3 / fan_in)`.
    pub fn init(arch: Architecture, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = arch
            .layer_kinds()?
            .into_iter()
            .map(|kind| {
                let k = (3.0 / kind.fan_in() as f64).sqrt();
                let values = (0..kind.weight_len())
                    .map(|_| rng.gen_range(-k..=k))
                    .collect();
                LayerWeights::new(kind, values).map(Layer::new)
            })
            .collect::<Result<_>>()?;
        Ok(SpikingNetwork { arch, layers })
    }

    /// Assembles a network from explicit weights; shapes must chain.
    pub fn from_layers(arch: Architecture, layers: Vec<Layer>) -> Result<Self> {
        let kinds = arch.layer_kinds()?;
        if kinds.len() != layers.len() {
            return Err(SnnError::Dimension {
                context: "layer count",
                expected: kinds.len(),
                actual: layers.len(),
            });
        }
        for (kind, layer) in kinds.iter().zip(&layers) {
            if kind != layer.weights.kind() {
                return Err(SnnError::InvalidParam(format!(
                    "layer {:?} does not match architecture {arch}",
                    layer.weights.kind()
                )));
            }
            if let Some(mask) = &layer.mask {
                if mask.len() != layer.weights.values().len() {
                    return Err(SnnError::Dimension {
                        context: "mask length",
                        expected: layer.weights.values().len(),
                        actual: mask.len(),
                    });
                }
            }
        }
        Ok(SpikingNetwork { arch, layers })
    }

    /// Dense-only network from `outputs x inputs` row matrices.
    pub fn dense(matrices: &[Vec<Vec<f64>>]) -> Result<Self> {
        let layers: Vec<Layer> = matrices
            .iter()
            .map(|m| LayerWeights::dense_from_rows(m).map(Layer::new))
            .collect::<Result<_>>()?;
        let first = layers.first().ok_or(SnnError::Empty("network"))?;
        let arch = Architecture {
            input: [first.weights.in_len(), 1, 1],
            layers: layers
                .iter()
                .map(|l| LayerSpec::Dense(l.weights.out_len()))
                .collect(),
        };
        Self::from_layers(arch, layers)
    }

    pub fn arch(&self) -> &Architecture {
        &self.arch
    }

    pub fn input_len(&self) -> usize {
        self.arch.input_len()
    }

    pub fn output_len(&self) -> usize {
        self.layers.last().map_or(0, |l| l.weights.out_len())
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn num_weights(&self) -> usize {
        self.layers.iter().map(|l| l.weights.values().len()).sum()
    }
}
