//! Iterative leaky integrate-and-fire dynamics.
//!
//! Each neuron carries a membrane potential `u` and a binary output `o`.
//! One step of the recursion is
//!
//! ```text
//! u[t+1] = decay * u[t] * (1 - o[t]) + input[t+1]
//! o[t+1] = H(u[t+1] - u_th)
//! ```
//!
//! Resting and reset potentials are both zero, so a spike simply removes the
//! carried potential at the next step. The derivative of `H` used during
//! training is a boxcar of width `a` and height `1/a` centred on the
//! threshold, over the half-open window `[u_th - a/2, u_th + a/2)`.

use crate::error::{Result, SnnError};

/// Spike nonlinearity used by the forward pass.
///
/// `Ramp` is the continuous relaxation whose exact derivative is the boxcar
/// surrogate; it exists so that the backward pass can be checked against
/// finite differences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpikeFn {
    #[default]
    Heaviside,
    Ramp,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LifParams {
    /// Precomputed leak factor `exp(-dt / tau)`.
    pub decay: f64,
    /// Firing threshold.
    pub threshold: f64,
    /// Width `a` of the boxcar surrogate derivative.
    pub surrogate_width: f64,
    pub spike_fn: SpikeFn,
}

impl Default for LifParams {
    /// MNIST settings: decay 0.25, threshold 0.2, width 0.5.
    fn default() -> Self {
        LifParams {
            decay: 0.25,
            threshold: 0.2,
            surrogate_width: 0.5,
            spike_fn: SpikeFn::Heaviside,
        }
    }
}

impl LifParams {
    pub fn new(decay: f64, threshold: f64, surrogate_width: f64) -> Result<Self> {
        let params = LifParams {
            decay,
            threshold,
            surrogate_width,
            spike_fn: SpikeFn::Heaviside,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_spike_fn(mut self, spike_fn: SpikeFn) -> Self {
        self.spike_fn = spike_fn;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.decay) {
            return Err(SnnError::OutOfRange {
                name: "decay",
                value: self.decay,
                expected: "0 <= decay <= 1",
            });
        }
        if !(self.threshold > 0.0 && self.threshold.is_finite()) {
            return Err(SnnError::OutOfRange {
                name: "threshold",
                value: self.threshold,
                expected: "threshold > 0",
            });
        }
        if !(self.surrogate_width > 0.0 && self.surrogate_width.is_finite()) {
            return Err(SnnError::OutOfRange {
                name: "surrogate_width",
                value: self.surrogate_width,
                expected: "surrogate_width > 0",
            });
        }
        Ok(())
    }

    /// Output of the configured spike nonlinearity for potential `u`.
    #[inline]
    pub fn fire(&self, u: f64) -> f64 {
        match self.spike_fn {
            SpikeFn::Heaviside => {
                if u - self.threshold >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            SpikeFn::Ramp => {
                let lo = self.threshold - 0.5 * self.surrogate_width;
                ((u - lo) / self.surrogate_width).clamp(0.0, 1.0)
            }
        }
    }

    /// Boxcar approximation of `do/du`; no finiteness check.
    #[inline]
    pub fn surrogate(&self, u: f64) -> f64 {
        let half = 0.5 * self.surrogate_width;
        if u >= self.threshold - half && u < self.threshold + half {
            1.0 / self.surrogate_width
        } else {
            0.0
        }
    }
}

/// Heaviside step with `H(0) = 1`.
pub fn heaviside(x: f64) -> Result<u8> {
    if !x.is_finite() {
        return Err(SnnError::NonFinite("heaviside input"));
    }
    Ok(u8::from(x >= 0.0))
}

/// Boxcar surrogate derivative of the spike function at potential `u`.
pub fn surrogate_grad(u: f64, params: &LifParams) -> Result<f64> {
    if !u.is_finite() {
        return Err(SnnError::NonFinite("surrogate_grad input"));
    }
    Ok(params.surrogate(u))
}

/// Membrane potentials and spike outputs of one population.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuronState {
    pub u: Vec<f64>,
    pub o: Vec<f64>,
}

impl NeuronState {
    /// Resting state: `u = 0`, `o = 0`.
    pub fn zeros(n: usize) -> Self {
        NeuronState {
            u: vec![0.0; n],
            o: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }
}

/// Advances `state` by one timestep given the dendritic input sum.
pub fn lif_step(
    state: &NeuronState,
    weighted_input: &[f64],
    params: &LifParams,
) -> Result<NeuronState> {
    if state.o.len() != state.u.len() {
        return Err(SnnError::Dimension {
            context: "neuron state (o vs u)",
            expected: state.u.len(),
            actual: state.o.len(),
        });
    }
    if weighted_input.len() != state.len() {
        return Err(SnnError::Dimension {
            context: "lif_step input",
            expected: state.len(),
            actual: weighted_input.len(),
        });
    }
    let mut next = state.clone();
    step_in_place(&mut next.u, &mut next.o, weighted_input, params);
    Ok(next)
}

/// In-place form of [`lif_step`]. Lengths must already agree.
#[inline]
pub(crate) fn step_in_place(u: &mut [f64], o: &mut [f64], input: &[f64], params: &LifParams) {
    debug_assert!(u.len() == o.len() && u.len() == input.len());
    for ((u, o), &x) in u.iter_mut().zip(o.iter_mut()).zip(input) {
        let next = params.decay * *u * (1.0 - *o) + x;
        *u = next;
        *o = params.fire(next);
    }
}
