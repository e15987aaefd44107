//! Independent oracles shared by the integration tests and the acceptance
//! report. Each returns counts or the first disagreement instead of
//! asserting, so callers decide how to judge and print them.

use rand::Rng;
use snn_compress::admm::{keep_count, nearest_level, prune_project, quantize_project, QuantSpec};
use snn_compress::lif::{LifParams, SpikeFn};
use snn_compress::net::{
    forward_pass, measure_spike_rate, LayerKind, RateScope, SpikeTrain, SpikingNetwork,
};
use snn_compress::stbp::{backward_pass, rate_loss, regularized_loss, LabelVector};

use super::{random_arch, random_net, random_spikes, rng, small_vector};

pub const FD_STEP: f64 = 1e-6;
pub const FD_REL_TOL: f64 = 1e-4;
/// Analytic and numeric values both below this count as agreeing zeros.
pub const FD_ABS_FLOOR: f64 = 1e-8;

fn loss(
    net: &SpikingNetwork,
    input: &SpikeTrain,
    label: &LabelVector,
    params: &LifParams,
    lambda: f64,
) -> f64 {
    let rec = forward_pass(net, input, params).unwrap();
    let normal = rate_loss(&rec, label).unwrap();
    if lambda == 0.0 {
        normal
    } else {
        regularized_loss(
            normal,
            &measure_spike_rate(&rec, &RateScope::Hidden).unwrap(),
            lambda,
        )
        .unwrap()
    }
}

pub struct GradCheck {
    pub passed: usize,
    pub total: usize,
    pub per_net: Vec<String>,
}

/// Backward pass against central differences in ramp mode, where the spike
/// function is piecewise linear with the boxcar as its exact derivative.
/// Nets have at most 3 weight layers and at most 4 timesteps; odd cases add
/// the activity penalty.
pub fn gradient_check(seed: u64, nets: usize) -> GradCheck {
    let params = LifParams::default().with_spike_fn(SpikeFn::Ramp);
    let mut rng = rng(seed);
    let mut out = GradCheck {
        passed: 0,
        total: 0,
        per_net: Vec::new(),
    };
    for case in 0..nets {
        let arch = random_arch(&mut rng, case);
        let net = random_net(&mut rng, &arch, 0.6);
        let timesteps = rng.gen_range(1..=4);
        let input = random_spikes(&mut rng, timesteps, net.input_len(), 0.5);
        let label =
            LabelVector::one_hot(rng.gen_range(0..net.output_len()), net.output_len()).unwrap();
        let lambda = if case % 2 == 1 && net.num_layers() > 1 {
            0.05
        } else {
            0.0
        };
        let rec = forward_pass(&net, &input, &params).unwrap();
        let grads = backward_pass(&net, &rec, &label, &params, lambda).unwrap();
        let (mut total, mut passed) = (0, 0);
        for l in 0..net.num_layers() {
            for i in 0..net.layers[l].weights.values().len() {
                let mut plus = net.clone();
                plus.layers[l].weights.values_mut()[i] += FD_STEP;
                let mut minus = net.clone();
                minus.layers[l].weights.values_mut()[i] -= FD_STEP;
                let fd = (loss(&plus, &input, &label, &params, lambda)
                    - loss(&minus, &input, &label, &params, lambda))
                    / (2.0 * FD_STEP);
                let an = grads.layers[l][i];
                let scale = an.abs().max(fd.abs());
                total += 1;
                passed += (scale < FD_ABS_FLOOR || (an - fd).abs() <= FD_REL_TOL * scale) as usize;
            }
        }
        out.per_net.push(format!(
            "{arch} T={timesteps} lambda={lambda}: {passed}/{total}"
        ));
        out.passed += passed;
        out.total += total;
    }
    out
}

/// Dendritic input of every output neuron by explicit index arithmetic,
/// summing inputs in ascending index order.
fn drive(kind: &LayerKind, w: &[f64], pre: &[f64]) -> Vec<f64> {
    match *kind {
        LayerKind::Dense { inputs, outputs } => (0..outputs)
            .map(|i| {
                let mut acc = 0.0;
                for j in 0..inputs {
                    if pre[j] != 0.0 {
                        acc += w[j * outputs + i] * pre[j];
                    }
                }
                acc
            })
            .collect(),
        LayerKind::Conv2d {
            in_shape: [ic_n, ih, iw],
            out_channels,
            kernel: (kh, kw),
            stride,
        } => {
            let (oh, ow) = ((ih - kh) / stride + 1, (iw - kw) / stride + 1);
            let mut out = Vec::with_capacity(out_channels * oh * ow);
            for oc in 0..out_channels {
                for oy in 0..oh {
                    for ox in 0..ow {
                        let mut acc = 0.0;
                        for ic in 0..ic_n {
                            for ky in 0..kh {
                                for kx in 0..kw {
                                    let s =
                                        pre[(ic * ih + oy * stride + ky) * iw + ox * stride + kx];
                                    if s != 0.0 {
                                        acc += w[((oc * ic_n + ic) * kh + ky) * kw + kx] * s;
                                    }
                                }
                            }
                        }
                        out.push(acc);
                    }
                }
            }
            out
        }
    }
}

/// `(u, o)` per timestep per layer from a plain scalar-loop simulator.
fn simulate(
    net: &SpikingNetwork,
    input: &SpikeTrain,
    p: &LifParams,
) -> Vec<Vec<(Vec<f64>, Vec<f64>)>> {
    let mut u: Vec<Vec<f64>> = net
        .layers
        .iter()
        .map(|l| vec![0.0; l.weights.out_len()])
        .collect();
    let mut o = u.clone();
    let mut history = Vec::new();
    for t in 0..input.timesteps() {
        let mut step = Vec::new();
        let mut pre = input.at(t).to_vec();
        for (n, layer) in net.layers.iter().enumerate() {
            let x = drive(layer.weights.kind(), layer.weights.values(), &pre);
            for i in 0..x.len() {
                u[n][i] = p.decay * u[n][i] * (1.0 - o[n][i]) + x[i];
                o[n][i] = if u[n][i] - p.threshold >= 0.0 {
                    1.0
                } else {
                    0.0
                };
            }
            step.push((u[n].clone(), o[n].clone()));
            pre = o[n].clone();
        }
        history.push(step);
    }
    history
}

/// Compares `forward_pass` with the scalar simulator bit for bit.
pub fn forward_oracle(seed: u64, nets: usize) -> Result<(), String> {
    let params = LifParams::default();
    let mut rng = rng(seed);
    for case in 0..nets {
        let arch = random_arch(&mut rng, case);
        let net = random_net(&mut rng, &arch, 0.5);
        let timesteps = rng.gen_range(1..=6);
        let input = random_spikes(&mut rng, timesteps, net.input_len(), 0.4);
        let rec = forward_pass(&net, &input, &params).unwrap();
        for (t, step) in simulate(&net, &input, &params).iter().enumerate() {
            for (n, (u, o)) in step.iter().enumerate() {
                let same_u = rec.layers[n]
                    .u(t)
                    .iter()
                    .zip(u)
                    .all(|(a, b)| a.to_bits() == b.to_bits());
                if !same_u || rec.layers[n].o(t) != &o[..] {
                    return Err(format!("{arch}: layer {n} differs at t={t}"));
                }
            }
        }
    }
    Ok(())
}

/// Smallest squared distance from `v` to a vector with `k` nonzeros, by
/// enumerating every support of size `k`.
fn brute_force_prune(v: &[f64], k: usize) -> f64 {
    let n = v.len();
    (0u32..(1 << n))
        .filter(|bits| bits.count_ones() as usize == k)
        .map(|bits| {
            (0..n)
                .filter(|i| bits & (1 << i) == 0)
                .map(|i| v[i] * v[i])
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

/// `prune_project` against exhaustive support search.
pub fn prune_vs_brute_force(seed: u64, trials: usize) -> Result<(), String> {
    let mut rng = rng(seed);
    for _ in 0..trials {
        let v = small_vector(&mut rng);
        let n = v.len();
        let s = [0.0, 0.25, 0.5, 0.75, 0.9][rng.gen_range(0..5)];
        let k = keep_count(n, s).unwrap();
        let (z, mask) = prune_project(&v, s).unwrap();
        if mask.ones() != k {
            return Err(format!(
                "{v:?} s={s}: kept {} of {n}, expected {k}",
                mask.ones()
            ));
        }
        if (0..n).any(|i| z[i] != if mask.get(i) { v[i] } else { 0.0 }) {
            return Err(format!(
                "{v:?} s={s}: output is not v restricted to the mask"
            ));
        }
        let dist: f64 = v.iter().zip(&z).map(|(a, b)| (a - b) * (a - b)).sum();
        let best = brute_force_prune(&v, k);
        if (dist - best).abs() > 1e-12 {
            return Err(format!("{v:?} s={s}: distance {dist}, optimum {best}"));
        }
    }
    Ok(())
}

/// Runs `quantize_project` with 3 iterations on `trials` vectors, alternating
/// `b = 1` and `b = 2`. Fails on any residual increase; otherwise returns how
/// many outputs are fixed assignments (one more snap at the final scale
/// reproduces the levels).
pub fn quantize_settling(seed: u64, trials: usize) -> Result<usize, String> {
    let mut rng = rng(seed);
    let mut settled = 0;
    for trial in 0..trials {
        let bits = 1 + (trial % 2) as u32;
        let v = small_vector(&mut rng);
        let q = quantize_project(&v, &QuantSpec::new(bits, 3).unwrap()).unwrap();
        if q.residuals.windows(2).any(|w| w[1] > w[0] * (1.0 + 1e-12)) {
            return Err(format!("{v:?} b={bits}: residuals {:?}", q.residuals));
        }
        // A degenerate (all-zero) assignment keeps its scale and so also stays.
        settled += v
            .iter()
            .zip(&q.levels)
            .all(|(&x, &l)| nearest_level(x / q.alpha, bits) == l) as usize;
    }
    Ok(settled)
}
