//! Random tiny networks and inputs shared by the oracle tests.
#![allow(dead_code)]

pub mod oracles;
pub mod scenarios;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use snn_compress::net::{SpikeTrain, SpikingNetwork};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random architecture with 1 to 3 weight layers; every third one starts
/// with a convolution over a small `CxHxW` input.
pub fn random_arch(rng: &mut ChaCha8Rng, case: usize) -> String {
    let depth = rng.gen_range(1..=3);
    if case % 3 == 2 {
        let c = rng.gen_range(1..=2);
        let side = rng.gen_range(4..=6);
        let mut s = format!(
            "{c}x{side}x{side}-{}C{}S{}",
            rng.gen_range(1..=3),
            rng.gen_range(2..=3),
            rng.gen_range(1..=2)
        );
        for _ in 1..depth {
            s.push_str(&format!("-{}", rng.gen_range(2..=5)));
        }
        s
    } else {
        let mut s = format!("{}", rng.gen_range(2..=7));
        for _ in 0..depth {
            s.push_str(&format!("-{}", rng.gen_range(2..=6)));
        }
        s
    }
}

/// Network with weights uniform in `[-scale, scale]`.
pub fn random_net(rng: &mut ChaCha8Rng, arch: &str, scale: f64) -> SpikingNetwork {
    let mut net = SpikingNetwork::init(arch.parse().unwrap(), rng.gen()).unwrap();
    for layer in &mut net.layers {
        for w in layer.weights.values_mut() {
            *w = rng.gen_range(-scale..=scale);
        }
    }
    net
}

pub fn random_spikes(rng: &mut ChaCha8Rng, timesteps: usize, width: usize, p: f64) -> SpikeTrain {
    let data = (0..timesteps * width)
        .map(|_| if rng.gen_bool(p) { 1.0 } else { 0.0 })
        .collect();
    SpikeTrain::new(timesteps, width, data).unwrap()
}

/// Length 1 to 12, entries uniform in `[-1, 1)` with one in ten exactly zero.
pub fn small_vector(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = rng.gen_range(1..=12);
    (0..n)
        .map(|_| {
            if rng.gen_bool(0.1) {
                0.0
            } else {
                rng.gen_range(-1.0..1.0)
            }
        })
        .collect()
}
