use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SnnError};

/// Input spikes for `timesteps` steps over `width` input neurons, row-major by time.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeTrain {
    timesteps: usize,
    width: usize,
    data: Vec<f64>,
}

impl SpikeTrain {
    pub fn new(timesteps: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != timesteps * width {
            return Err(SnnError::Dimension {
                context: "spike train",
                expected: timesteps * width,
                actual: data.len(),
            });
        }
        Ok(SpikeTrain {
            timesteps,
            width,
            data,
        })
    }

    /// The same input frame repeated at every timestep.
    pub fn repeated(frame: &[f64], timesteps: usize) -> Self {
        let data = (0..timesteps).flat_map(|_| frame.iter().copied()).collect();
        SpikeTrain {
            timesteps,
            width: frame.len(),
            data,
        }
    }

    pub fn timesteps(&self) -> usize {
        self.timesteps
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn at(&self, t: usize) -> &[f64] {
        &self.data[t * self.width..(t + 1) * self.width]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// Rate-codes an image: each pixel spikes at each timestep independently
/// with probability equal to its intensity.
pub fn bernoulli_encode(image: &[f64], timesteps: usize, seed: u64) -> Result<SpikeTrain> {
    if let Some(&p) = image.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(SnnError::OutOfRange {
            name: "pixel intensity",
            value: p,
            expected: "0 <= p <= 1",
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = vec![0.0; timesteps * image.len()];
    for frame in data.chunks_exact_mut(image.len().max(1)) {
        for (s, &p) in frame.iter_mut().zip(image) {
            // Certain outcomes draw nothing; only 0 < p < 1 consumes randomness.
            *s = if p >= 1.0 {
                1.0
            } else if p <= 0.0 {
                0.0
            } else if rng.gen::<f64>() < p {
                1.0
            } else {
                0.0
            };
        }
    }
    SpikeTrain::new(timesteps, image.len(), data)
}
