//! Binary checkpoints: little-endian, versioned, length- and checksum-guarded.
//!
//! Layout: `SNNCKPT\0`, version `u32`, payload length `u64`, payload,
//! FNV-1a 64 checksum of the payload. The payload holds the architecture
//! descriptor, root seed, epoch counter, and per layer the weight shape,
//! the `f64` weights, an optional bit-packed mask and an optional
//! quantization scale.

use std::path::Path;

use crate::admm::{PruneMask, QuantState};
use crate::error::{Result, SnnError};
use crate::net::{Architecture, Layer, LayerWeights, SpikingNetwork};

const MAGIC: &[u8; 8] = b"SNNCKPT\0";
pub const FORMAT_VERSION: u32 = 1;

/// A network plus the training position needed to resume it.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub net: SpikingNetwork,
    /// Root seed; every random stream is derived from it and the epoch.
    pub seed: u64,
    /// Training epochs completed across all stages.
    pub epoch: u64,
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut p = Vec::new();
        let arch = self.net.arch().to_string();
        p.extend_from_slice(&(arch.len() as u32).to_le_bytes());
        p.extend_from_slice(arch.as_bytes());
        p.extend_from_slice(&self.seed.to_le_bytes());
        p.extend_from_slice(&self.epoch.to_le_bytes());
        p.extend_from_slice(&(self.net.layers.len() as u32).to_le_bytes());
        for layer in &self.net.layers {
            let shape = layer.weights.kind().weight_shape();
            p.extend_from_slice(&(shape.len() as u32).to_le_bytes());
            for d in &shape {
                p.extend_from_slice(&(*d as u64).to_le_bytes());
            }
            let values = layer.weights.values();
            p.extend_from_slice(&(values.len() as u64).to_le_bytes());
            for v in values {
                p.extend_from_slice(&v.to_le_bytes());
            }
            match &layer.mask {
                Some(mask) => {
                    p.push(1);
                    p.extend_from_slice(&(mask.len() as u64).to_le_bytes());
                    for w in mask.words() {
                        p.extend_from_slice(&w.to_le_bytes());
                    }
                }
                None => p.push(0),
            }
            match &layer.quant {
                Some(q) => {
                    p.push(1);
                    p.extend_from_slice(&q.bits.to_le_bytes());
                    p.extend_from_slice(&q.alpha.to_le_bytes());
                }
                None => p.push(0),
            }
        }
        let mut out = Vec::with_capacity(p.len() + 28);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(p.len() as u64).to_le_bytes());
        out.extend_from_slice(&p);
        out.extend_from_slice(&fnv1a(&p).to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 20 || &bytes[..8] != MAGIC {
            return Err(SnnError::Format("missing checkpoint magic".into()));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
        if version != FORMAT_VERSION {
            return Err(SnnError::Format(format!(
                "checkpoint version {version}, this build reads version {FORMAT_VERSION}"
            )));
        }
        let len = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes")) as usize;
        if bytes.len() != 20 + len + 8 {
            return Err(SnnError::Format(format!(
                "payload length {len} does not match file size {}",
                bytes.len()
            )));
        }
        let payload = &bytes[20..20 + len];
        let stored = u64::from_le_bytes(bytes[20 + len..].try_into().expect("8 bytes"));
        if stored != fnv1a(payload) {
            return Err(SnnError::Format("payload checksum mismatch".into()));
        }
        let mut r = Cursor {
            bytes: payload,
            pos: 0,
        };
        let arch_len = r.u32()? as usize;
        let arch_text = std::str::from_utf8(r.take(arch_len)?)
            .map_err(|_| SnnError::Format("architecture is not UTF-8".into()))?;
        let arch: Architecture = arch_text.parse()?;
        let seed = r.u64()?;
        let epoch = r.u64()?;
        let n_layers = r.u32()? as usize;
        let kinds = arch.layer_kinds()?;
        if kinds.len() != n_layers {
            return Err(SnnError::Format(format!(
                "{n_layers} layers stored for architecture {arch}"
            )));
        }
        let mut layers = Vec::with_capacity(n_layers);
        for kind in kinds {
            let rank = r.u32()? as usize;
            let shape = (0..rank)
                .map(|_| r.u64().map(|d| d as usize))
                .collect::<Result<Vec<_>>>()?;
            if shape != kind.weight_shape() {
                return Err(SnnError::Shape {
                    context: "checkpoint layer",
                    expected: kind.weight_shape(),
                    actual: shape,
                });
            }
            let n = r.u64()? as usize;
            if n != kind.weight_len() {
                return Err(SnnError::Format(format!(
                    "{n} weights stored, shape needs {}",
                    kind.weight_len()
                )));
            }
            let values = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
            let mut layer = Layer::new(LayerWeights::new(kind, values)?);
            if r.flag()? {
                let mask_len = r.u64()? as usize;
                let words = (0..mask_len.div_ceil(64))
                    .map(|_| r.u64())
                    .collect::<Result<Vec<_>>>()?;
                layer.mask = Some(PruneMask::from_words(mask_len, words)?);
            }
            if r.flag()? {
                let bits = r.u32()?;
                let alpha = r.f64()?;
                layer.quant = Some(QuantState { bits, alpha });
            }
            layers.push(layer);
        }
        if r.pos != payload.len() {
            return Err(SnnError::Format(format!(
                "{} trailing payload bytes",
                payload.len() - r.pos
            )));
        }
        Ok(Checkpoint {
            net: SpikingNetwork::from_layers(arch, layers)?,
            seed,
            epoch,
        })
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let out = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(out)
            }
            None => Err(SnnError::Format(format!(
                "payload ends early at byte {}",
                self.pos
            ))),
        }
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    fn flag(&mut self) -> Result<bool> {
        match self.take(1)?[0] {
            0 => Ok(false),
            1 => Ok(true),
            b => Err(SnnError::Format(format!("invalid flag byte {b}"))),
        }
    }
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    std::fs::write(path, ckpt.to_bytes()).map_err(|e| SnnError::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = std::fs::read(path).map_err(|e| SnnError::io(path, e))?;
    Checkpoint::from_bytes(&bytes)
}
