//! Deterministic splitting of one experiment seed into per-consumer streams.

/// Independent randomness consumers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Init = 1,
    Shuffle = 2,
    Encode = 3,
    Eval = 4,
    Data = 5,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for `stream` at coordinates `(a, b)`, e.g. (epoch, sample index).
pub fn derive(root: u64, stream: Stream, a: u64, b: u64) -> u64 {
    let mut h = splitmix64(root ^ (stream as u64).wrapping_mul(0xA24B_AED4_963E_E407));
    h = splitmix64(h ^ a.wrapping_mul(0x9FB2_1C65_1E98_DF25));
    splitmix64(h ^ b)
}
