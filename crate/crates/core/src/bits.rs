//! Bit strings are `[u8]` slices holding 0/1 values, most significant first.

use rand::Rng;

use crate::error::usage;
use crate::Result;

/// Interprets `bits` as an unsigned integer, MSB first.
pub fn to_u64(bits: &[u8]) -> u64 {
    debug_assert!(bits.len() <= 64);
    bits.iter().fold(0u64, |acc, &b| (acc << 1) | u64::from(b & 1))
}

/// Writes `value` as `width` bits, MSB first.
pub fn from_u64(value: u64, width: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(width);
    push_u64(&mut out, value, width);
    out
}

pub fn push_u64(out: &mut Vec<u8>, value: u64, width: usize) {
    for i in (0..width).rev() {
        out.push(((value >> i) & 1) as u8);
    }
}

/// Parses a string of `0`/`1` characters.
pub fn parse(s: &str) -> Result<Vec<u8>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            other => Err(usage(format!("invalid bit character {other:?} in {s:?}"))),
        })
        .collect()
}

pub fn format(bits: &[u8]) -> String {
    bits.iter().map(|&b| if b == 0 { '0' } else { '1' }).collect()
}

pub fn random<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<u8> {
    (0..len).map(|_| rng.random::<bool>() as u8).collect()
}

pub fn hamming(a: &[u8], b: &[u8]) -> u64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).filter(|(x, y)| x != y).count() as u64
}

/// log2 of a power of two, or `None`.
pub fn exact_log2(n: usize) -> Option<usize> {
    (n.is_power_of_two()).then(|| n.trailing_zeros() as usize)
}
