//! Eight-point phase constellation with binary-reflected Gray labelling.
//!
//! Constellation index `k` sits at phase `2πk/8` and carries the bit group
//! `k ^ (k >> 1)`, so neighbouring points differ in exactly one bit.

use std::f64::consts::PI;

pub const POINTS: usize = 8;
pub const BITS_PER_SYMBOL: usize = 3;

/// Angular distance between neighbouring constellation points.
pub const STEP_RAD: f64 = PI / 4.0;

/// Map a 3-bit group to the constellation index whose Gray label it is.
pub fn gray_encode(bits: u8) -> u8 {
    let mut bits = bits & 0b111;
    let mut index = 0;
    while bits != 0 {
        index ^= bits;
        bits >>= 1;
    }
    index
}

/// Gray label (3-bit group) of a constellation index.
pub fn gray_decode(index: u8) -> u8 {
    let index = index & 0b111;
    index ^ (index >> 1)
}

pub fn phase_of(index: u8) -> f64 {
    (index & 0b111) as f64 * STEP_RAD
}

/// Signed index distance on the ring, in `-3..=4`.
pub fn ring_distance(a: u8, b: u8) -> i8 {
    let d = ((b as i16 - a as i16).rem_euclid(POINTS as i16)) as i8;
    if d > 4 {
        d - POINTS as i8
    } else {
        d
    }
}

pub fn neighbour(index: u8, direction: i8) -> u8 {
    ((index as i16 + direction as i16).rem_euclid(POINTS as i16)) as u8
}

/// Wrap an angle into `(-π, π]`.
pub fn wrap_phase(phase: f64) -> f64 {
    let mut p = phase.rem_euclid(2.0 * PI);
    if p > PI {
        p -= 2.0 * PI;
    }
    p
}

/// Nearest constellation index to an angle. An angle exactly halfway between
/// two points resolves to the point at the smaller angle (`π/8` gives 0,
/// `-π/8` gives 7).
pub fn nearest_index(phase: f64) -> u8 {
    let x = phase.rem_euclid(2.0 * PI) / STEP_RAD;
    let k = (x - 0.5 - 1e-9).ceil();
    (k as i64).rem_euclid(POINTS as i64) as u8
}

/// Split a bit string (MSB first, `bits.len()` a multiple of 3) into symbols.
pub fn bits_to_symbols(bits: &[bool]) -> Vec<u8> {
    debug_assert_eq!(bits.len() % BITS_PER_SYMBOL, 0);
    bits.chunks(BITS_PER_SYMBOL)
        .map(|group| {
            let value = group.iter().fold(0u8, |acc, &b| (acc << 1) | b as u8);
            gray_encode(value)
        })
        .collect()
}

pub fn symbols_to_bits(symbols: &[u8]) -> Vec<bool> {
    symbols
        .iter()
        .flat_map(|&s| {
            let label = gray_decode(s);
            (0..BITS_PER_SYMBOL)
                .rev()
                .map(move |i| (label >> i) & 1 == 1)
        })
        .collect()
}
