//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// CRC-5 by polynomial long division of `data · x^5 + init · x^16`.
pub fn crc5(data: u16) -> u32 {
    // Register preload with all ones is equivalent to XOR-ing the first five message bits.
    let mut msg: u32 = ((data as u32) << 5) ^ (0b11111 << 16);
    let divisor: u32 = 0b100101;
    for bit in (5..21).rev() {
        if msg & (1 << bit) != 0 {
            msg ^= divisor << (bit - 5);
        }
    }
    msg & 0b11111
}

/// Constellation index whose Gray label equals `bits`, by search.
pub fn gray_index(bits: u8) -> u8 {
    (0..8u8).find(|&k| k ^ (k >> 1) == bits).unwrap()
}

/// The seven transmitted indices for a 16-bit data word.
pub fn codeword(data: u16) -> [u8; 7] {
    let block = ((data as u32) << 5) | crc5(data);
    let mut out = [0; 7];
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = gray_index(((block >> (18 - 3 * i)) & 0b111) as u8);
    }
    out
}

pub fn all_codewords() -> Vec<[u8; 7]> {
    (0..=u16::MAX).map(codeword).collect()
}

pub fn point(index: u8) -> Complex64 {
    Complex64::from_polar(1.0, index as f64 * PI / 4.0)
}

/// Best global phase in `[-hw, hw]` for the sum `Σ cos(θ - δ) = |s| cos(arg s - δ)`.
fn best_metric(s: Complex64, hw: f64) -> f64 {
    let theta = s.arg();
    if theta.abs() <= hw {
        s.norm()
    } else {
        s.norm() * (theta - hw).cos().max((theta + hw).cos())
    }
}

pub struct MlResult {
    pub data: u16,
    pub confidence: f64,
    pub runner_up: f64,
}

/// Exhaustive maximum-likelihood block decision over all codewords and all
/// phase offsets within `±hw`.
pub fn ml_decode(softs: &[Complex64], codewords: &[[u8; 7]], hw: f64) -> MlResult {
    let units: Vec<Complex64> = softs.iter().map(|z| z / z.norm()).collect();
    let conj_points: Vec<Complex64> = (0..8).map(|k| point(k).conj()).collect();
    let (mut best, mut second, mut arg) = (f64::MIN, f64::MIN, 0u16);
    for (d, cw) in codewords.iter().enumerate() {
        let mut s = Complex64::new(0.0, 0.0);
        for (u, &k) in units.iter().zip(cw) {
            s += u * conj_points[k as usize];
        }
        let m = best_metric(s, hw) / 7.0;
        if m > best {
            second = best;
            best = m;
            arg = d as u16;
        } else if m > second {
            second = m;
        }
    }
    MlResult {
        data: arg,
        confidence: best,
        runner_up: second,
    }
}

/// Seven noisy, globally rotated soft values for `data`.
pub fn noisy_block<R: Rng>(rng: &mut R, data: u16, rotation: f64, sigma: f64) -> Vec<Complex64> {
    let noise = Normal::new(0.0, sigma).unwrap();
    codeword(data)
        .iter()
        .map(|&k| {
            0.4 * point(k) * Complex64::from_polar(1.0, rotation)
                + Complex64::new(noise.sample(rng), noise.sample(rng))
        })
        .collect()
}

/// Straightforward per-symbol scoring: nearest of the eight points by
/// Euclidean distance after removing the tracked phase.
pub fn quality(sent: &[u8], values: &[Complex64], track: &[f64]) -> f64 {
    let mut score = 0.0;
    for ((&s, &v), &t) in sent.iter().zip(values).zip(track) {
        if v.norm() == 0.0 || !v.norm().is_finite() {
            continue;
        }
        let u = v * Complex64::from_polar(1.0, -t) / v.norm();
        let decided = (0..8u8)
            .min_by(|&a, &b| (u - point(a)).norm().total_cmp(&(u - point(b)).norm()))
            .unwrap();
        let diff = (decided + 8 - s) % 8;
        score += match diff {
            0 => 1.0,
            1 | 7 => 0.5,
            _ => 0.0,
        };
    }
    score / sent.len() as f64
}
