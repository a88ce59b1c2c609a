//! Block-wise CRC decoding over soft symbols with carrier-phase feed-forward.
//!
//! Each 7-symbol block is decided jointly with a small phase correction: the
//! block is derotated over a grid of candidate phases, hard-decided and
//! CRC-checked, and the best passing candidate wins. Its phase estimate is
//! accumulated and applied to the next block, so slow carrier-phase drift is
//! followed across the frame.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::config::{ModemConfig, MAX_PAYLOAD_BYTES};
use crate::constellation::{nearest_index, neighbour, phase_of, wrap_phase};
use crate::demodulator::SoftSymbol;
use crate::error::{ModemError, Result};
use crate::frame::{data_block_count, groups_to_payload, symbols_to_block};

/// Nearest constellation index to `value` after removing `accumulated_phase`,
/// with `cos` of the remaining angular error.
pub fn hard_decide(value: Complex64, accumulated_phase: f64) -> Result<(u8, f64)> {
    let mag = value.norm();
    if !(mag > 0.0 && mag.is_finite()) {
        return Err(ModemError::ZeroMagnitude);
    }
    let angle = value.arg() - accumulated_phase;
    let index = nearest_index(angle);
    Ok((index, wrap_phase(angle - phase_of(index)).cos()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockDecodeResult {
    pub data_bits: u32,
    /// Estimated carrier-phase offset of this block relative to the phase it
    /// was decoded against.
    pub phase_correction_rad: f64,
    pub flips_used: usize,
    pub confidence: f64,
    /// Constellation indices of the accepted codeword.
    pub indices: Vec<u8>,
}

/// No candidate passed the CRC within the flip budget.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockError {
    /// Data bits of the plain hard decision at zero correction.
    pub best_effort_bits: u32,
    pub indices: Vec<u8>,
}

/// Candidate phase corrections: `steps` cell midpoints spanning
/// `[-halfwidth, halfwidth]`. An odd count includes zero.
pub fn phase_grid(config: &ModemConfig) -> Vec<f64> {
    let hw = config.phase_search_halfwidth_rad;
    let n = config.phase_search_steps;
    (0..n)
        .map(|i| -hw + (2 * i + 1) as f64 * hw / n as f64)
        .collect()
}

pub fn grid_step(config: &ModemConfig) -> f64 {
    2.0 * config.phase_search_halfwidth_rad / config.phase_search_steps as f64
}

struct Candidate {
    delta: f64,
    flips: usize,
    confidence: f64,
    residual: f64,
    indices: Vec<u8>,
}

impl Candidate {
    fn better_than(&self, other: &Candidate) -> bool {
        const EPS: f64 = 1e-12;
        if (self.confidence - other.confidence).abs() > EPS {
            return self.confidence > other.confidence;
        }
        if (self.delta.abs() - other.delta.abs()).abs() > EPS {
            return self.delta.abs() < other.delta.abs();
        }
        self.flips < other.flips
    }
}

fn score(angles: &[f64], indices: &[u8]) -> (f64, f64) {
    let (mut conf, mut resid) = (0.0, 0.0);
    for (&a, &i) in angles.iter().zip(indices) {
        let err = wrap_phase(a - phase_of(i));
        conf += err.cos();
        resid += err;
    }
    let n = angles.len() as f64;
    (conf / n, resid / n)
}

pub fn decode_block(
    softs: &[SoftSymbol],
    accumulated_phase: f64,
    config: &ModemConfig,
) -> Result<BlockDecodeResult, BlockError> {
    assert_eq!(
        softs.len(),
        config.symbols_per_block(),
        "decode_block needs exactly one block of symbols"
    );
    let crc = config.crc();
    let data_bits = config.block_data_bits;
    let grid = phase_grid(config);
    let raw: Vec<f64> = softs
        .iter()
        .map(|s| s.value.arg() - accumulated_phase)
        .collect();

    let mut best: Option<Candidate> = None;
    let offer = |best: &mut Option<Candidate>, c: Candidate| {
        if best.as_ref().is_none_or(|b| c.better_than(b)) {
            *best = Some(c);
        }
    };

    let decided: Vec<(f64, Vec<f64>, Vec<u8>)> = grid
        .iter()
        .map(|&delta| {
            let angles: Vec<f64> = raw.iter().map(|a| a - delta).collect();
            let indices: Vec<u8> = angles.iter().map(|&a| nearest_index(a)).collect();
            (delta, angles, indices)
        })
        .collect();

    for (delta, angles, indices) in &decided {
        if crc.verify(symbols_to_block(indices), data_bits) {
            let (confidence, residual) = score(angles, indices);
            offer(
                &mut best,
                Candidate {
                    delta: *delta,
                    flips: 0,
                    confidence,
                    residual,
                    indices: indices.clone(),
                },
            );
        }
    }

    if best.is_none() && config.max_symbol_flips > 0 {
        for (delta, angles, indices) in &decided {
            // Least reliable symbols first; each may move to its runner-up neighbour.
            let mut order: Vec<usize> = (0..indices.len()).collect();
            // Errors equal to within rounding keep slot order.
            let err_key = |i: usize| {
                (wrap_phase(angles[i] - phase_of(indices[i])).abs() * 1e9).round() as i64
            };
            order.sort_by_key(|&i| (std::cmp::Reverse(err_key(i)), i));
            let weakest = &order[..config.max_symbol_flips.min(order.len())];
            for mask in 1u32..(1 << weakest.len()) {
                let mut flipped = indices.clone();
                for (bit, &pos) in weakest.iter().enumerate() {
                    if mask & (1 << bit) != 0 {
                        let err = wrap_phase(angles[pos] - phase_of(indices[pos]));
                        flipped[pos] = neighbour(indices[pos], if err < 0.0 { -1 } else { 1 });
                    }
                }
                if crc.verify(symbols_to_block(&flipped), data_bits) {
                    let (confidence, residual) = score(angles, &flipped);
                    offer(
                        &mut best,
                        Candidate {
                            delta: *delta,
                            flips: mask.count_ones() as usize,
                            confidence,
                            residual,
                            indices: flipped,
                        },
                    );
                }
            }
        }
    }

    match best {
        Some(c) => {
            let limit = config.phase_search_halfwidth_rad + PI / 16.0;
            Ok(BlockDecodeResult {
                data_bits: symbols_to_block(&c.indices) >> config.block_crc_bits,
                phase_correction_rad: (c.delta + c.residual).clamp(-limit, limit),
                flips_used: c.flips,
                confidence: c.confidence,
                indices: c.indices,
            })
        }
        None => {
            let indices: Vec<u8> = raw.iter().map(|&a| nearest_index(a)).collect();
            Err(BlockError {
                best_effort_bits: symbols_to_block(&indices) >> config.block_crc_bits,
                indices,
            })
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameDecodeResult {
    pub payload: Vec<u8>,
    pub blocks_failed: usize,
    /// Accumulated phase after each block (header first).
    pub cumulative_phase_track: Vec<f64>,
    /// Phase each block was decoded against (header first).
    pub block_phases: Vec<f64>,
    pub flips_used: usize,
    /// Per-block outcome, header first.
    pub blocks: Vec<Result<BlockDecodeResult, BlockError>>,
}

impl FrameDecodeResult {
    /// Accumulated phase applied to every coded symbol, in slot order.
    pub fn symbol_phases(&self, symbols_per_block: usize) -> Vec<f64> {
        self.block_phases
            .iter()
            .flat_map(|&p| std::iter::repeat_n(p, symbols_per_block))
            .collect()
    }

    pub fn header_length(&self) -> usize {
        self.payload.len()
    }
}

pub fn decode_frame(softs: &[SoftSymbol], config: &ModemConfig) -> Result<FrameDecodeResult> {
    decode_frame_with(softs, config, true)
}

/// Decode header and data blocks in order. With `phase_tracking` off every
/// block is decoded against zero phase, as in the untracked experiments.
pub fn decode_frame_with(
    softs: &[SoftSymbol],
    config: &ModemConfig,
    phase_tracking: bool,
) -> Result<FrameDecodeResult> {
    let per_block = config.symbols_per_block();
    if softs.len() < per_block {
        return Err(ModemError::TruncatedFrame {
            expected: per_block,
            available: softs.len(),
        });
    }
    let mut accumulated = 0.0;
    let header = decode_block(&softs[..per_block], accumulated, config)
        .map_err(|_| ModemError::HeaderError)?;
    let len = header.data_bits as usize;
    if len > MAX_PAYLOAD_BYTES {
        return Err(ModemError::HeaderError);
    }
    let n_data = data_block_count(len);
    let needed = per_block * (1 + n_data);
    if softs.len() < needed {
        return Err(ModemError::TruncatedFrame {
            expected: needed,
            available: softs.len(),
        });
    }

    let mut block_phases = vec![accumulated];
    if phase_tracking {
        accumulated += header.phase_correction_rad;
    }
    let mut track = vec![accumulated];
    let mut flips_used = header.flips_used;
    let mut blocks = vec![Ok(header)];
    let mut groups = Vec::with_capacity(n_data);
    let mut failed = 0;

    for chunk in softs[per_block..needed].chunks_exact(per_block) {
        block_phases.push(accumulated);
        let outcome = decode_block(chunk, accumulated, config);
        match &outcome {
            Ok(block) => {
                groups.push(block.data_bits);
                flips_used += block.flips_used;
                if phase_tracking {
                    accumulated += block.phase_correction_rad;
                }
            }
            Err(e) => {
                groups.push(e.best_effort_bits);
                failed += 1;
            }
        }
        track.push(accumulated);
        blocks.push(outcome);
    }

    Ok(FrameDecodeResult {
        payload: groups_to_payload(&groups, len),
        blocks_failed: failed,
        cumulative_phase_track: track,
        block_phases,
        flips_used,
        blocks,
    })
}
