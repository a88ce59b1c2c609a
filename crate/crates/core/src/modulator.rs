//! Continuous-phase PSK waveform synthesis.
//!
//! Each symbol period holds `T_s - T_t` samples of pure carrier at the
//! symbol's constellation phase, followed by `T_t` samples at a constant
//! transition frequency that advances the phase onto the next symbol. The
//! waveform therefore never jumps between samples.

use std::f64::consts::PI;

use crate::config::ModemConfig;
use crate::constellation::{phase_of, STEP_RAD};
use crate::error::Result;
use crate::frame::Frame;

#[derive(Clone, Debug, PartialEq)]
pub struct PcmBuffer {
    pub samples: Vec<f64>,
    pub sample_rate_hz: u32,
}

impl PcmBuffer {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Self {
        PcmBuffer {
            samples,
            sample_rate_hz,
        }
    }

    pub fn silence(len: usize, sample_rate_hz: u32) -> Self {
        PcmBuffer::new(vec![0.0; len], sample_rate_hz)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }

    /// Surround the buffer with `before` and `after` samples of silence.
    pub fn padded(&self, before: usize, after: usize) -> PcmBuffer {
        let mut samples = vec![0.0; before];
        samples.extend_from_slice(&self.samples);
        samples.resize(samples.len() + after, 0.0);
        PcmBuffer::new(samples, self.sample_rate_hz)
    }
}

/// Phase offset from the carrier (unwrapped) at every sample.
fn excess_phase(symbols: &[u8], config: &ModemConfig) -> Result<Vec<f64>> {
    config.validate()?;
    let shift = config.transition_wrap_shift()?;
    let period = config.symbol_period_samples;
    let steady = config.steady_samples();
    let tt = config.transition_samples as f64;

    let mut out = Vec::with_capacity(symbols.len() * period);
    // Accumulated phase in whole constellation steps keeps segment starts exact.
    let mut steps: i64 = symbols.first().map_or(0, |&s| s as i64);
    for (k, &sym) in symbols.iter().enumerate() {
        let advance = match symbols.get(k + 1) {
            Some(&next) => config.transition_steps(sym, next, shift) as i64,
            None => 0,
        };
        let base = steps as f64 * STEP_RAD;
        out.extend(std::iter::repeat_n(base, steady));
        let delta = advance as f64 * STEP_RAD;
        out.extend((0..config.transition_samples).map(|j| base + delta * j as f64 / tt));
        steps += advance;
    }
    Ok(out)
}

fn carrier_phase(n: usize, config: &ModemConfig) -> f64 {
    let fs = config.sample_rate_hz as f64;
    2.0 * PI * (config.carrier_freq_hz * n as f64).rem_euclid(fs) / fs
}

/// Instantaneous (unwrapped) phase of every output sample.
pub fn phase_schedule_symbols(symbols: &[u8], config: &ModemConfig) -> Result<Vec<f64>> {
    let omega = 2.0 * PI * config.carrier_freq_hz / config.sample_rate_hz as f64;
    Ok(excess_phase(symbols, config)?
        .into_iter()
        .enumerate()
        .map(|(n, e)| omega * n as f64 + e)
        .collect())
}

pub fn phase_schedule(frame: &Frame, config: &ModemConfig) -> Result<Vec<f64>> {
    phase_schedule_symbols(&frame.symbol_sequence, config)
}

pub fn modulate_symbols(symbols: &[u8], config: &ModemConfig) -> Result<PcmBuffer> {
    let samples = excess_phase(symbols, config)?
        .into_iter()
        .enumerate()
        .map(|(n, e)| config.amplitude * (carrier_phase(n, config) + e).cos())
        .collect();
    Ok(PcmBuffer::new(samples, config.sample_rate_hz))
}

pub fn modulate(frame: &Frame, config: &ModemConfig) -> Result<PcmBuffer> {
    modulate_symbols(&frame.symbol_sequence, config)
}

/// Highest instantaneous frequency the modulator can emit under `config`.
pub fn max_emitted_freq_hz(config: &ModemConfig) -> Result<f64> {
    let shift = config.transition_wrap_shift()?;
    let top = (4 - shift).max(0) as f64;
    Ok(config.carrier_freq_hz + top * config.transition_step_hz())
}

/// Constellation phase of each symbol, for reference.
pub fn symbol_phases(symbols: &[u8]) -> Vec<f64> {
    symbols.iter().map(|&s| phase_of(s)).collect()
}
