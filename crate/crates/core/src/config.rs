use std::f64::consts::PI;
use std::path::Path;

use crate::constellation::{BITS_PER_SYMBOL, POINTS};
use crate::crc::Crc;
use crate::error::{ModemError, Result};
use crate::kv;

pub const MAX_PAYLOAD_BYTES: usize = 8192;

/// Physical-layer and codec parameters shared by transmitter and receiver.
#[derive(Clone, Debug, PartialEq)]
pub struct ModemConfig {
    pub sample_rate_hz: u32,
    pub carrier_freq_hz: f64,
    /// Full symbol period, steady carrier plus transition.
    pub symbol_period_samples: usize,
    /// Length of the transition segment at the end of each period.
    pub transition_samples: usize,
    pub amplitude: f64,
    pub preamble_symbols: usize,
    pub sync_pattern: Vec<u8>,
    pub trailer_pattern: Vec<u8>,
    pub crc_poly: u32,
    pub crc_init: u32,
    pub block_data_bits: u32,
    pub block_crc_bits: u32,
    pub phase_search_halfwidth_rad: f64,
    pub phase_search_steps: usize,
    pub max_symbol_flips: usize,
    /// Energy gate threshold as a fraction of the nominal baseband level `amplitude / 2`.
    pub energy_gate_fraction: f64,
    /// Minimum normalised differential correlation against the sync pattern.
    pub sync_correlation_min: f64,
    /// Minimum phase coherence `|Σz| / Σ|z|` across the preamble slots.
    pub preamble_coherence_min: f64,
}

impl Default for ModemConfig {
    fn default() -> Self {
        ModemConfig {
            sample_rate_hz: 48_000,
            carrier_freq_hz: 22_500.0,
            symbol_period_samples: 160,
            transition_samples: 32,
            amplitude: 0.8,
            preamble_symbols: 32,
            sync_pattern: vec![0, 4, 2, 6, 1, 5, 3, 7],
            trailer_pattern: vec![0, 0, 4, 4],
            crc_poly: Crc::DEFAULT.poly,
            crc_init: Crc::DEFAULT.init,
            block_data_bits: 16,
            block_crc_bits: 5,
            phase_search_halfwidth_rad: PI / 8.0,
            phase_search_steps: 17,
            max_symbol_flips: 2,
            energy_gate_fraction: 0.02,
            sync_correlation_min: 0.8,
            preamble_coherence_min: 0.7,
        }
    }
}

fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(ModemError::ConfigInvalid(msg.into()))
}

impl ModemConfig {
    pub fn validate(&self) -> Result<()> {
        let nyquist = self.sample_rate_hz as f64 / 2.0;
        if self.sample_rate_hz == 0 {
            return invalid("sample rate must be positive");
        }
        if !(20_000.0..=24_000.0).contains(&self.carrier_freq_hz) {
            return invalid(format!(
                "carrier {} Hz outside the 20-24 kHz band",
                self.carrier_freq_hz
            ));
        }
        if self.carrier_freq_hz >= nyquist {
            return invalid(format!(
                "carrier {} Hz not below Nyquist {nyquist} Hz",
                self.carrier_freq_hz
            ));
        }
        if self.transition_samples == 0 || self.transition_samples >= self.symbol_period_samples {
            return invalid("need 0 < transition_samples < symbol_period_samples");
        }
        if !(self.amplitude > 0.0 && self.amplitude <= 1.0) {
            return invalid("amplitude must lie in (0, 1]");
        }
        if self.preamble_symbols < 2 {
            return invalid("preamble needs at least 2 symbols");
        }
        if self.sync_pattern.len() < 2 || self.trailer_pattern.is_empty() {
            return invalid("sync pattern needs 2+ symbols and trailer 1+");
        }
        if self
            .sync_pattern
            .iter()
            .chain(&self.trailer_pattern)
            .any(|&s| s as usize >= POINTS)
        {
            return invalid("pattern entries must be constellation indices 0..7");
        }
        if self.block_data_bits != 16 {
            return invalid("block_data_bits must be 16");
        }
        if !(1..=8).contains(&self.block_crc_bits)
            || !self.block_bits().is_multiple_of(BITS_PER_SYMBOL as u32)
        {
            return invalid("block_data_bits + block_crc_bits must be a multiple of 3");
        }
        let mask = (1u32 << self.block_crc_bits) - 1;
        if self.crc_poly & !mask != 0 || self.crc_init & !mask != 0 || self.crc_poly & 1 == 0 {
            return invalid("crc_poly must be odd and crc_poly/crc_init must fit the CRC width");
        }
        if !(self.phase_search_halfwidth_rad >= 0.0 && self.phase_search_halfwidth_rad <= PI / 8.0)
        {
            return invalid("phase_search_halfwidth_rad must lie in [0, π/8]");
        }
        if self.phase_search_steps == 0 {
            return invalid("phase_search_steps must be at least 1");
        }
        for (name, v) in [
            ("energy_gate_fraction", self.energy_gate_fraction),
            ("sync_correlation_min", self.sync_correlation_min),
            ("preamble_coherence_min", self.preamble_coherence_min),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return invalid(format!("{name} must lie in [0, 1]"));
            }
        }
        self.transition_wrap_shift()?;
        Ok(())
    }

    pub fn crc(&self) -> Crc {
        Crc {
            poly: self.crc_poly,
            init: self.crc_init,
            width: self.block_crc_bits,
        }
    }

    pub fn block_bits(&self) -> u32 {
        self.block_data_bits + self.block_crc_bits
    }

    pub fn symbols_per_block(&self) -> usize {
        self.block_bits() as usize / BITS_PER_SYMBOL
    }

    /// Steady-carrier samples per period; also the demodulator window length.
    pub fn steady_samples(&self) -> usize {
        self.symbol_period_samples - self.transition_samples
    }

    /// Symbols preceding the header block: preamble, sync and trailer.
    pub fn framing_symbols(&self) -> usize {
        self.preamble_symbols + self.sync_pattern.len() + self.trailer_pattern.len()
    }

    pub fn symbol_rate(&self) -> f64 {
        self.sample_rate_hz as f64 / self.symbol_period_samples as f64
    }

    pub fn raw_bit_rate(&self) -> f64 {
        self.symbol_rate() * BITS_PER_SYMBOL as f64
    }

    pub fn effective_bit_rate(&self) -> f64 {
        self.raw_bit_rate() * self.block_data_bits as f64 / self.block_bits() as f64
    }

    /// Frequency offset per constellation step of phase advance spread over
    /// the transition segment.
    pub fn transition_step_hz(&self) -> f64 {
        self.sample_rate_hz as f64 / (POINTS as f64 * self.transition_samples as f64)
    }

    /// Downward shift (in constellation steps) of the phase-advance window
    /// `(-π, π]` used for transitions. Zero unless the carrier sits so close
    /// to Nyquist that a `+π` advance would cross it.
    pub fn transition_wrap_shift(&self) -> Result<i32> {
        let nyquist = self.sample_rate_hz as f64 / 2.0;
        let step = self.transition_step_hz();
        let fits = |shift: i32| {
            let hi = self.carrier_freq_hz + (4 - shift) as f64 * step;
            let lo = self.carrier_freq_hz + (-3 - shift) as f64 * step;
            hi < nyquist && lo > 0.0
        };
        for magnitude in 0..POINTS as i32 {
            for shift in [magnitude, -magnitude] {
                if fits(shift) {
                    return Ok(shift);
                }
            }
        }
        invalid(format!(
            "transition frequencies for a {}-sample transition at {} Hz cannot stay below Nyquist",
            self.transition_samples, self.carrier_freq_hz
        ))
    }

    /// Constellation-step advance from `from` to `to` within the configured
    /// wrap window.
    pub fn transition_steps(&self, from: u8, to: u8, shift: i32) -> i32 {
        let d = (to as i32 - from as i32).rem_euclid(POINTS as i32);
        let hi = 4 - shift;
        if d > hi {
            d - POINTS as i32
        } else if d <= hi - POINTS as i32 {
            d + POINTS as i32
        } else {
            d
        }
    }

    pub fn from_kv_str(text: &str) -> Result<Self> {
        let mut cfg = ModemConfig::default();
        cfg.apply_kv(text)?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_kv_str(&std::fs::read_to_string(path)?)
    }

    /// Overlay the keys present in `text` onto this config.
    pub fn apply_kv(&mut self, text: &str) -> Result<()> {
        for e in kv::parse(text)? {
            match e.key.as_str() {
                "sample_rate_hz" => self.sample_rate_hz = e.u64()? as u32,
                "carrier_freq_hz" => self.carrier_freq_hz = e.f64()?,
                "symbol_period_samples" => self.symbol_period_samples = e.usize()?,
                "transition_samples" => self.transition_samples = e.usize()?,
                "amplitude" => self.amplitude = e.f64()?,
                "preamble_symbols" => self.preamble_symbols = e.usize()?,
                "sync_pattern" => self.sync_pattern = e.indices()?,
                "trailer_pattern" => self.trailer_pattern = e.indices()?,
                "crc_poly" => self.crc_poly = e.u32_radix()?,
                "crc_init" => self.crc_init = e.u32_radix()?,
                "block_data_bits" => self.block_data_bits = e.u32_radix()?,
                "block_crc_bits" => self.block_crc_bits = e.u32_radix()?,
                "phase_search_halfwidth_rad" => self.phase_search_halfwidth_rad = e.f64()?,
                "phase_search_steps" => self.phase_search_steps = e.usize()?,
                "max_symbol_flips" => self.max_symbol_flips = e.usize()?,
                "energy_gate_fraction" => self.energy_gate_fraction = e.f64()?,
                "sync_correlation_min" => self.sync_correlation_min = e.f64()?,
                "preamble_coherence_min" => self.preamble_coherence_min = e.f64()?,
                other => {
                    return Err(ModemError::Parse {
                        line: e.line,
                        message: format!("unknown config key `{other}`"),
                    })
                }
            }
        }
        Ok(())
    }
}
