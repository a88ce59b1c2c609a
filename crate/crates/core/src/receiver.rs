//! One-shot receive pipeline from PCM to payload.

use crate::config::ModemConfig;
use crate::decoder::{decode_block, decode_frame_with, FrameDecodeResult};
use crate::demodulator::{
    detect_preamble, mix_to_baseband, sample_symbols, SoftSymbol, SyncResult,
};
use crate::error::{ModemError, Result};
use crate::frame::data_block_count;
use crate::modulator::PcmBuffer;
use crate::MAX_PAYLOAD_BYTES;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReceiveOptions {
    /// Feed each block's phase correction forward to the next block.
    pub phase_tracking: bool,
}

impl Default for ReceiveOptions {
    fn default() -> Self {
        ReceiveOptions {
            phase_tracking: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Reception {
    pub sync: SyncResult,
    /// Header and data symbols, in slot order.
    pub softs: Vec<SoftSymbol>,
    pub frame: FrameDecodeResult,
}

impl Reception {
    pub fn payload(&self) -> &[u8] {
        &self.frame.payload
    }
}

pub fn receive(pcm: &PcmBuffer, config: &ModemConfig, opts: ReceiveOptions) -> Result<Reception> {
    config.validate()?;
    let bb = mix_to_baseband(pcm, config)?;
    let sync = detect_preamble(&bb, config).ok_or(ModemError::NoSync)?;
    let per_block = config.symbols_per_block();

    let header_softs =
        sample_symbols(&bb, &sync, per_block, config).map_err(|_| ModemError::HeaderError)?;
    let header = decode_block(&header_softs, 0.0, config).map_err(|_| ModemError::HeaderError)?;
    let len = header.data_bits as usize;
    if len > MAX_PAYLOAD_BYTES {
        return Err(ModemError::HeaderError);
    }
    let needed = per_block * (1 + data_block_count(len));
    let softs =
        sample_symbols(&bb, &sync, needed, config).map_err(|_| ModemError::TruncatedFrame {
            expected: config.framing_symbols() + needed,
            available: (bb.samples.len().saturating_sub(sync.frame_start_sample))
                / config.symbol_period_samples,
        })?;
    let frame = decode_frame_with(&softs, config, opts.phase_tracking)?;
    Ok(Reception { sync, softs, frame })
}
