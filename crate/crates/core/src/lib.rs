//! Near-ultrasound 8-PSK acoustic modem.
//!
//! Transmit path: [`frame::build_frame`] → [`modulator::modulate`] → WAV.
//! Receive path: [`demodulator::mix_to_baseband`] → [`demodulator::detect_preamble`]
//! → [`demodulator::sample_symbols`] → [`decoder::decode_frame`], wrapped up
//! by [`receiver::receive`]. [`channel`] simulates the acoustic link and
//! [`evaluation`] scores transmissions and runs parameter sweeps.

pub mod channel;
pub mod config;
pub mod constellation;
pub mod crc;
pub mod decoder;
pub mod demodulator;
pub mod error;
pub mod evaluation;
pub mod frame;
pub mod kv;
pub mod modulator;
pub mod receiver;
pub mod wav;

pub use channel::{apply_channel, resample, ChannelProfile, Curve, Jammer};
pub use config::{ModemConfig, MAX_PAYLOAD_BYTES};
pub use decoder::{decode_block, decode_frame, BlockDecodeResult, FrameDecodeResult};
pub use demodulator::{BasebandSequence, SoftSymbol, StreamingDemodulator, SyncResult};
pub use error::{ModemError, Result};
pub use evaluation::{
    calibrate, run_sweep, run_trial, transmission_quality, QualityReport, SymbolQuality,
};
pub use frame::{build_frame, Frame};
pub use modulator::{modulate, PcmBuffer};
pub use receiver::{receive, ReceiveOptions, Reception};
