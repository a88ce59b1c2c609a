//! Mono 16-bit PCM WAV files.

use std::io::{Read, Seek, Write};
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::error::{ModemError, Result};
use crate::modulator::PcmBuffer;

fn wav_spec(sample_rate_hz: u32) -> WavSpec {
    WavSpec {
        channels: 1,
        sample_rate: sample_rate_hz,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    }
}

/// Round half away from zero, then clamp to the i16 range.
pub fn to_i16(sample: f64) -> i16 {
    (sample * 32768.0).round().clamp(-32768.0, 32767.0) as i16
}

pub fn from_i16(sample: i16) -> f64 {
    sample as f64 / 32768.0
}

pub fn write_wav<W: Write + Seek>(writer: W, pcm: &PcmBuffer) -> Result<()> {
    let mut w = WavWriter::new(writer, wav_spec(pcm.sample_rate_hz))?;
    for &s in &pcm.samples {
        w.write_sample(to_i16(s))?;
    }
    w.finalize()?;
    Ok(())
}

pub fn write_wav_file(path: impl AsRef<Path>, pcm: &PcmBuffer) -> Result<()> {
    let mut w = WavWriter::create(path, wav_spec(pcm.sample_rate_hz))?;
    for &s in &pcm.samples {
        w.write_sample(to_i16(s))?;
    }
    w.finalize()?;
    Ok(())
}

pub fn read_wav<R: Read>(reader: R) -> Result<PcmBuffer> {
    let r = WavReader::new(reader)?;
    let s = r.spec();
    if s.channels != 1 || s.bits_per_sample != 16 || s.sample_format != SampleFormat::Int {
        return Err(ModemError::UnsupportedWav(format!(
            "{} channel(s), {}-bit {:?}; expected mono 16-bit integer PCM",
            s.channels, s.bits_per_sample, s.sample_format
        )));
    }
    let samples = r
        .into_samples::<i16>()
        .map(|v| v.map(from_i16))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PcmBuffer::new(samples, s.sample_rate))
}

pub fn read_wav_file(path: impl AsRef<Path>) -> Result<PcmBuffer> {
    read_wav(std::io::BufReader::new(std::fs::File::open(path)?))
}
