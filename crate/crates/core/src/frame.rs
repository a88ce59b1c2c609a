//! Symbol-level frame layout.
//!
//! ```text
//! preamble (P × index 0) | sync | trailer | header block | data blocks ...
//! ```
//!
//! Every block is 16 data bits followed by the CRC bits, sent most
//! significant bit first, three bits per symbol, each group Gray-mapped onto
//! a constellation index. The header block carries the payload length in
//! bytes; payload bytes fill 16-bit groups big-endian and the final group is
//! zero-padded.

use crate::config::{ModemConfig, MAX_PAYLOAD_BYTES};
use crate::constellation::{bits_to_symbols, symbols_to_bits};
use crate::error::{ModemError, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub header_block: u32,
    pub data_blocks: Vec<u32>,
    pub symbol_sequence: Vec<u8>,
    pub payload_len: usize,
}

impl Frame {
    /// Symbols from the header block onwards.
    pub fn coded_symbols<'a>(&'a self, config: &ModemConfig) -> &'a [u8] {
        &self.symbol_sequence[config.framing_symbols()..]
    }

    pub fn block_count(&self) -> usize {
        1 + self.data_blocks.len()
    }
}

pub fn data_block_count(payload_len: usize) -> usize {
    (8 * payload_len).div_ceil(16)
}

pub fn frame_symbol_count(payload_len: usize, config: &ModemConfig) -> usize {
    config.framing_symbols() + config.symbols_per_block() * (1 + data_block_count(payload_len))
}

pub fn block_to_symbols(block: u32, config: &ModemConfig) -> Vec<u8> {
    let n = config.block_bits();
    let bits: Vec<bool> = (0..n).rev().map(|i| (block >> i) & 1 == 1).collect();
    bits_to_symbols(&bits)
}

pub fn symbols_to_block(symbols: &[u8]) -> u32 {
    symbols_to_bits(symbols)
        .into_iter()
        .fold(0u32, |acc, b| (acc << 1) | b as u32)
}

pub fn payload_groups(payload: &[u8]) -> Vec<u32> {
    payload
        .chunks(2)
        .map(|pair| ((pair[0] as u32) << 8) | pair.get(1).copied().unwrap_or(0) as u32)
        .collect()
}

/// Reassemble `len` payload bytes from 16-bit groups.
pub fn groups_to_payload(groups: &[u32], len: usize) -> Vec<u8> {
    groups
        .iter()
        .flat_map(|g| [(g >> 8) as u8, *g as u8])
        .take(len)
        .collect()
}

pub fn build_frame(payload: &[u8], config: &ModemConfig) -> Result<Frame> {
    if payload.len() > MAX_PAYLOAD_BYTES {
        return Err(ModemError::PayloadTooLong {
            len: payload.len(),
            max: MAX_PAYLOAD_BYTES,
        });
    }
    let crc = config.crc();
    let data_bits = config.block_data_bits;
    let header_block = crc.encode(payload.len() as u32, data_bits);
    let data_blocks: Vec<u32> = payload_groups(payload)
        .into_iter()
        .map(|g| crc.encode(g, data_bits))
        .collect();

    let mut symbols = Vec::with_capacity(frame_symbol_count(payload.len(), config));
    symbols.extend(std::iter::repeat_n(0u8, config.preamble_symbols));
    symbols.extend_from_slice(&config.sync_pattern);
    symbols.extend_from_slice(&config.trailer_pattern);
    for &block in std::iter::once(&header_block).chain(&data_blocks) {
        symbols.extend(block_to_symbols(block, config));
    }

    Ok(Frame {
        header_block,
        data_blocks,
        symbol_sequence: symbols,
        payload_len: payload.len(),
    })
}

/// Recover the payload from a noiseless symbol sequence (framing included).
pub fn parse_symbols(symbols: &[u8], config: &ModemConfig) -> Result<Vec<u8>> {
    let crc = config.crc();
    let per_block = config.symbols_per_block();
    let coded = symbols
        .get(config.framing_symbols()..)
        .ok_or(ModemError::HeaderError)?;
    let mut blocks = coded.chunks_exact(per_block).map(symbols_to_block);
    let header = blocks.next().ok_or(ModemError::HeaderError)?;
    if !crc.verify(header, config.block_data_bits) {
        return Err(ModemError::HeaderError);
    }
    let len = (header >> config.block_crc_bits) as usize;
    if len > MAX_PAYLOAD_BYTES {
        return Err(ModemError::HeaderError);
    }
    let needed = data_block_count(len);
    let groups: Vec<u32> = blocks
        .take(needed)
        .map(|b| b >> config.block_crc_bits)
        .collect();
    if groups.len() < needed {
        return Err(ModemError::TruncatedFrame {
            expected: frame_symbol_count(len, config),
            available: symbols.len(),
        });
    }
    Ok(groups_to_payload(&groups, len))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Layout arithmetic: framing + 7 symbols per 21-bit block.
    fn expected_len(payload_len: usize) -> usize {
        let bits = 8 * payload_len;
        let data_blocks = bits / 16 + usize::from(!bits.is_multiple_of(16));
        32 + 8 + 4 + 7 * (1 + data_blocks)
    }

    #[test]
    fn hello_world_symbol_count() {
        let cfg = ModemConfig::default();
        let frame = build_frame(b"Hello, world!", &cfg).unwrap();
        assert_eq!(expected_len(13), 100);
        assert_eq!(frame.symbol_sequence.len(), 100);
        assert_eq!(frame.data_blocks.len(), 7);
    }

    #[test]
    fn empty_payload() {
        let cfg = ModemConfig::default();
        let frame = build_frame(b"", &cfg).unwrap();
        assert_eq!(frame.symbol_sequence.len(), 51);
        assert_eq!(frame.header_block >> 5, 0);
        assert!(frame.data_blocks.is_empty());
        assert_eq!(parse_symbols(&frame.symbol_sequence, &cfg).unwrap(), b"");
    }

    #[test]
    fn two_bytes_fill_one_block() {
        let cfg = ModemConfig::default();
        let frame = build_frame(&[0xAB, 0xCD], &cfg).unwrap();
        assert_eq!(frame.data_blocks.len(), 1);
        assert_eq!(frame.data_blocks[0] >> 5, 0xABCD);
    }

    #[test]
    fn oversize_payload_rejected() {
        let cfg = ModemConfig::default();
        assert!(build_frame(&vec![0; MAX_PAYLOAD_BYTES], &cfg).is_ok());
        assert!(matches!(
            build_frame(&vec![0; MAX_PAYLOAD_BYTES + 1], &cfg),
            Err(ModemError::PayloadTooLong { .. })
        ));
    }

    #[test]
    fn wire_layout_is_msb_first_gray() {
        let cfg = ModemConfig::default();
        let frame = build_frame(b"", &cfg).unwrap();
        assert_eq!(&frame.symbol_sequence[..32], &[0u8; 32]);
        assert_eq!(&frame.symbol_sequence[32..40], &[0, 4, 2, 6, 1, 5, 3, 7]);
        assert_eq!(&frame.symbol_sequence[40..44], &[0, 0, 4, 4]);
        // Header for length 0: 16 zero bits then crc5(0) = 0b00001.
        // Groups 000 ×6 then 001 -> indices 0 ×6 then gray^-1(001) = 1.
        assert_eq!(&frame.symbol_sequence[44..], &[0, 0, 0, 0, 0, 0, 1]);
    }

    #[test]
    fn every_block_verifies() {
        let cfg = ModemConfig::default();
        let frame = build_frame(b"Hello, world!", &cfg).unwrap();
        let crc = cfg.crc();
        for chunk in frame.coded_symbols(&cfg).chunks(7) {
            assert!(crc.verify(symbols_to_block(chunk), 16));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn frame_round_trip(payload in proptest::collection::vec(any::<u8>(), 0..200)) {
            let cfg = ModemConfig::default();
            let frame = build_frame(&payload, &cfg).unwrap();
            prop_assert_eq!(frame.symbol_sequence.len(), expected_len(payload.len()));
            prop_assert_eq!(parse_symbols(&frame.symbol_sequence, &cfg).unwrap(), payload);
        }
    }
}
