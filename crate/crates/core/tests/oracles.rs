mod support;

use std::f64::consts::PI;

use batnet::constellation::phase_of;
use batnet::crc::Crc;
use batnet::decoder::decode_block;
use batnet::evaluation::transmission_quality;
use batnet::frame::block_to_symbols;
use batnet::{ModemConfig, SoftSymbol};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn crc_oracle_matches_golden_values() {
    assert_eq!(support::crc5(0x0000), 0b00001);
    assert_eq!(support::crc5(0xFFFF), 0b01010);
    assert_eq!(support::crc5(0x1234), 0b10000);
    assert_eq!(support::crc5(0x8000), 0b01101);
}

#[test]
fn codewords_match_frame_encoder() {
    let cfg = ModemConfig::default();
    let crc = Crc::DEFAULT;
    for data in (0..=u16::MAX).step_by(97) {
        let block = crc.encode(data as u32, 16);
        assert_eq!(block_to_symbols(block, &cfg), support::codeword(data));
    }
}

#[test]
fn quality_metric_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..1000 {
        let n = rng.gen_range(1..120);
        let sent: Vec<u8> = (0..n).map(|_| rng.gen_range(0..8)).collect();
        let track: Vec<f64> = (0..n).map(|_| rng.gen_range(-PI..PI)).collect();
        let softs: Vec<SoftSymbol> = sent
            .iter()
            .zip(&track)
            .enumerate()
            .map(|(k, (&s, &t))| {
                let mag = if rng.gen_bool(0.02) {
                    0.0
                } else {
                    rng.gen_range(0.01..1.0)
                };
                let err = rng.gen_range(-PI..PI) * rng.gen::<f64>().powi(3);
                SoftSymbol {
                    value: Complex64::from_polar(mag, phase_of(s) + t + err),
                    slot_index: k,
                }
            })
            .collect();
        let values: Vec<Complex64> = softs.iter().map(|s| s.value).collect();
        let got = transmission_quality(&sent, &softs, &track).unwrap();
        let want = support::quality(&sent, &values, &track);
        assert!(
            (got.quality - want).abs() < 1e-12,
            "case {case}: {} vs {want}",
            got.quality
        );
        assert!((0.0..=1.0).contains(&got.quality));
        assert_eq!(got.quality == 1.0, got.correct == n);
    }
}

#[test]
fn decode_block_agrees_with_ml_oracle() {
    let cfg = ModemConfig::default();
    let codewords = support::all_codewords();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let (mut compared, mut decoded) = (0, 0);
    for case in 0..500 {
        let data: u16 = rng.gen();
        let rotation = rng.gen_range(-0.3..0.3);
        let sigma = [0.02, 0.04, 0.07, 0.12][case % 4];
        let values = support::noisy_block(&mut rng, data, rotation, sigma);
        let softs: Vec<SoftSymbol> = values
            .iter()
            .enumerate()
            .map(|(k, &value)| SoftSymbol {
                value,
                slot_index: k,
            })
            .collect();
        let ml = support::ml_decode(&values, &codewords, cfg.phase_search_halfwidth_rad);
        if let Ok(r) = decode_block(&softs, 0.0, &cfg) {
            decoded += 1;
            if ml.confidence - ml.runner_up > 0.05 {
                compared += 1;
                assert_eq!(r.data_bits as u16, ml.data, "case {case}");
            }
        }
    }
    assert!(decoded >= 400, "only {decoded} blocks decoded");
    assert!(compared >= 150, "only {compared} cases compared");
}
