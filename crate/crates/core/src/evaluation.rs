//! Transmission quality, end-to-end trials, parameter sweeps and carrier
//! calibration.
//!
//! Quality scores each header or data symbol 1 when decided correctly, 0.5
//! when it lands on a neighbouring constellation point and 0 otherwise,
//! averaged over the frame. A frame whose preamble is never found scores 0.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{apply_channel, ChannelProfile};
use crate::config::ModemConfig;
use crate::constellation::ring_distance;
use crate::decoder::{decode_frame_with, hard_decide};
use crate::demodulator::{detect_preamble, mix_to_baseband, sample_symbols, SoftSymbol};
use crate::error::{ModemError, Result};
use crate::frame::build_frame;
use crate::modulator::modulate;

/// Symbol-level scores of one received frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymbolQuality {
    pub quality: f64,
    pub total: usize,
    pub correct: usize,
    pub adjacent: usize,
}

impl SymbolQuality {
    fn from_counts(total: usize, correct: usize, adjacent: usize) -> Self {
        let quality = if total == 0 {
            0.0
        } else {
            (correct as f64 + 0.5 * adjacent as f64) / total as f64
        };
        SymbolQuality {
            quality,
            total,
            correct,
            adjacent,
        }
    }
}

/// Score received symbols against the sent indices, deciding each one
/// against its tracked phase.
pub fn transmission_quality(
    sent: &[u8],
    received: &[SoftSymbol],
    phase_track: &[f64],
) -> Result<SymbolQuality> {
    for len in [received.len(), phase_track.len()] {
        if len != sent.len() {
            return Err(ModemError::LengthMismatch {
                left: sent.len(),
                right: len,
            });
        }
    }
    let (mut correct, mut adjacent) = (0, 0);
    for ((&s, soft), &phase) in sent.iter().zip(received).zip(phase_track) {
        if let Ok((index, _)) = hard_decide(soft.value, phase) {
            match ring_distance(index, s).abs() {
                0 => correct += 1,
                1 => adjacent += 1,
                _ => {}
            }
        }
    }
    Ok(SymbolQuality::from_counts(sent.len(), correct, adjacent))
}

#[derive(Clone, Debug, PartialEq)]
pub struct QualityReport {
    pub quality: f64,
    pub symbols_total: usize,
    pub symbols_correct: usize,
    pub symbols_adjacent: usize,
    pub bit_errors: usize,
    pub blocks_failed: usize,
    pub flips_used: usize,
    pub sync_found: bool,
    pub payload_ok: bool,
    pub seed: u64,
    pub config_snapshot: ModemConfig,
    pub profile_snapshot: ChannelProfile,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrialOptions {
    pub phase_tracking: bool,
    pub payload_len: usize,
    /// Silence before and after the frame, in samples.
    pub lead_in: usize,
    pub tail: usize,
}

impl Default for TrialOptions {
    fn default() -> Self {
        TrialOptions {
            phase_tracking: true,
            payload_len: 64,
            lead_in: 2400,
            tail: 2400,
        }
    }
}

pub fn trial_payload(seed: u64, len: usize) -> Vec<u8> {
    let mut payload = vec![0; len];
    ChaCha8Rng::seed_from_u64(seed).fill_bytes(&mut payload);
    payload
}

fn bit_errors(sent: &[u8], got: &[u8]) -> usize {
    sent.iter()
        .enumerate()
        .map(|(i, &b)| match got.get(i) {
            Some(&g) => (b ^ g).count_ones() as usize,
            None => 8,
        })
        .sum()
}

/// Transmit a seeded random payload through `profile` and score the result.
/// The profile's noise seed is replaced by `seed`.
pub fn run_trial(
    config: &ModemConfig,
    profile: &ChannelProfile,
    seed: u64,
    opts: TrialOptions,
) -> Result<QualityReport> {
    let profile = ChannelProfile {
        rng_seed: seed,
        ..profile.clone()
    };
    let payload = trial_payload(seed, opts.payload_len);
    let frame = build_frame(&payload, config)?;
    let pcm = modulate(&frame, config)?.padded(opts.lead_in, opts.tail);
    let rx = apply_channel(&pcm, &profile, config.carrier_freq_hz)?;

    let sent = frame.coded_symbols(config);
    let blocks = frame.block_count();
    let mut report = QualityReport {
        quality: 0.0,
        symbols_total: sent.len(),
        symbols_correct: 0,
        symbols_adjacent: 0,
        bit_errors: 8 * payload.len(),
        blocks_failed: blocks,
        flips_used: 0,
        sync_found: false,
        payload_ok: false,
        seed,
        config_snapshot: config.clone(),
        profile_snapshot: profile,
    };

    let bb = mix_to_baseband(&rx, config)?;
    let Some(sync) = detect_preamble(&bb, config) else {
        return Ok(report);
    };
    report.sync_found = true;
    let Ok(softs) = sample_symbols(&bb, &sync, sent.len(), config) else {
        return Ok(report);
    };

    let per_block = config.symbols_per_block();
    let phases = match decode_frame_with(&softs, config, opts.phase_tracking) {
        Ok(decoded) => {
            report.bit_errors = bit_errors(&payload, &decoded.payload);
            report.payload_ok = decoded.payload == payload;
            report.blocks_failed = decoded.blocks_failed;
            report.flips_used = decoded.flips_used;
            let mut phases = decoded.symbol_phases(per_block);
            let last = phases.last().copied().unwrap_or(0.0);
            phases.resize(sent.len(), last);
            phases
        }
        Err(_) => vec![0.0; sent.len()],
    };
    let q = transmission_quality(sent, &softs, &phases)?;
    report.quality = q.quality;
    report.symbols_correct = q.correct;
    report.symbols_adjacent = q.adjacent;
    Ok(report)
}

/// Swept parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    DistanceM,
    TxAngleDeg,
    SymbolPeriodSamples,
    SnrDb,
    CarrierFreqHz,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::DistanceM => "distance_m",
            Axis::TxAngleDeg => "tx_angle_deg",
            Axis::SymbolPeriodSamples => "symbol_period_samples",
            Axis::SnrDb => "snr_db",
            Axis::CarrierFreqHz => "carrier_freq_hz",
        }
    }

    /// Apply `value` to copies of the base config and profile.
    pub fn apply(
        self,
        config: &ModemConfig,
        profile: &ChannelProfile,
        value: f64,
    ) -> Result<(ModemConfig, ChannelProfile)> {
        let (mut c, mut p) = (config.clone(), profile.clone());
        match self {
            Axis::DistanceM => p.distance_m = value,
            Axis::TxAngleDeg => p.tx_angle_deg = value,
            Axis::SnrDb => p.snr_db = value,
            Axis::CarrierFreqHz => c.carrier_freq_hz = value,
            Axis::SymbolPeriodSamples => {
                if value.fract() != 0.0 || value < 1.0 {
                    return Err(ModemError::ConfigInvalid(format!(
                        "symbol period {value} is not a positive integer"
                    )));
                }
                c.symbol_period_samples = value as usize;
            }
        }
        c.validate()?;
        p.validate()?;
        Ok((c, p))
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = ModemError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "distance_m" | "distance" => Axis::DistanceM,
            "tx_angle_deg" | "angle" | "angle-tx" => Axis::TxAngleDeg,
            "symbol_period_samples" | "symbol-len" => Axis::SymbolPeriodSamples,
            "snr_db" | "snr" => Axis::SnrDb,
            "carrier_freq_hz" | "freq" => Axis::CarrierFreqHz,
            other => return Err(ModemError::UnknownAxis(other.to_string())),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub axis_value: f64,
    pub trial: usize,
    pub report: QualityReport,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct SweepOptions {
    /// Trial `i` of every value uses seed `seed + i`.
    pub seed: u64,
    pub trial: TrialOptions,
}

/// Run `trials` seeded trials per value. Rows come back ordered by value,
/// then trial index.
pub fn run_sweep(
    base_config: &ModemConfig,
    base_profile: &ChannelProfile,
    axis: &str,
    values: &[f64],
    trials: usize,
    opts: SweepOptions,
) -> Result<Vec<SweepRow>> {
    let axis: Axis = axis.parse()?;
    let setups = values
        .iter()
        .map(|&v| axis.apply(base_config, base_profile, v).map(|s| (v, s)))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<_> = setups
        .iter()
        .flat_map(|(v, setup)| (0..trials).map(move |t| (*v, t, setup)))
        .collect();
    jobs.into_par_iter()
        .map(|(v, t, (cfg, profile))| {
            run_trial(cfg, profile, opts.seed + t as u64, opts.trial).map(|report| SweepRow {
                axis_value: v,
                trial: t,
                report,
            })
        })
        .collect()
}

/// Mean quality per distinct axis value, in order of first appearance.
pub fn mean_quality_by_value(rows: &[SweepRow]) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64, usize)> = Vec::new();
    for r in rows {
        match out.iter_mut().find(|(v, _, _)| *v == r.axis_value) {
            Some(e) => {
                e.1 += r.report.quality;
                e.2 += 1;
            }
            None => out.push((r.axis_value, r.report.quality, 1)),
        }
    }
    out.into_iter().map(|(v, s, n)| (v, s / n as f64)).collect()
}

pub const CSV_COLUMNS: [&str; 11] = [
    "trial",
    "seed",
    "quality",
    "symbols_total",
    "symbols_correct",
    "symbols_adjacent",
    "bit_errors",
    "blocks_failed",
    "flips_used",
    "sync_found",
    "payload_ok",
];

/// One header row, then one row per trial.
pub fn write_csv<W: Write>(mut out: W, axis: &str, rows: &[SweepRow]) -> std::io::Result<()> {
    writeln!(out, "{},{}", axis, CSV_COLUMNS.join(","))?;
    for row in rows {
        let r = &row.report;
        writeln!(
            out,
            "{},{},{},{:.6},{},{},{},{},{},{},{},{}",
            row.axis_value,
            row.trial,
            r.seed,
            r.quality,
            r.symbols_total,
            r.symbols_correct,
            r.symbols_adjacent,
            r.bit_errors,
            r.blocks_failed,
            r.flips_used,
            r.sync_found,
            r.payload_ok
        )?;
    }
    Ok(())
}

pub const CALIBRATION_TRIALS: usize = 4;

/// 20.0 to 23.5 kHz in 0.5 kHz steps.
pub fn default_calibration_frequencies() -> Vec<f64> {
    (0..8).map(|i| 20_000.0 + 500.0 * i as f64).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Calibration {
    pub best_freq_hz: f64,
    /// (frequency, mean quality) in input order.
    pub mean_quality: Vec<(f64, f64)>,
    /// No probe found a preamble; `best_freq_hz` is then the first frequency.
    pub all_failed: bool,
}

/// Pick the frequency with the highest mean probe quality, preferring the
/// lowest frequency among ties.
pub fn calibrate<F>(frequencies: &[f64], trials: usize, probe: F) -> Calibration
where
    F: Fn(f64, usize) -> QualityReport + Sync,
{
    assert!(!frequencies.is_empty(), "no frequencies to calibrate");
    let reports: Vec<Vec<QualityReport>> = frequencies
        .par_iter()
        .map(|&f| (0..trials).map(|t| probe(f, t)).collect())
        .collect();
    let mean_quality: Vec<(f64, f64)> = frequencies
        .iter()
        .zip(&reports)
        .map(|(&f, rs)| {
            (
                f,
                rs.iter().map(|r| r.quality).sum::<f64>() / rs.len().max(1) as f64,
            )
        })
        .collect();
    let all_failed = reports.iter().flatten().all(|r| !r.sync_found);
    if all_failed {
        return Calibration {
            best_freq_hz: frequencies[0],
            mean_quality,
            all_failed,
        };
    }
    const TIE: f64 = 1e-12;
    let mut best = mean_quality[0];
    for &(f, q) in &mean_quality[1..] {
        if q > best.1 + TIE || ((q - best.1).abs() <= TIE && f < best.0) {
            best = (f, q);
        }
    }
    Calibration {
        best_freq_hz: best.0,
        mean_quality,
        all_failed,
    }
}

/// Calibrate a simulated link by probing each carrier with seeded trials.
pub fn calibrate_link(
    config: &ModemConfig,
    profile: &ChannelProfile,
    frequencies: &[f64],
    trials: usize,
    opts: SweepOptions,
) -> Result<Calibration> {
    let setups = frequencies
        .iter()
        .map(|&f| Axis::CarrierFreqHz.apply(config, profile, f))
        .collect::<Result<Vec<_>>>()?;
    let probe = |f: f64, t: usize| {
        let i = frequencies
            .iter()
            .position(|&x| x == f)
            .expect("known frequency");
        let (cfg, prof) = &setups[i];
        run_trial(cfg, prof, opts.seed + t as u64, opts.trial).expect("validated setup")
    };
    Ok(calibrate(frequencies, trials, probe))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::phase_of;
    use num_complex::Complex64;

    fn softs(indices: &[u8]) -> Vec<SoftSymbol> {
        indices
            .iter()
            .enumerate()
            .map(|(k, &i)| SoftSymbol {
                value: Complex64::from_polar(0.4, phase_of(i)),
                slot_index: k,
            })
            .collect()
    }

    #[test]
    fn scoring_examples() {
        let sent = [0, 1, 2, 3, 4, 5, 6, 7, 0, 1];
        let zeros = [0.0; 10];
        let q = transmission_quality(&sent, &softs(&sent), &zeros).unwrap();
        assert_eq!(q.quality, 1.0);

        let mut adj = sent;
        adj[4] = 5;
        let q = transmission_quality(&sent, &softs(&adj), &zeros).unwrap();
        assert!((q.quality - 0.95).abs() < 1e-12);
        assert_eq!((q.correct, q.adjacent), (9, 1));

        let mut opp = sent;
        opp[4] = 0;
        let q = transmission_quality(&sent, &softs(&opp), &zeros).unwrap();
        assert!((q.quality - 0.9).abs() < 1e-12);
    }

    #[test]
    fn tracked_phase_is_removed_before_deciding() {
        let sent = [2, 2, 2];
        let rotated: Vec<SoftSymbol> = softs(&[3, 3, 3]);
        let q = transmission_quality(&sent, &rotated, &[std::f64::consts::FRAC_PI_4; 3]).unwrap();
        assert_eq!(q.quality, 1.0);
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(
            transmission_quality(&[0, 1], &softs(&[0]), &[0.0, 0.0]),
            Err(ModemError::LengthMismatch { left: 2, right: 1 })
        ));
        assert!(matches!(
            transmission_quality(&[0], &softs(&[0]), &[]),
            Err(ModemError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn axis_names_and_aliases() {
        for name in [
            "distance_m",
            "tx_angle_deg",
            "symbol_period_samples",
            "snr_db",
            "carrier_freq_hz",
        ] {
            assert_eq!(name.parse::<Axis>().unwrap().name(), name);
        }
        assert_eq!("distance".parse::<Axis>().unwrap(), Axis::DistanceM);
        assert_eq!(
            "symbol-len".parse::<Axis>().unwrap(),
            Axis::SymbolPeriodSamples
        );
        assert!(matches!(
            "height".parse::<Axis>(),
            Err(ModemError::UnknownAxis(_))
        ));
    }

    #[test]
    fn payload_is_seeded() {
        assert_eq!(trial_payload(3, 64), trial_payload(3, 64));
        assert_ne!(trial_payload(3, 64), trial_payload(4, 64));
        assert_eq!(trial_payload(3, 64).len(), 64);
    }

    #[test]
    fn bit_error_count() {
        assert_eq!(bit_errors(&[0xFF, 0x00], &[0xFF, 0x00]), 0);
        assert_eq!(bit_errors(&[0xFF, 0x00], &[0x7F, 0x01]), 2);
        assert_eq!(bit_errors(&[0xFF, 0x00], &[0xFF]), 8);
    }

    fn fake_report(quality: f64, sync_found: bool) -> QualityReport {
        QualityReport {
            quality,
            symbols_total: 0,
            symbols_correct: 0,
            symbols_adjacent: 0,
            bit_errors: 0,
            blocks_failed: 0,
            flips_used: 0,
            sync_found,
            payload_ok: false,
            seed: 0,
            config_snapshot: ModemConfig::default(),
            profile_snapshot: ChannelProfile::default(),
        }
    }

    #[test]
    fn calibration_picks_best_then_lowest() {
        let freqs = default_calibration_frequencies();
        assert_eq!(freqs.len(), 8);
        assert_eq!(freqs[7], 23_500.0);
        let c = calibrate(&freqs, 4, |f, _| {
            fake_report(if f == 21_500.0 { 1.0 } else { 0.5 }, true)
        });
        assert_eq!(c.best_freq_hz, 21_500.0);
        let c = calibrate(&freqs, 4, |_, _| fake_report(1.0, true));
        assert_eq!(c.best_freq_hz, 20_000.0);
        let reversed: Vec<f64> = freqs.iter().rev().copied().collect();
        let c = calibrate(&reversed, 4, |_, _| fake_report(1.0, true));
        assert_eq!(c.best_freq_hz, 20_000.0);
        let c = calibrate(&reversed, 4, |_, _| fake_report(0.0, false));
        assert!(c.all_failed);
        assert_eq!(c.best_freq_hz, 23_500.0);
    }
}
