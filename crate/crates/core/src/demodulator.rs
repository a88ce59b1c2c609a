//! Receiver front end: complex mixing, preamble detection and symbol sampling.
//!
//! The PCM signal is multiplied by `e^{-iωn}` and smoothed with a moving
//! average as long as the steady part of a symbol, leaving one complex value
//! per sample. The average only partly suppresses the `2f_c` image when the
//! window is not a whole number of image periods (carriers near Nyquist), so
//! the known residual is cancelled: for a constant phasor `b` the window
//! yields `y = b + K·conj(b)` with `K` computable from `n` alone, hence
//! `b = (y - K·conj(y)) / (1 - |K|²)`. Frame detection then runs
//! in four stages for every candidate start sample:
//!
//! 1. energy gate: the second half of the preamble is above a floor,
//! 2. the differential phases of the sync slots correlate with the pattern,
//! 3. the preamble slots are phase-coherent; their mean sets the reference,
//! 4. the trailer slots decode to the trailer pattern.
//!
//! Candidates passing 1–2 are refined to the start sample maximising the
//! normalised sync correlation within one symbol period either side.
//!
//! Both the one-shot functions and [`StreamingDemodulator`] drive the same
//! mixer and detector, so chunked input yields identical results.

use std::collections::VecDeque;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::config::ModemConfig;
use crate::constellation::{nearest_index, phase_of};
use crate::error::{ModemError, Result};
use crate::modulator::PcmBuffer;

#[derive(Clone, Debug, PartialEq)]
pub struct BasebandSequence {
    pub samples: Vec<Complex64>,
    pub sample_rate_hz: u32,
    pub carrier_freq_hz: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SyncResult {
    /// Sample index of the first preamble sample.
    pub frame_start_sample: usize,
    pub reference_phase_rad: f64,
    /// Mean baseband magnitude over the preamble slots.
    pub preamble_magnitude: f64,
    pub sync_correlation: f64,
    pub preamble_coherence: f64,
    pub accepted: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SoftSymbol {
    pub value: Complex64,
    /// Slot number counted from the first preamble symbol.
    pub slot_index: usize,
}

/// Carrier phase at sample `n`, reduced exactly before scaling.
fn carrier_angle(carrier: f64, sample_rate: f64, n: i64) -> f64 {
    2.0 * PI * (carrier * n as f64).rem_euclid(sample_rate) / sample_rate
}

/// Mix-down and moving-average filter fed one sample at a time.
#[derive(Clone, Debug)]
struct BasebandMixer {
    sample_rate: f64,
    carrier: f64,
    window: usize,
    /// Samples of the window preceding its centre.
    lead: usize,
    ring: VecDeque<Complex64>,
    sum: Complex64,
    consumed: usize,
    /// Window average of `e^{-2iωm}` over `m = 0..window`.
    image: Complex64,
    image_gain: f64,
}

impl BasebandMixer {
    fn new(config: &ModemConfig) -> Self {
        let window = config.steady_samples();
        let sample_rate = config.sample_rate_hz as f64;
        let carrier = config.carrier_freq_hz;
        let image: Complex64 = (0..window)
            .map(|m| {
                Complex64::from_polar(1.0, -2.0 * carrier_angle(carrier, sample_rate, m as i64))
            })
            .sum::<Complex64>()
            / window as f64;
        let image = if image.norm() < 1e-12 {
            Complex64::new(0.0, 0.0)
        } else {
            image
        };
        BasebandMixer {
            sample_rate,
            carrier,
            window,
            lead: window / 2,
            ring: VecDeque::with_capacity(window + 1),
            sum: Complex64::new(0.0, 0.0),
            consumed: 0,
            image,
            image_gain: 1.0 / (1.0 - image.norm_sqr()),
        }
    }

    /// Remove the residual image from the window average centred on `out`.
    fn cancel_image(&self, y: Complex64, out: usize) -> Complex64 {
        if self.image == Complex64::new(0.0, 0.0) {
            return y;
        }
        let first = out as i64 - self.lead as i64;
        let k = self.image
            * Complex64::from_polar(
                1.0,
                -2.0 * carrier_angle(self.carrier, self.sample_rate, first),
            );
        (y - k * y.conj()) * self.image_gain
    }

    /// Feed one sample; returns the baseband value it completes, if any.
    fn push(&mut self, sample: f64) -> Option<Complex64> {
        let n = self.consumed;
        let product = Complex64::from_polar(
            sample,
            -carrier_angle(self.carrier, self.sample_rate, n as i64),
        );
        self.ring.push_back(product);
        self.sum += product;
        if self.ring.len() > self.window {
            let old = self.ring.pop_front().unwrap();
            self.sum -= old;
        }
        // Periodically re-sum so rounding in the running total cannot build up.
        if (n + 1).is_multiple_of(self.window) {
            self.sum = self.ring.iter().sum();
        }
        self.consumed += 1;
        let out = (n + self.lead + 1).checked_sub(self.window)?;
        Some(self.cancel_image(self.sum / self.window as f64, out))
    }

    /// Zero-pad until every one of the `total` real samples has its output.
    fn finish(&mut self, total: usize, out: &mut Vec<Complex64>) {
        while out.len() < total {
            if let Some(z) = self.push(0.0) {
                out.push(z);
            }
        }
    }
}

pub fn mix_to_baseband(pcm: &PcmBuffer, config: &ModemConfig) -> Result<BasebandSequence> {
    if pcm.sample_rate_hz != config.sample_rate_hz {
        return Err(ModemError::ConfigInvalid(format!(
            "PCM sampled at {} Hz, modem configured for {} Hz",
            pcm.sample_rate_hz, config.sample_rate_hz
        )));
    }
    let window = config.steady_samples();
    if pcm.len() < window {
        return Err(ModemError::BufferTooShort {
            needed: window,
            available: pcm.len(),
        });
    }
    let mut mixer = BasebandMixer::new(config);
    let mut samples = Vec::with_capacity(pcm.len());
    samples.extend(pcm.samples.iter().filter_map(|&s| mixer.push(s)));
    mixer.finish(pcm.len(), &mut samples);
    Ok(BasebandSequence {
        samples,
        sample_rate_hz: pcm.sample_rate_hz,
        carrier_freq_hz: config.carrier_freq_hz,
    })
}

/// Slot geometry and thresholds derived from a config.
#[derive(Clone, Debug)]
struct SyncGeometry {
    period: usize,
    center: usize,
    window: usize,
    lead: usize,
    preamble: usize,
    sync: Vec<u8>,
    trailer: Vec<u8>,
    /// `e^{-iΔ}` for each differential step of the sync pattern.
    sync_diffs: Vec<Complex64>,
    gate: f64,
    min_correlation: f64,
    min_coherence: f64,
}

impl SyncGeometry {
    fn new(config: &ModemConfig) -> Self {
        let sync_diffs = config
            .sync_pattern
            .windows(2)
            .map(|w| Complex64::from_polar(1.0, -(phase_of(w[1]) - phase_of(w[0]))))
            .collect();
        let window = config.steady_samples();
        SyncGeometry {
            period: config.symbol_period_samples,
            center: window / 2,
            window,
            lead: window / 2,
            preamble: config.preamble_symbols,
            sync: config.sync_pattern.clone(),
            trailer: config.trailer_pattern.clone(),
            sync_diffs,
            gate: config.energy_gate_fraction * config.amplitude / 2.0,
            min_correlation: config.sync_correlation_min,
            min_coherence: config.preamble_coherence_min,
        }
    }

    fn slot(&self, start: usize, k: usize) -> usize {
        start + k * self.period + self.center
    }

    fn framing(&self) -> usize {
        self.preamble + self.sync.len() + self.trailer.len()
    }

    /// Last baseband index any stage reads for a candidate at `start`.
    fn last_index(&self, start: usize) -> usize {
        self.slot(start, self.framing() - 1)
    }

    /// One past the last PCM sample feeding slot `k`.
    fn window_end(&self, start: usize, k: usize) -> usize {
        self.slot(start, k) - self.lead + self.window
    }

    fn gate_open(&self, bb: &[Complex64], start: usize) -> bool {
        (self.preamble / 2..self.preamble).all(|k| bb[self.slot(start, k)].norm() > self.gate)
    }

    /// (magnitude, normalised) differential correlation with the sync pattern.
    fn sync_correlation(&self, bb: &[Complex64], start: usize) -> (f64, f64) {
        let first = self.preamble;
        let mut acc = Complex64::new(0.0, 0.0);
        let mut ideal = 0.0;
        let mut prev = bb[self.slot(start, first)];
        for (j, rot) in self.sync_diffs.iter().enumerate() {
            let cur = bb[self.slot(start, first + j + 1)];
            let d = cur * prev.conj();
            acc += d * rot;
            ideal += d.norm();
            prev = cur;
        }
        let m = acc.norm();
        (m, if ideal > 0.0 { m / ideal } else { 0.0 })
    }

    fn assess(&self, bb: &[Complex64], start: usize) -> SyncResult {
        let gate = self.gate_open(bb, start);
        let (_, correlation) = self.sync_correlation(bb, start);

        let mut sum = Complex64::new(0.0, 0.0);
        let mut mags = 0.0;
        for k in 0..self.preamble {
            let z = bb[self.slot(start, k)];
            sum += z;
            mags += z.norm();
        }
        let coherence = if mags > 0.0 { sum.norm() / mags } else { 0.0 };
        let reference = sum.arg();
        let derotate = Complex64::from_polar(1.0, -reference);

        let trailer_start = self.preamble + self.sync.len();
        let trailer_ok = self.trailer.iter().enumerate().all(|(j, &expected)| {
            let z = bb[self.slot(start, trailer_start + j)] * derotate;
            nearest_index(z.arg()) == expected
        });

        SyncResult {
            frame_start_sample: start,
            reference_phase_rad: reference,
            preamble_magnitude: mags / self.preamble as f64,
            sync_correlation: correlation,
            preamble_coherence: coherence,
            accepted: gate
                && correlation >= self.min_correlation
                && coherence >= self.min_coherence
                && trailer_ok,
        }
    }
}

#[derive(Clone, Debug)]
enum Poll {
    Found(SyncResult),
    Pending,
    Exhausted,
}

/// Sequential candidate scan; every decision depends only on baseband values.
#[derive(Clone, Debug)]
struct Detector {
    geometry: SyncGeometry,
    next: usize,
}

impl Detector {
    fn poll(&mut self, bb: &[Complex64], complete: bool) -> Poll {
        let g = &self.geometry;
        loop {
            let s = self.next;
            if g.last_index(s + g.period) >= bb.len() {
                return if complete {
                    Poll::Exhausted
                } else {
                    Poll::Pending
                };
            }
            if !(g.gate_open(bb, s) && g.sync_correlation(bb, s).1 >= g.min_correlation) {
                self.next += 1;
                continue;
            }
            let lo = s.saturating_sub(g.period);
            let scores: Vec<f64> = (lo..=s + g.period)
                .map(|t| g.sync_correlation(bb, t).1)
                .collect();
            let peak = scores.iter().cloned().fold(f64::MIN, f64::max);
            // Earliest start within rounding of the peak, so plateaus resolve identically.
            let offset = scores
                .iter()
                .position(|&m| m >= peak * (1.0 - 1e-9))
                .unwrap();
            let candidate = g.assess(bb, lo + offset);
            if candidate.accepted {
                self.next = lo + offset + 1;
                return Poll::Found(candidate);
            }
            self.next = s + g.period + 1;
        }
    }
}

pub fn detect_preamble(bb: &BasebandSequence, config: &ModemConfig) -> Option<SyncResult> {
    let mut detector = Detector {
        geometry: SyncGeometry::new(config),
        next: 0,
    };
    match detector.poll(&bb.samples, true) {
        Poll::Found(sync) => Some(sync),
        Poll::Pending | Poll::Exhausted => None,
    }
}

/// Soft symbols for `count` slots following the trailer (header block first).
pub fn sample_symbols(
    bb: &BasebandSequence,
    sync: &SyncResult,
    count: usize,
    config: &ModemConfig,
) -> Result<Vec<SoftSymbol>> {
    let g = SyncGeometry::new(config);
    let first = g.framing();
    let start = sync.frame_start_sample;
    if count > 0 {
        let needed = g.window_end(start, first + count - 1);
        if needed > bb.samples.len() {
            return Err(ModemError::BufferTooShort {
                needed,
                available: bb.samples.len(),
            });
        }
    }
    let derotate = Complex64::from_polar(1.0, -sync.reference_phase_rad);
    Ok((first..first + count)
        .map(|k| SoftSymbol {
            value: bb.samples[g.slot(start, k)] * derotate,
            slot_index: k,
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub enum DemodEvent {
    Sync(SyncResult),
    Symbol(SoftSymbol),
}

#[derive(Clone, Debug)]
struct Lock {
    sync: SyncResult,
    next_slot: usize,
}

/// Chunk-fed demodulator.
///
/// After a sync it emits soft symbols for successive slots until
/// [`release`](Self::release) is called, then resumes searching.
#[derive(Clone, Debug)]
pub struct StreamingDemodulator {
    mixer: BasebandMixer,
    detector: Detector,
    baseband: Vec<Complex64>,
    pcm_len: usize,
    lock: Option<Lock>,
    finished: bool,
}

impl StreamingDemodulator {
    pub fn new(config: &ModemConfig) -> Result<Self> {
        config.validate()?;
        Ok(StreamingDemodulator {
            mixer: BasebandMixer::new(config),
            detector: Detector {
                geometry: SyncGeometry::new(config),
                next: 0,
            },
            baseband: Vec::new(),
            pcm_len: 0,
            lock: None,
            finished: false,
        })
    }

    pub fn push(&mut self, pcm: &[f64]) -> Vec<DemodEvent> {
        assert!(!self.finished, "push after finish");
        for &s in pcm {
            if let Some(z) = self.mixer.push(s) {
                self.baseband.push(z);
            }
        }
        self.pcm_len += pcm.len();
        self.drain()
    }

    /// Flush the tail of the stream; no further input is accepted.
    pub fn finish(&mut self) -> Vec<DemodEvent> {
        if !self.finished {
            self.mixer.finish(self.pcm_len, &mut self.baseband);
            self.finished = true;
        }
        self.drain()
    }

    /// Stop the current frame and search again from `resume_at`.
    pub fn release(&mut self, resume_at: usize) -> Vec<DemodEvent> {
        self.lock = None;
        self.detector.next = resume_at;
        self.drain()
    }

    pub fn current_sync(&self) -> Option<SyncResult> {
        self.lock.as_ref().map(|l| l.sync)
    }

    pub fn samples_consumed(&self) -> usize {
        self.pcm_len
    }

    fn drain(&mut self) -> Vec<DemodEvent> {
        let mut events = Vec::new();
        loop {
            match &mut self.lock {
                None => match self.detector.poll(&self.baseband, self.finished) {
                    Poll::Found(sync) => {
                        events.push(DemodEvent::Sync(sync));
                        self.lock = Some(Lock {
                            sync,
                            next_slot: self.detector.geometry.framing(),
                        });
                    }
                    Poll::Pending | Poll::Exhausted => break,
                },
                Some(lock) => {
                    let g = &self.detector.geometry;
                    let start = lock.sync.frame_start_sample;
                    let center = g.slot(start, lock.next_slot);
                    if g.window_end(start, lock.next_slot) > self.pcm_len
                        || center >= self.baseband.len()
                    {
                        break;
                    }
                    let derotate = Complex64::from_polar(1.0, -lock.sync.reference_phase_rad);
                    events.push(DemodEvent::Symbol(SoftSymbol {
                        value: self.baseband[center] * derotate,
                        slot_index: lock.next_slot,
                    }));
                    lock.next_slot += 1;
                }
            }
        }
        events
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::wrap_phase;
    use crate::frame::build_frame;
    use crate::modulator::{modulate, modulate_symbols};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn tone(freq: f64, phase: f64, len: usize) -> PcmBuffer {
        let samples = (0..len)
            .map(|n| (2.0 * PI * freq * n as f64 / 48_000.0 + phase).cos())
            .collect();
        PcmBuffer::new(samples, 48_000)
    }

    #[test]
    fn carrier_mixes_to_half_amplitude() {
        let cfg = ModemConfig::default();
        let bb = mix_to_baseband(&tone(22_500.0, 0.0, 4000), &cfg).unwrap();
        assert_eq!(bb.samples.len(), 4000);
        for z in &bb.samples[200..3800] {
            assert!((z - Complex64::new(0.5, 0.0)).norm() < 0.01);
        }
        let bb = mix_to_baseband(&tone(22_500.0, PI / 2.0, 4000), &cfg).unwrap();
        for z in &bb.samples[200..3800] {
            assert!((z - Complex64::new(0.0, 0.5)).norm() < 0.01);
        }
    }

    #[test]
    fn other_carriers_mix_within_tolerance() {
        for f in [20_000.0, 21_000.0, 22_000.0, 23_500.0, 23_900.0] {
            let cfg = ModemConfig {
                carrier_freq_hz: f,
                ..ModemConfig::default()
            };
            // A plain boxcar leaves 0.5·|sin(Wω)| / (W·|sin ω|) of the 2f image.
            let w = cfg.steady_samples() as f64;
            let omega = 2.0 * PI * f / 48_000.0;
            let leak = 0.5 * (w * omega).sin().abs() / (w * omega.sin().abs());
            let bb = mix_to_baseband(&tone(f, 0.3, 4000), &cfg).unwrap();
            let worst = bb.samples[200..3800]
                .iter()
                .map(|z| (z - Complex64::from_polar(0.5, 0.3)).norm())
                .fold(0.0, f64::max);
            assert!(
                worst < 1e-9,
                "{f} Hz: error {worst}, uncancelled leak {leak}"
            );
        }
    }

    #[test]
    fn frequency_offset_rotates_baseband() {
        let cfg = ModemConfig::default();
        let bb = mix_to_baseband(&tone(22_550.0, 0.0, 6000), &cfg).unwrap();
        let expected = 2.0 * PI * 50.0 / 48_000.0;
        // The image ripple averages out over many samples.
        let span = 4800;
        let total: f64 = (500..500 + span)
            .map(|n| wrap_phase(bb.samples[n + 1].arg() - bb.samples[n].arg()))
            .sum();
        assert!((total / span as f64 - expected).abs() < 1e-5);
    }

    #[test]
    fn short_buffer_rejected() {
        let cfg = ModemConfig::default();
        assert!(matches!(
            mix_to_baseband(&tone(22_500.0, 0.0, 100), &cfg),
            Err(ModemError::BufferTooShort { .. })
        ));
    }

    fn embedded(payload: &[u8], offset: usize, cfg: &ModemConfig) -> PcmBuffer {
        let frame = build_frame(payload, cfg).unwrap();
        modulate(&frame, cfg).unwrap().padded(offset, 2000)
    }

    #[test]
    fn clean_frame_found_at_offset() {
        let cfg = ModemConfig::default();
        let pcm = embedded(b"Hello, world!", 4321, &cfg);
        let bb = mix_to_baseband(&pcm, &cfg).unwrap();
        let sync = detect_preamble(&bb, &cfg).unwrap();
        assert!(sync.accepted);
        assert!((sync.frame_start_sample as i64 - 4321).abs() <= 2);
        // The modulator's reference is the absolute carrier phase at sample 0,
        // so shifting by 4321 samples rotates the baseband reference.
        let omega = 2.0 * PI * cfg.carrier_freq_hz / 48_000.0;
        let truth = wrap_phase(-omega * 4321.0);
        assert!(wrap_phase(sync.reference_phase_rad - truth).abs() < 0.05);
    }

    #[test]
    fn silence_and_noise_give_no_sync() {
        let cfg = ModemConfig::default();
        let bb = mix_to_baseband(&PcmBuffer::silence(48_000, 48_000), &cfg).unwrap();
        assert!(detect_preamble(&bb, &cfg).is_none());

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let normal = Normal::new(0.0, 10f64.powf(-10.0 / 20.0)).unwrap();
        let noise: Vec<f64> = (0..96_000).map(|_| normal.sample(&mut rng)).collect();
        let bb = mix_to_baseband(&PcmBuffer::new(noise, 48_000), &cfg).unwrap();
        assert!(detect_preamble(&bb, &cfg).is_none());
    }

    #[test]
    fn corrupted_trailer_rejected() {
        let cfg = ModemConfig::default();
        let frame = build_frame(b"trailer", &cfg).unwrap();
        let mut symbols = frame.symbol_sequence.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for s in &mut symbols[40..44] {
            *s = (*s + rng.gen_range(1..8)) % 8;
        }
        let pcm = modulate_symbols(&symbols, &cfg).unwrap().padded(1000, 1000);
        let bb = mix_to_baseband(&pcm, &cfg).unwrap();
        assert!(detect_preamble(&bb, &cfg).is_none());
    }

    #[test]
    fn loopback_symbols_on_constellation() {
        let cfg = ModemConfig::default();
        let frame = build_frame(b"Hello, world!", &cfg).unwrap();
        let pcm = modulate(&frame, &cfg).unwrap().padded(777, 1000);
        let bb = mix_to_baseband(&pcm, &cfg).unwrap();
        let sync = detect_preamble(&bb, &cfg).unwrap();
        let coded = frame.coded_symbols(&cfg);
        let softs = sample_symbols(&bb, &sync, coded.len(), &cfg).unwrap();
        for (s, &k) in softs.iter().zip(coded) {
            assert!(wrap_phase(s.value.arg() - phase_of(k)).abs() < 0.15);
        }
        assert!(softs
            .windows(2)
            .all(|w| w[1].slot_index == w[0].slot_index + 1));
        assert!(sample_symbols(&bb, &sync, 0, &cfg).unwrap().is_empty());
        assert!(matches!(
            sample_symbols(&bb, &sync, coded.len() + 50, &cfg),
            Err(ModemError::BufferTooShort { .. })
        ));
    }

    #[test]
    fn all_zero_data_sits_on_positive_axis() {
        let cfg = ModemConfig::default();
        let mut symbols = build_frame(b"", &cfg).unwrap().symbol_sequence;
        symbols.truncate(cfg.framing_symbols());
        symbols.extend([0u8; 21]);
        let pcm = modulate_symbols(&symbols, &cfg).unwrap().padded(500, 500);
        let bb = mix_to_baseband(&pcm, &cfg).unwrap();
        let sync = detect_preamble(&bb, &cfg).unwrap();
        for s in sample_symbols(&bb, &sync, 21, &cfg).unwrap() {
            assert!((s.value - Complex64::new(0.5 * cfg.amplitude, 0.0)).norm() < 0.01);
        }
    }

    fn one_shot(pcm: &PcmBuffer, cfg: &ModemConfig, count: usize) -> (SyncResult, Vec<SoftSymbol>) {
        let bb = mix_to_baseband(pcm, cfg).unwrap();
        let sync = detect_preamble(&bb, cfg).unwrap();
        let softs = sample_symbols(&bb, &sync, count, cfg).unwrap();
        (sync, softs)
    }

    fn streamed(pcm: &PcmBuffer, cfg: &ModemConfig, chunks: &[usize]) -> Vec<DemodEvent> {
        let mut demod = StreamingDemodulator::new(cfg).unwrap();
        let mut events = Vec::new();
        let mut pos = 0;
        let mut i = 0;
        while pos < pcm.len() {
            let n = chunks[i % chunks.len()].min(pcm.len() - pos);
            events.extend(demod.push(&pcm.samples[pos..pos + n]));
            pos += n;
            i += 1;
        }
        events.extend(demod.finish());
        events
    }

    #[test]
    fn streaming_matches_one_shot() {
        let cfg = ModemConfig::default();
        let pcm = embedded(b"streaming equivalence", 3000, &cfg);
        let count = 7 * 12;
        let (sync, softs) = one_shot(&pcm, &cfg, count);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for trial in 0..6 {
            let chunks: Vec<usize> = if trial == 0 {
                vec![1]
            } else {
                (0..16).map(|_| rng.gen_range(1..5000)).collect()
            };
            let events = streamed(&pcm, &cfg, &chunks);
            assert_eq!(events[0], DemodEvent::Sync(sync));
            let symbols: Vec<SoftSymbol> = events[1..]
                .iter()
                .filter_map(|e| match e {
                    DemodEvent::Symbol(s) => Some(*s),
                    DemodEvent::Sync(_) => None,
                })
                .take(count)
                .collect();
            assert_eq!(symbols, softs);
        }
    }

    #[test]
    fn release_resumes_search_for_next_frame() {
        let cfg = ModemConfig::default();
        let first = embedded(b"one", 1000, &cfg);
        let second = embedded(b"two", 1500, &cfg);
        let mut joined = first.samples.clone();
        joined.extend(&second.samples);
        let mut demod = StreamingDemodulator::new(&cfg).unwrap();
        let events = demod.push(&joined);
        let DemodEvent::Sync(s1) = events[0] else {
            panic!("expected sync")
        };
        let frame_len = build_frame(b"one", &cfg).unwrap().symbol_sequence.len() * 160;
        let events = demod.release(s1.frame_start_sample + frame_len);
        let DemodEvent::Sync(s2) = events[0] else {
            panic!("expected second sync")
        };
        assert!((s2.frame_start_sample as i64 - (first.len() + 1500) as i64).abs() <= 2);
    }

    #[test]
    fn prepended_silence_shifts_start_exactly() {
        let cfg = ModemConfig::default();
        let base = embedded(b"shift", 600, &cfg);
        let (s0, _) = one_shot(&base, &cfg, 7);
        for n in [1usize, 17, 160, 999, 4801] {
            let (s, _) = one_shot(&base.padded(n, 0), &cfg, 7);
            assert_eq!(s.frame_start_sample, s0.frame_start_sample + n, "n = {n}");
        }
    }

    #[test]
    fn amplitude_scaling_keeps_decisions() {
        let cfg = ModemConfig::default();
        let frame = build_frame(b"scale invariance", &cfg).unwrap();
        let base = modulate(&frame, &cfg).unwrap().padded(2500, 1000);
        let count = frame.coded_symbols(&cfg).len();
        let (s0, soft0) = one_shot(&base, &cfg, count);
        for c in [0.05, 0.1, 0.3, 0.7, 1.0] {
            let scaled = PcmBuffer::new(base.samples.iter().map(|x| x * c).collect(), 48_000);
            let (s, soft) = one_shot(&scaled, &cfg, count);
            assert!((s.frame_start_sample as i64 - s0.frame_start_sample as i64).abs() <= 1);
            for (a, b) in soft.iter().zip(&soft0) {
                assert_eq!(nearest_index(a.value.arg()), nearest_index(b.value.arg()));
            }
        }
    }
}
