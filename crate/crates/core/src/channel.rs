//! Parametric acoustic link: Doppler and clock skew, free-field attenuation,
//! device and angular gains, a single-tone jammer and white Gaussian noise.
//!
//! Profiles are read from the same flat `key = value` format as modem
//! configs. Curves are comma-separated `x:y` pairs interpolated linearly and
//! held constant beyond their end points.

use std::f64::consts::PI;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{ModemError, Result};
use crate::kv;
use crate::modulator::PcmBuffer;

/// Half-width of the in-band SNR measurement window around the carrier.
pub const SNR_HALF_BAND_HZ: f64 = 2_000.0;

/// Piecewise-linear curve over ascending x.
#[derive(Clone, Debug, PartialEq)]
pub struct Curve {
    pub points: Vec<(f64, f64)>,
}

impl Curve {
    pub fn new(points: Vec<(f64, f64)>) -> Self {
        Curve { points }
    }

    /// Unit gain everywhere.
    pub fn flat() -> Self {
        Curve { points: Vec::new() }
    }

    pub fn at(&self, x: f64) -> f64 {
        let p = &self.points;
        match p.len() {
            0 => 1.0,
            _ if x <= p[0].0 => p[0].1,
            _ if x >= p[p.len() - 1].0 => p[p.len() - 1].1,
            _ => {
                let i = p.partition_point(|&(px, _)| px <= x);
                let (x0, y0) = p[i - 1];
                let (x1, y1) = p[i];
                y0 + (y1 - y0) * (x - x0) / (x1 - x0)
            }
        }
    }

    fn parse(e: &kv::Entry) -> Result<Self> {
        if e.value.is_empty() || e.value.eq_ignore_ascii_case("flat") {
            Ok(Curve::flat())
        } else {
            Ok(Curve::new(e.pairs()?))
        }
    }

    fn to_kv(&self) -> String {
        if self.points.is_empty() {
            "flat".into()
        } else {
            kv::format_pairs(&self.points)
        }
    }

    fn check(&self, name: &str) -> Result<()> {
        for w in self.points.windows(2) {
            if w[1].0 <= w[0].0 {
                return invalid(format!("{name}: x values must increase"));
            }
        }
        if self
            .points
            .iter()
            .any(|&(x, y)| !x.is_finite() || !(0.0..=1.0).contains(&y))
        {
            return invalid(format!("{name}: gains must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Cardioid-like pattern: 1 on axis, 0.25 directly behind.
pub fn default_angular_gain() -> Curve {
    Curve::new(
        (0..=12)
            .map(|i| {
                let deg = 15.0 * i as f64;
                (deg, 0.625 + 0.375 * deg.to_radians().cos())
            })
            .collect(),
    )
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jammer {
    pub freq_hz: f64,
    pub amplitude: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelProfile {
    pub distance_m: f64,
    pub tx_angle_deg: f64,
    pub rx_angle_deg: f64,
    /// In-band SNR at the carrier ± 2 kHz; `f64::INFINITY` disables noise.
    pub snr_db: f64,
    /// Positive when the devices move apart.
    pub relative_velocity_mps: f64,
    pub clock_skew_ppm: f64,
    pub tx_response: Curve,
    pub rx_response: Curve,
    /// Gain against absolute angle in degrees, 0..=180.
    pub angular_gain: Curve,
    pub jammer: Option<Jammer>,
    pub speed_of_sound_mps: f64,
    pub rng_seed: u64,
}

impl Default for ChannelProfile {
    fn default() -> Self {
        ChannelProfile {
            distance_m: 1.0,
            tx_angle_deg: 0.0,
            rx_angle_deg: 0.0,
            snr_db: f64::INFINITY,
            relative_velocity_mps: 0.0,
            clock_skew_ppm: 0.0,
            tx_response: Curve::flat(),
            rx_response: Curve::flat(),
            angular_gain: default_angular_gain(),
            jammer: None,
            speed_of_sound_mps: 343.0,
            rng_seed: 0,
        }
    }
}

fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(ModemError::InvalidProfile(msg.into()))
}

/// Fold an angle in degrees onto 0..=180.
fn fold_angle(deg: f64) -> f64 {
    let a = deg.rem_euclid(360.0);
    if a > 180.0 {
        360.0 - a
    } else {
        a
    }
}

impl ChannelProfile {
    /// A lossless, noiseless link.
    pub fn identity() -> Self {
        ChannelProfile::default()
    }

    /// Time-scale factor: output sample `n` reads input time `n · ratio`.
    pub fn resample_ratio(&self) -> f64 {
        1.0 + self.clock_skew_ppm * 1e-6 - self.relative_velocity_mps / self.speed_of_sound_mps
    }

    pub fn attenuation(&self) -> f64 {
        (1.0 / self.distance_m).min(1.0)
    }

    /// Total amplitude gain applied to a signal at `freq_hz`.
    pub fn gain_at(&self, freq_hz: f64) -> f64 {
        self.attenuation()
            * self.tx_response.at(freq_hz)
            * self.rx_response.at(freq_hz)
            * self.angular_gain.at(fold_angle(self.tx_angle_deg))
            * self.angular_gain.at(fold_angle(self.rx_angle_deg))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.distance_m >= 0.1 && self.distance_m.is_finite()) {
            return invalid(format!(
                "distance_m {} must be at least 0.1",
                self.distance_m
            ));
        }
        if !self.tx_angle_deg.is_finite() || !self.rx_angle_deg.is_finite() {
            return invalid("angles must be finite");
        }
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return invalid("snr_db must be a number or inf");
        }
        if !(self.speed_of_sound_mps > 0.0 && self.speed_of_sound_mps.is_finite()) {
            return invalid("speed_of_sound_mps must be positive");
        }
        if !self.relative_velocity_mps.is_finite() || !self.clock_skew_ppm.is_finite() {
            return invalid("velocity and clock skew must be finite");
        }
        let r = self.resample_ratio();
        if !(0.9..=1.1).contains(&r) {
            return invalid(format!("resample ratio {r} outside 0.9..=1.1"));
        }
        self.tx_response.check("tx_response")?;
        self.rx_response.check("rx_response")?;
        self.angular_gain.check("angular_gain")?;
        let ang = &self.angular_gain.points;
        if ang.iter().any(|&(x, _)| !(0.0..=180.0).contains(&x)) {
            return invalid("angular_gain angles must lie in 0..=180");
        }
        if ang.windows(2).any(|w| w[1].1 > w[0].1) {
            return invalid("angular_gain must not increase with angle");
        }
        if let Some(j) = self.jammer {
            if !(j.freq_hz > 0.0 && j.freq_hz.is_finite()) {
                return invalid("jammer frequency must be positive");
            }
            if !(j.amplitude >= 0.0 && j.amplitude.is_finite()) {
                return invalid("jammer amplitude must be non-negative");
            }
        }
        Ok(())
    }

    pub fn from_kv_str(text: &str) -> Result<Self> {
        let mut p = ChannelProfile::default();
        p.apply_kv(text)?;
        Ok(p)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_kv_str(&std::fs::read_to_string(path)?)
    }

    pub fn apply_kv(&mut self, text: &str) -> Result<()> {
        for e in kv::parse(text)? {
            match e.key.as_str() {
                "distance_m" => self.distance_m = e.f64()?,
                "tx_angle_deg" => self.tx_angle_deg = e.f64()?,
                "rx_angle_deg" => self.rx_angle_deg = e.f64()?,
                "snr_db" => self.snr_db = e.f64()?,
                "relative_velocity_mps" => self.relative_velocity_mps = e.f64()?,
                "clock_skew_ppm" => self.clock_skew_ppm = e.f64()?,
                "tx_response" => self.tx_response = Curve::parse(&e)?,
                "rx_response" => self.rx_response = Curve::parse(&e)?,
                "angular_gain" => self.angular_gain = Curve::parse(&e)?,
                "jammer" => {
                    self.jammer = if e.value.eq_ignore_ascii_case("none") {
                        None
                    } else {
                        match e.pairs()?.as_slice() {
                            &[(freq_hz, amplitude)] => Some(Jammer { freq_hz, amplitude }),
                            _ => {
                                return Err(ModemError::Parse {
                                    line: e.line,
                                    message: "`jammer`: expected `freq_hz:amplitude` or `none`"
                                        .into(),
                                })
                            }
                        }
                    }
                }
                "speed_of_sound_mps" => self.speed_of_sound_mps = e.f64()?,
                "rng_seed" => self.rng_seed = e.u64()?,
                other => {
                    return Err(ModemError::Parse {
                        line: e.line,
                        message: format!("unknown profile key `{other}`"),
                    })
                }
            }
        }
        Ok(())
    }

    pub fn to_kv_string(&self) -> String {
        let jammer = match self.jammer {
            Some(j) => format!("{}:{}", j.freq_hz, j.amplitude),
            None => "none".into(),
        };
        format!(
            "distance_m = {}\ntx_angle_deg = {}\nrx_angle_deg = {}\nsnr_db = {}\n\
             relative_velocity_mps = {}\nclock_skew_ppm = {}\ntx_response = {}\n\
             rx_response = {}\nangular_gain = {}\njammer = {}\nspeed_of_sound_mps = {}\n\
             rng_seed = {}\n",
            self.distance_m,
            self.tx_angle_deg,
            self.rx_angle_deg,
            self.snr_db,
            self.relative_velocity_mps,
            self.clock_skew_ppm,
            self.tx_response.to_kv(),
            self.rx_response.to_kv(),
            self.angular_gain.to_kv(),
            jammer,
            self.speed_of_sound_mps,
            self.rng_seed,
        )
    }
}

const HALF_TAPS: usize = 96;
const TABLE_PHASES: usize = 512;
const KAISER_BETA: f64 = 9.0;

/// Modified Bessel function of the first kind, order zero.
fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let (mut sum, mut term, mut k) = (1.0, 1.0, 1.0);
    while term > sum * 1e-17 {
        term *= q / (k * k);
        sum += term;
        k += 1.0;
    }
    sum
}

/// Kaiser-windowed sinc sampled finely over `[-HALF_TAPS, HALF_TAPS]`.
fn kernel_table(cutoff: f64) -> Vec<f64> {
    let half = HALF_TAPS as f64;
    let norm = bessel_i0(KAISER_BETA);
    (0..=2 * HALF_TAPS * TABLE_PHASES)
        .map(|i| {
            let u = i as f64 / TABLE_PHASES as f64 - half;
            let x = cutoff * u;
            let sinc = if x == 0.0 {
                1.0
            } else {
                (PI * x).sin() / (PI * x)
            };
            let r = u / half;
            let window = bessel_i0(KAISER_BETA * (1.0 - r * r).max(0.0).sqrt()) / norm;
            cutoff * sinc * window
        })
        .collect()
}

/// Band-limited resampling: output sample `n` is the input evaluated at time
/// `n · ratio`. The sample rate label is unchanged.
pub fn resample(pcm: &PcmBuffer, ratio: f64) -> PcmBuffer {
    assert!(
        (0.9..=1.1).contains(&ratio),
        "resample ratio {ratio} out of range"
    );
    if ratio == 1.0 {
        return pcm.clone();
    }
    let x = &pcm.samples;
    let out_len = (x.len() as f64 / ratio).floor() as usize;
    let table = kernel_table(ratio.recip().min(1.0));
    let phases = TABLE_PHASES as f64;
    let half = HALF_TAPS as i64;

    let samples = (0..out_len)
        .map(|n| {
            let t = n as f64 * ratio;
            let i0 = t.floor() as i64;
            let frac = t - i0 as f64;
            let mut acc = 0.0;
            for k in (i0 - half + 1).max(0)..=(i0 + half).min(x.len() as i64 - 1) {
                let pos = (frac + (i0 - k) as f64 + HALF_TAPS as f64) * phases;
                let j = pos.floor() as usize;
                let w = pos - j as f64;
                let h = if j + 1 < table.len() {
                    table[j] * (1.0 - w) + table[j + 1] * w
                } else {
                    table[table.len() - 1]
                };
                acc += x[k as usize] * h;
            }
            acc
        })
        .collect();
    PcmBuffer::new(samples, pcm.sample_rate_hz)
}

/// Convert between sample rates with the same interpolator.
pub fn convert_rate(pcm: &PcmBuffer, target_hz: u32) -> PcmBuffer {
    let mut out = resample(pcm, pcm.sample_rate_hz as f64 / target_hz as f64);
    out.sample_rate_hz = target_hz;
    out
}

/// Mean power over the span between the first and last non-zero sample.
pub fn active_power(samples: &[f64]) -> f64 {
    let first = samples.iter().position(|&s| s != 0.0);
    let last = samples.iter().rposition(|&s| s != 0.0);
    match (first, last) {
        (Some(a), Some(b)) => {
            samples[a..=b].iter().map(|s| s * s).sum::<f64>() / (b - a + 1) as f64
        }
        _ => 0.0,
    }
}

/// Width of the SNR measurement band around `carrier_hz`, clipped to Nyquist.
pub fn snr_band_hz(carrier_hz: f64, sample_rate_hz: u32) -> (f64, f64) {
    let nyquist = sample_rate_hz as f64 / 2.0;
    (
        (carrier_hz - SNR_HALF_BAND_HZ).max(0.0),
        (carrier_hz + SNR_HALF_BAND_HZ).min(nyquist),
    )
}

/// Per-sample noise standard deviation giving the profile's in-band SNR
/// against a transmitted signal of mean power `signal_power`.
pub fn noise_sigma(profile: &ChannelProfile, signal_power: f64, carrier_hz: f64, fs: u32) -> f64 {
    if profile.snr_db == f64::INFINITY {
        return 0.0;
    }
    let (lo, hi) = snr_band_hz(carrier_hz, fs);
    let in_band = signal_power / 10f64.powf(profile.snr_db / 10.0);
    (in_band * (fs as f64 / 2.0) / (hi - lo)).sqrt()
}

pub fn apply_channel(
    pcm: &PcmBuffer,
    profile: &ChannelProfile,
    carrier_hint_hz: f64,
) -> Result<PcmBuffer> {
    profile.validate()?;
    if pcm.is_empty() {
        return Err(ModemError::BufferTooShort {
            needed: 1,
            available: 0,
        });
    }
    let fs = pcm.sample_rate_hz;
    let mut out = resample(pcm, profile.resample_ratio());
    let gain = profile.gain_at(carrier_hint_hz);
    for s in &mut out.samples {
        *s *= gain;
    }

    let sigma = noise_sigma(profile, active_power(&pcm.samples), carrier_hint_hz, fs);
    if sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(profile.rng_seed);
        let normal = Normal::new(0.0, sigma).expect("finite sigma");
        for s in &mut out.samples {
            *s += normal.sample(&mut rng);
        }
    }

    if let Some(j) = profile.jammer {
        for (n, s) in out.samples.iter_mut().enumerate() {
            let phase = 2.0 * PI * (j.freq_hz * n as f64).rem_euclid(fs as f64) / fs as f64;
            *s += j.amplitude * phase.cos();
        }
    }
    Ok(out)
}
