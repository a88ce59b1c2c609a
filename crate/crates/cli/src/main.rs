//! `batnet`: encode, decode and simulate near-ultrasound PSK transmissions.

use std::io::{Cursor, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use batnet::channel::{apply_channel, ChannelProfile, Jammer};
use batnet::evaluation::{
    calibrate_link, default_calibration_frequencies, mean_quality_by_value, run_sweep,
    transmission_quality, write_csv, SweepOptions, TrialOptions, CALIBRATION_TRIALS,
};
use batnet::wav::{read_wav, write_wav};
use batnet::{build_frame, modulate, receive, ModemConfig, ModemError, PcmBuffer, ReceiveOptions};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "batnet",
    version,
    about = "Near-ultrasound 8-PSK acoustic modem"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode a payload into a WAV file.
    Encode(EncodeArgs),
    /// Decode a WAV file; the payload goes to stdout.
    Decode(DecodeArgs),
    /// Pass a WAV file through a simulated acoustic channel.
    Simulate(SimulateArgs),
    /// Sweep one parameter and write per-trial quality as CSV.
    Evaluate(EvaluateArgs),
    /// Find the carrier frequency that gives the best link quality.
    Calibrate(CalibrateArgs),
}

#[derive(Args, Clone)]
struct ModemFlags {
    /// Carrier frequency in Hz.
    #[arg(long)]
    freq: Option<f64>,
    /// Symbol period in samples.
    #[arg(long = "symbol-len")]
    symbol_len: Option<usize>,
    /// Phase transition length in samples.
    #[arg(long = "transition-len")]
    transition_len: Option<usize>,
    /// Output amplitude, 0 < amp <= 1.
    #[arg(long)]
    amp: Option<f64>,
}

#[derive(Args, Clone)]
struct ChannelFlags {
    /// Channel profile file.
    #[arg(long)]
    profile: Option<PathBuf>,
    #[arg(long)]
    distance: Option<f64>,
    #[arg(long = "angle-tx", allow_hyphen_values = true)]
    angle_tx: Option<f64>,
    #[arg(long = "angle-rx", allow_hyphen_values = true)]
    angle_rx: Option<f64>,
    /// In-band SNR in dB, or `inf`.
    #[arg(long, allow_hyphen_values = true)]
    snr: Option<f64>,
    /// Relative velocity in m/s, positive when receding.
    #[arg(long, allow_hyphen_values = true)]
    velocity: Option<f64>,
    #[arg(long = "skew-ppm", allow_hyphen_values = true)]
    skew_ppm: Option<f64>,
    #[arg(long = "jam-freq")]
    jam_freq: Option<f64>,
    #[arg(long = "jam-amp")]
    jam_amp: Option<f64>,
}

#[derive(Args)]
struct EncodeArgs {
    #[command(flatten)]
    modem: ModemFlags,
    /// UTF-8 text payload.
    #[arg(long, conflicts_with = "file", required_unless_present = "file")]
    text: Option<String>,
    /// Binary payload file.
    #[arg(long)]
    file: Option<PathBuf>,
    /// Output WAV path, `-` for stdout.
    #[arg(long, default_value = "-")]
    out: String,
}

#[derive(Args)]
struct DecodeArgs {
    #[command(flatten)]
    modem: ModemFlags,
    /// Input WAV path, `-` for stdin.
    #[arg(long = "in", default_value = "-")]
    input: String,
    /// File holding the payload that was sent; enables quality reporting.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long = "no-phase-track")]
    no_phase_track: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    modem: ModemFlags,
    #[command(flatten)]
    channel: ChannelFlags,
    #[arg(long = "in", default_value = "-")]
    input: String,
    #[arg(long, default_value = "-")]
    out: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    modem: ModemFlags,
    #[command(flatten)]
    channel: ChannelFlags,
    /// distance_m, tx_angle_deg, symbol_period_samples, snr_db or carrier_freq_hz.
    #[arg(long)]
    axis: String,
    /// `start:stop:step` (inclusive) or a comma-separated list.
    #[arg(long, allow_hyphen_values = true)]
    values: String,
    #[arg(long, default_value_t = 16)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV output path, `-` for stdout.
    #[arg(long, default_value = "-")]
    out: String,
    #[arg(long = "no-phase-track")]
    no_phase_track: bool,
}

#[derive(Args)]
struct CalibrateArgs {
    #[command(flatten)]
    modem: ModemFlags,
    #[command(flatten)]
    channel: ChannelFlags,
    /// Candidate carriers; defaults to 20000:23500:500.
    #[arg(long)]
    values: Option<String>,
    #[arg(long, default_value_t = CALIBRATION_TRIALS)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<ModemError> for Failure {
    fn from(e: ModemError) -> Self {
        let code = match e {
            ModemError::ConfigInvalid(_)
            | ModemError::InvalidProfile(_)
            | ModemError::UnknownAxis(_)
            | ModemError::Parse { .. } => 2,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure {
            code: 1,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn modem_config(flags: &ModemFlags) -> Result<ModemConfig, Failure> {
    let mut cfg = match std::env::var_os("BATNET_CONFIG") {
        Some(path) if !path.is_empty() => ModemConfig::from_file(Path::new(&path))?,
        _ => ModemConfig::default(),
    };
    if let Some(f) = flags.freq {
        cfg.carrier_freq_hz = f;
    }
    if let Some(n) = flags.symbol_len {
        cfg.symbol_period_samples = n;
    }
    if let Some(n) = flags.transition_len {
        cfg.transition_samples = n;
    }
    if let Some(a) = flags.amp {
        cfg.amplitude = a;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn channel_profile(flags: &ChannelFlags, seed: u64) -> Result<ChannelProfile, Failure> {
    let mut p = match &flags.profile {
        Some(path) => ChannelProfile::from_file(path)?,
        None => ChannelProfile::identity(),
    };
    let set = |target: &mut f64, v: Option<f64>| {
        if let Some(v) = v {
            *target = v;
        }
    };
    set(&mut p.distance_m, flags.distance);
    set(&mut p.tx_angle_deg, flags.angle_tx);
    set(&mut p.rx_angle_deg, flags.angle_rx);
    set(&mut p.snr_db, flags.snr);
    set(&mut p.relative_velocity_mps, flags.velocity);
    set(&mut p.clock_skew_ppm, flags.skew_ppm);
    match (flags.jam_freq, flags.jam_amp) {
        (Some(freq_hz), amp) => {
            p.jammer = Some(Jammer {
                freq_hz,
                amplitude: amp.or(p.jammer.map(|j| j.amplitude)).unwrap_or(1.0),
            })
        }
        (None, Some(amplitude)) => match p.jammer.as_mut() {
            Some(j) => j.amplitude = amplitude,
            None => return Err(usage("--jam-amp needs --jam-freq or a profile jammer")),
        },
        (None, None) => {}
    }
    p.rng_seed = seed;
    p.validate()?;
    Ok(p)
}

/// `start:stop:step` inclusive, or `a,b,c`.
fn parse_values(text: &str) -> Result<Vec<f64>, Failure> {
    let bad = || usage(format!("cannot parse values `{text}`"));
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() == 3 {
        let nums = parts
            .iter()
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>, _>>()?;
        let (start, stop, step) = (nums[0], nums[1], nums[2]);
        if step <= 0.0 || stop < start {
            return Err(bad());
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        return Ok((0..count).map(|i| start + step * i as f64).collect());
    }
    text.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| bad()))
        .collect()
}

fn read_input(path: &str) -> Result<PcmBuffer, Failure> {
    if path == "-" {
        let mut bytes = Vec::new();
        std::io::stdin().read_to_end(&mut bytes)?;
        Ok(read_wav(Cursor::new(bytes))?)
    } else {
        Ok(batnet::wav::read_wav_file(path)?)
    }
}

fn write_output(path: &str, pcm: &PcmBuffer) -> Result<(), Failure> {
    if path == "-" {
        let mut buf = Cursor::new(Vec::new());
        write_wav(&mut buf, pcm)?;
        let mut out = std::io::stdout().lock();
        out.write_all(buf.get_ref())?;
        out.flush()?;
    } else {
        batnet::wav::write_wav_file(path, pcm)?;
    }
    Ok(())
}

fn encode(args: EncodeArgs) -> Result<(), Failure> {
    let cfg = modem_config(&args.modem)?;
    let payload = match (&args.text, &args.file) {
        (Some(t), _) => t.as_bytes().to_vec(),
        (None, Some(f)) => std::fs::read(f)?,
        (None, None) => return Err(usage("one of --text or --file is required")),
    };
    let frame = build_frame(&payload, &cfg)?;
    let pcm = modulate(&frame, &cfg)?;
    write_output(&args.out, &pcm)?;
    eprintln!("payload: {} bytes", payload.len());
    eprintln!("symbols: {}", frame.symbol_sequence.len());
    eprintln!("samples: {}", pcm.len());
    eprintln!("duration: {:.3} s", pcm.duration_secs());
    eprintln!("raw bit rate: {:.2} bit/s", cfg.raw_bit_rate());
    eprintln!("effective bit rate: {:.2} bit/s", cfg.effective_bit_rate());
    Ok(())
}

fn decode(args: DecodeArgs) -> Result<(), Failure> {
    let cfg = modem_config(&args.modem)?;
    let pcm = read_input(&args.input)?;
    let opts = ReceiveOptions {
        phase_tracking: !args.no_phase_track,
    };
    let rx = receive(&pcm, &cfg, opts)?;
    eprintln!(
        "sync at sample {} (correlation {:.3}, coherence {:.3}, reference {:.3} rad)",
        rx.sync.frame_start_sample,
        rx.sync.sync_correlation,
        rx.sync.preamble_coherence,
        rx.sync.reference_phase_rad
    );
    let track: Vec<String> = rx
        .frame
        .cumulative_phase_track
        .iter()
        .map(|p| format!("{p:.3}"))
        .collect();
    eprintln!("phase track: [{}]", track.join(", "));
    eprintln!(
        "blocks failed: {}, flips used: {}",
        rx.frame.blocks_failed, rx.frame.flips_used
    );
    if let Some(path) = &args.truth {
        let truth = std::fs::read(path)?;
        let frame = build_frame(&truth, &cfg)?;
        let sent = frame.coded_symbols(&cfg);
        let n = sent.len().min(rx.softs.len());
        let phases = rx.frame.symbol_phases(cfg.symbols_per_block());
        let q = transmission_quality(&sent[..n], &rx.softs[..n], &phases[..n])?;
        eprintln!(
            "quality: {:.4} ({} correct, {} adjacent of {})",
            q.quality,
            q.correct,
            q.adjacent,
            sent.len()
        );
        eprintln!("payload match: {}", rx.payload() == truth.as_slice());
    }
    let mut out = std::io::stdout().lock();
    out.write_all(rx.payload())?;
    out.flush()?;
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<(), Failure> {
    let cfg = modem_config(&args.modem)?;
    let profile = channel_profile(&args.channel, args.seed)?;
    let pcm = read_input(&args.input)?;
    let out = apply_channel(&pcm, &profile, cfg.carrier_freq_hz)?;
    write_output(&args.out, &out)?;
    eprintln!(
        "channel gain {:.4} at {} Hz, resample ratio {:.9}",
        profile.gain_at(cfg.carrier_freq_hz),
        cfg.carrier_freq_hz,
        profile.resample_ratio()
    );
    Ok(())
}

fn evaluate(args: EvaluateArgs) -> Result<(), Failure> {
    let cfg = modem_config(&args.modem)?;
    let profile = channel_profile(&args.channel, args.seed)?;
    let values = parse_values(&args.values)?;
    if args.trials == 0 {
        return Err(usage("--trials must be at least 1"));
    }
    let opts = SweepOptions {
        seed: args.seed,
        trial: TrialOptions {
            phase_tracking: !args.no_phase_track,
            ..TrialOptions::default()
        },
    };
    let rows = run_sweep(&cfg, &profile, &args.axis, &values, args.trials, opts)?;
    let axis = args.axis.parse::<batnet::evaluation::Axis>()?;
    if args.out == "-" {
        write_csv(std::io::stdout().lock(), axis.name(), &rows)?;
    } else {
        write_csv(std::fs::File::create(&args.out)?, axis.name(), &rows)?;
    }
    for (v, q) in mean_quality_by_value(&rows) {
        eprintln!("{} = {v}: mean quality {q:.4}", axis.name());
    }
    Ok(())
}

fn calibrate(args: CalibrateArgs) -> Result<(), Failure> {
    let cfg = modem_config(&args.modem)?;
    let profile = channel_profile(&args.channel, args.seed)?;
    let freqs = match &args.values {
        Some(v) => parse_values(v)?,
        None => default_calibration_frequencies(),
    };
    if args.trials == 0 {
        return Err(usage("--trials must be at least 1"));
    }
    let opts = SweepOptions {
        seed: args.seed,
        trial: TrialOptions::default(),
    };
    let result = calibrate_link(&cfg, &profile, &freqs, args.trials, opts)?;
    for (f, q) in &result.mean_quality {
        eprintln!("{f:>8} Hz: mean quality {q:.4}");
    }
    if result.all_failed {
        eprintln!("warning: no frequency achieved sync; falling back to the first candidate");
    }
    println!("{}", result.best_freq_hz);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Encode(a) => encode(a),
        Command::Decode(a) => decode(a),
        Command::Simulate(a) => simulate(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Calibrate(a) => calibrate(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
