use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use polar_cpbp::bp::Kernel;
use polar_cpbp::channel::{sigma_from_ebn0, RateMode};
use polar_cpbp::code::{check_bits, CRC16_NR};
use polar_cpbp::cpbp::{CheckRule, CpbpConfig};
use polar_cpbp::harness::{
    generate_frame, point_seed, sweep_with_progress, write_csv, CodeParams, DecoderSpec, ExperimentConfig,
    DecoderFactory, FrameRecord, LatencyReport, PointSetup, StopRule,
};
use polar_cpbp::neural::{count_weights, save_weights, train_with_progress, Granularity, Scheme, TrainConfig, WeightMeta};
use polar_cpbp::{Error, Result};

#[derive(Parser)]
#[command(version, about = "CRC-polar belief-propagation decoding and FER simulation")]
struct Cli {
    /// Master seed of every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CodeArgs {
    #[arg(long = "len", default_value_t = 128)]
    len: usize,
    #[arg(long = "k-info", default_value_t = 80)]
    k_info: usize,
    #[arg(long = "crc-len", default_value_t = 16)]
    crc_len: usize,
    /// CRC generator as hex, leading term omitted. Defaults to the NR
    /// polynomial for 16 bits.
    #[arg(long = "crc-poly", value_parser = parse_hex)]
    crc_poly: Option<u64>,
    /// Reliability table, one index per line, least reliable first.
    #[arg(long)]
    reliability: Option<PathBuf>,
}

impl CodeArgs {
    fn params(&self) -> Result<CodeParams> {
        let crc_poly = match (self.crc_poly, self.crc_len) {
            (Some(p), _) => p,
            (None, 0) => 0,
            (None, 16) => CRC16_NR,
            (None, n) => return Err(Error::Config(format!("--crc-poly is required for a {n}-bit CRC"))),
        };
        Ok(CodeParams {
            len: self.len,
            k_info: self.k_info,
            crc_len: self.crc_len,
            crc_poly,
            reliability: self.reliability.clone(),
        })
    }
}

#[derive(Args, Clone)]
struct DecoderArgs {
    #[arg(long, default_value_t = 30)]
    imax: usize,
    /// Defaults to `--imax` (CRC for early stopping only).
    #[arg(long)]
    ithr: Option<usize>,
    #[arg(long, default_value = "minsum")]
    kernel: Kernel,
    /// CRC check-node rule.
    #[arg(long = "crc-rule", default_value = "minsum")]
    crc_rule: CheckRule,
    /// Weighted decoder scheme: ncpbp, nnms, nnms-rnn.
    #[arg(long)]
    scheme: Option<Scheme>,
    /// Weight file for a weighted scheme; all-ones when absent.
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long, default_value = "per-stage")]
    granularity: Granularity,
}

impl DecoderArgs {
    fn spec(&self) -> DecoderSpec {
        let i_thr = self.ithr.unwrap_or(self.imax);
        match self.scheme {
            None | Some(Scheme::Unweighted) => {
                DecoderSpec::Cpbp { i_max: self.imax, i_thr, kernel: self.kernel, crc_rule: self.crc_rule }
            }
            Some(scheme) => DecoderSpec::Weighted {
                scheme,
                i_max: self.imax,
                i_thr,
                kernel: self.kernel,
                granularity: self.granularity,
                weights: self.weights.clone(),
            },
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// FER/BER sweep over Eb/N0 points, written as CSV.
    Simulate {
        /// TOML experiment file; overrides the decoder and sweep flags.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        code: CodeArgs,
        #[command(flatten)]
        decoder: DecoderArgs,
        /// Comma-separated Eb/N0 points in dB.
        #[arg(long, value_delimiter = ',', default_value = "4.5,5.0")]
        ebn0: Vec<f64>,
        #[arg(long = "rate-mode", default_value = "info")]
        rate_mode: RateMode,
        #[arg(long = "min-frames", default_value_t = 10_000)]
        min_frames: u64,
        #[arg(long = "min-errors", default_value_t = 50)]
        min_errors: u64,
        #[arg(long = "max-frames", default_value_t = 10_000_000)]
        max_frames: u64,
    },
    /// Worst-case latency per decoder, optionally with a measured average.
    Latency {
        /// `I_MAX,I_THR` pairs.
        #[arg(long = "decoder", value_parser = parse_pair, default_values = ["30,15", "200,50"])]
        decoders: Vec<(usize, usize)>,
        #[command(flatten)]
        code: CodeArgs,
        /// Measure the average latency at this Eb/N0.
        #[arg(long)]
        ebn0: Option<f64>,
        #[arg(long, default_value_t = 10_000)]
        frames: u64,
        #[arg(long = "rate-mode", default_value = "info")]
        rate_mode: RateMode,
    },
    /// Train decoder weights on zero-codeword frames.
    Train {
        #[command(flatten)]
        code: CodeArgs,
        #[arg(long, default_value = "ncpbp")]
        scheme: Scheme,
        #[arg(long, default_value_t = 30)]
        imax: usize,
        #[arg(long, default_value_t = 15)]
        ithr: usize,
        #[arg(long, default_value = "minsum")]
        kernel: Kernel,
        #[arg(long, default_value = "per-stage")]
        granularity: Granularity,
        #[arg(long, value_delimiter = ',', default_value = "4,4.5,5,5.5")]
        snrs: Vec<f64>,
        /// Training samples per SNR point.
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        /// Held-out samples per SNR point.
        #[arg(long, default_value_t = 1000)]
        heldout: usize,
        #[arg(long, default_value_t = 40)]
        epochs: usize,
        #[arg(long, default_value_t = 64)]
        batch: usize,
        #[arg(long, default_value_t = 1e-3)]
        lr: f64,
        #[arg(long = "rate-mode", default_value = "info")]
        rate_mode: RateMode,
    },
    /// Number of trainable weights of a scheme.
    CountWeights {
        #[command(flatten)]
        code: CodeArgs,
        #[arg(long, default_value = "ncpbp")]
        scheme: Scheme,
        #[arg(long, default_value_t = 30)]
        imax: usize,
        #[arg(long, default_value_t = 15)]
        ithr: usize,
        #[arg(long, default_value = "per-stage")]
        granularity: Granularity,
    },
    /// Encode a payload given as a 0/1 string, or a random one.
    Encode {
        #[command(flatten)]
        code: CodeArgs,
        #[arg(long)]
        payload: Option<String>,
    },
    /// Decode frames and print one CSV row per frame.
    Decode {
        #[command(flatten)]
        code: CodeArgs,
        #[command(flatten)]
        decoder: DecoderArgs,
        /// Channel LLRs, one whitespace-separated frame per line; `-` for
        /// stdin. Without it, random frames are simulated at `--ebn0`.
        #[arg(long)]
        llr: Option<PathBuf>,
        #[arg(long, default_value_t = 4.5)]
        ebn0: f64,
        #[arg(long, default_value_t = 1)]
        frames: u64,
        #[arg(long = "rate-mode", default_value = "info")]
        rate_mode: RateMode,
    },
}

fn parse_hex(s: &str) -> std::result::Result<u64, String> {
    let digits = s.trim_start_matches("0x").trim_start_matches("0X");
    u64::from_str_radix(digits, 16).map_err(|e| format!("{s:?}: {e}"))
}

fn parse_pair(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected I_MAX,I_THR, got {s:?}"))?;
    let p = |x: &str| x.trim().parse::<usize>().map_err(|e| format!("{x:?}: {e}"));
    Ok((p(a)?, p(b)?))
}

fn open_out(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn parse_bits(s: &str) -> Result<Vec<u8>> {
    let bits: Vec<u8> = s.chars().filter(|c| !c.is_whitespace()).map(|c| (c as u8).wrapping_sub(b'0')).collect();
    check_bits(&bits)?;
    Ok(bits)
}

fn bits_string(bits: &[u8]) -> String {
    bits.iter().map(|b| char::from(b'0' + b)).collect()
}

fn read_llr_frames(path: &PathBuf) -> Result<Vec<Vec<f64>>> {
    let mut text = String::new();
    if path.as_os_str() == "-" {
        io::stdin().read_to_string(&mut text)?;
    } else {
        text = std::fs::read_to_string(path)?;
    }
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split_whitespace()
                .map(|v| v.parse::<f64>().map_err(|e| Error::Parse(format!("LLR {v:?}: {e}"))))
                .collect()
        })
        .collect()
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    match cli.command {
        Command::Simulate { config, code, decoder, ebn0, rate_mode, min_frames, min_errors, max_frames } => {
            let (cfg, text) = match config {
                Some(path) => {
                    let (mut cfg, text) = ExperimentConfig::load(&path)?;
                    if cli.out.is_some() {
                        cfg.output = cli.out.clone();
                    }
                    (cfg, text)
                }
                None => {
                    let mut cfg = ExperimentConfig::new(decoder.spec(), ebn0);
                    cfg.code = code.params()?;
                    cfg.stop = StopRule { min_frames, min_errors, max_frames };
                    cfg.rate_mode = rate_mode;
                    cfg.seed = cli.seed;
                    cfg.output = cli.out.clone();
                    let text = cfg.to_toml()?;
                    (cfg, text)
                }
            };
            let sweep = sweep_with_progress(&cfg, |p| {
                eprintln!(
                    "{:.2} dB: {} frames, {} errors, FER {:.3e} [{:.3e}, {:.3e}], avg {:.1} steps{}",
                    p.eb_n0_db,
                    p.frames,
                    p.frame_errors,
                    p.fer,
                    p.fer_lo,
                    p.fer_hi,
                    p.avg_time_steps,
                    if p.censored { " (censored)" } else { "" }
                )
            })?;
            if !sweep.fer_monotone {
                eprintln!("warning: FER is not monotone in Eb/N0");
            }
            write_csv(open_out(&cfg.output)?, &sweep, &text)?;
        }
        Command::Latency { decoders, code, ebn0, frames, rate_mode } => {
            let spec = code.params()?.build()?;
            let cfgs = decoders
                .iter()
                .map(|&(i_max, i_thr)| CpbpConfig::new(i_max, i_thr, Kernel::MinSum))
                .collect::<Result<Vec<_>>>()?;
            let mut report = LatencyReport::new(&cfgs, spec.log_len());
            if let Some(snr) = ebn0 {
                for (row, cfg) in report.rows.iter_mut().zip(&cfgs) {
                    let dec = DecoderSpec::Cpbp { i_max: cfg.i_max, i_thr: cfg.i_thr, kernel: cfg.kernel, crc_rule: cfg.crc_rule }
                        .build(&spec)?;
                    let setup = PointSetup { spec: &spec, decoder: &dec, rate_mode, seed: cli.seed };
                    let p = setup.simulate_point(snr, &StopRule::fixed(frames))?;
                    *row = row.clone().with_measurement(&p);
                }
            }
            if report.rows.len() >= 2 {
                let last = report.rows.len() - 1;
                for i in 0..last {
                    let (full, short) = report.ratio(i, last);
                    eprintln!(
                        "{} / {}: worst-case ratio {:.4} (without final stage {:.4})",
                        report.rows[i].label, report.rows[last].label, full, short
                    );
                }
            }
            report.write_csv(open_out(&cli.out)?)?;
        }
        Command::Train {
            code,
            scheme,
            imax,
            ithr,
            kernel,
            granularity,
            snrs,
            samples,
            heldout,
            epochs,
            batch,
            lr,
            rate_mode,
        } => {
            let spec = code.params()?.build()?;
            let cfg = CpbpConfig::new(imax, ithr, kernel)?;
            let tc = TrainConfig {
                scheme,
                granularity,
                learning_rate: lr,
                batch_size: batch,
                epochs,
                snr_points_db: snrs,
                samples_per_snr: samples,
                heldout_per_snr: heldout,
                rate_mode,
                seed: cli.seed,
                ..TrainConfig::default()
            };
            let report = train_with_progress(&spec, cfg, &tc, |epoch, train, held| {
                eprintln!("epoch {epoch}: train loss {train:.6}, held-out loss {held:.6}")
            })?;
            match &cli.out {
                Some(path) => save_weights(&report.weights, path)?,
                None => println!("{}", polar_cpbp::neural::weights_to_json(&report.weights)?),
            }
        }
        Command::CountWeights { code, scheme, imax, ithr, granularity } => {
            let spec = code.params()?.build()?;
            let cfg = CpbpConfig::new(imax, ithr, Kernel::MinSum)?;
            let meta = WeightMeta::new(&spec, &cfg, granularity);
            let c = count_weights(scheme, &meta, spec.crc_graph()?.num_edges());
            let mut out = open_out(&cli.out)?;
            writeln!(out, "decoder: {}", c.label)?;
            writeln!(out, "slots per unit: {}", c.slots_per_unit)?;
            writeln!(out, "units per iteration: {}", c.units_per_iteration)?;
            writeln!(out, "weighted iterations: {}", c.iteration_units)?;
            writeln!(out, "polar weights: {}", c.polar)?;
            writeln!(out, "CRC weights: {}", c.crc)?;
            writeln!(out, "total: {}", c.total)?;
            if let (Some(r), Some(d)) = (c.reference, c.delta()) {
                writeln!(out, "reference total: {r} (delta {d:+})")?;
            }
        }
        Command::Encode { code, payload } => {
            let spec = code.params()?.build()?;
            let payload = match payload {
                Some(s) => parse_bits(&s)?,
                None => {
                    let mut rng = ChaCha20Rng::seed_from_u64(cli.seed);
                    (0..spec.k_info()).map(|_| u8::from(rng.random::<bool>())).collect()
                }
            };
            let x = spec.encode(&payload)?;
            let mut out = open_out(&cli.out)?;
            writeln!(out, "payload  {}", bits_string(&payload))?;
            writeln!(out, "codeword {}", bits_string(&x))?;
        }
        Command::Decode { code, decoder, llr, ebn0, frames, rate_mode } => {
            let spec = code.params()?.build()?;
            let dec = decoder.spec().build(&spec)?;
            let mut fd = dec.build(&spec)?;
            let mut w = csv::Writer::from_writer(open_out(&cli.out)?);
            match llr {
                Some(path) => {
                    for (i, frame) in read_llr_frames(&path)?.iter().enumerate() {
                        let o = fd.decode_frame(frame)?;
                        w.serialize(FrameRecord {
                            frame: i as u64,
                            iterations: o.iterations,
                            crc_ok: o.crc_ok,
                            time_steps: o.time_steps,
                            bit_errors: 0,
                        })?;
                    }
                }
                None => {
                    let sigma = sigma_from_ebn0(ebn0, rate_mode.rate(spec.len(), spec.k_info(), spec.crc_len()))?;
                    let seed = point_seed(cli.seed, ebn0);
                    for frame in 0..frames {
                        let (payload, llr) = generate_frame(&spec, sigma, seed, frame)?;
                        let o = fd.decode_frame(&llr)?;
                        let bit_errors = o.payload.iter().zip(&payload).filter(|(a, b)| a != b).count();
                        w.serialize(FrameRecord {
                            frame,
                            iterations: o.iterations,
                            crc_ok: o.crc_ok,
                            time_steps: o.time_steps,
                            bit_errors,
                        })?;
                    }
                }
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
