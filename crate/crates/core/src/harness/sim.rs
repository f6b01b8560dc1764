use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::binomial_interval;
use crate::channel::{add_awgn, channel_llr, frame_rng, modulate, sigma_from_ebn0, RateMode};
use crate::code::PolarCodeSpec;
use crate::cpbp::{CpbpConfig, CpbpDecoder, DecodeOutcome};
use crate::neural::{NeuralDecoder, WeightSet};
use crate::{Error, Result};

/// Anything that turns one frame of channel LLRs into a decision.
pub trait FrameDecoder {
    fn decode_frame(&mut self, chan_llr: &[f64]) -> Result<DecodeOutcome>;
}

impl FrameDecoder for CpbpDecoder<'_> {
    fn decode_frame(&mut self, chan_llr: &[f64]) -> Result<DecodeOutcome> {
        self.decode(chan_llr)
    }
}

impl FrameDecoder for NeuralDecoder<'_> {
    fn decode_frame(&mut self, chan_llr: &[f64]) -> Result<DecodeOutcome> {
        self.decode(chan_llr)
    }
}

/// Builds one [`FrameDecoder`] per simulation worker.
pub trait DecoderFactory: Sync {
    fn label(&self) -> String;
    fn build<'a>(&self, spec: &'a PolarCodeSpec) -> Result<Box<dyn FrameDecoder + 'a>>;
}

/// The decoders of this crate.
#[derive(Debug, Clone)]
pub enum Decoder {
    Cpbp(CpbpConfig),
    Weighted { cfg: CpbpConfig, weights: Arc<WeightSet> },
}

impl Decoder {
    pub fn config(&self) -> CpbpConfig {
        match self {
            Decoder::Cpbp(cfg) | Decoder::Weighted { cfg, .. } => *cfg,
        }
    }
}

impl DecoderFactory for Decoder {
    fn label(&self) -> String {
        match self {
            Decoder::Cpbp(cfg) => cfg.label(),
            Decoder::Weighted { cfg, weights } => weights.label(cfg),
        }
    }

    fn build<'a>(&self, spec: &'a PolarCodeSpec) -> Result<Box<dyn FrameDecoder + 'a>> {
        Ok(match self {
            Decoder::Cpbp(cfg) => Box::new(CpbpDecoder::new(spec, *cfg)?),
            Decoder::Weighted { cfg, weights } => Box::new(NeuralDecoder::new(spec, *cfg, (**weights).clone())?),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopRule {
    pub min_frames: u64,
    pub min_errors: u64,
    pub max_frames: u64,
}

impl Default for StopRule {
    fn default() -> Self {
        Self { min_frames: 10_000, min_errors: 50, max_frames: 10_000_000 }
    }
}

impl StopRule {
    pub fn fixed(frames: u64) -> Self {
        Self { min_frames: frames, min_errors: 1, max_frames: frames }
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_frames == 0 || self.min_errors == 0 || self.max_frames < self.min_frames {
            return Err(Error::Config(format!("invalid stop rule {self:?}")));
        }
        Ok(())
    }
}

/// Result of decoding one simulated frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FrameRecord {
    pub frame: u64,
    /// `I_ET`.
    pub iterations: usize,
    pub crc_ok: bool,
    pub time_steps: usize,
    pub bit_errors: usize,
}

impl FrameRecord {
    pub fn is_error(&self) -> bool {
        self.bit_errors > 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FerPoint {
    pub eb_n0_db: f64,
    pub frames: u64,
    pub frame_errors: u64,
    pub bit_errors: u64,
    pub fer: f64,
    pub ber: f64,
    pub fer_lo: f64,
    pub fer_hi: f64,
    pub avg_time_steps: f64,
    pub avg_iterations: f64,
    pub undetected_errors: u64,
    /// Frame cap hit before `min_errors`; `fer` is then an upper-bound
    /// estimate.
    pub censored: bool,
    pub wallclock_s: f64,
}

impl FerPoint {
    pub fn from_records(eb_n0_db: f64, k_info: usize, records: &[FrameRecord], stop: &StopRule) -> Self {
        let frames = records.len() as u64;
        let frame_errors = records.iter().filter(|r| r.is_error()).count() as u64;
        let bit_errors: u64 = records.iter().map(|r| r.bit_errors as u64).sum();
        let undetected_errors = records.iter().filter(|r| r.is_error() && r.crc_ok).count() as u64;
        let nf = frames.max(1) as f64;
        let (fer_lo, fer_hi) = binomial_interval(frame_errors, frames, 0.95);
        Self {
            eb_n0_db,
            frames,
            frame_errors,
            bit_errors,
            fer: frame_errors as f64 / nf,
            ber: bit_errors as f64 / (nf * k_info as f64),
            fer_lo,
            fer_hi,
            avg_time_steps: records.iter().map(|r| r.time_steps as f64).sum::<f64>() / nf,
            avg_iterations: records.iter().map(|r| r.iterations as f64).sum::<f64>() / nf,
            undetected_errors,
            censored: frame_errors < stop.min_errors,
            wallclock_s: 0.0,
        }
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.fer_lo, self.fer_hi)
    }
}

/// Everything needed to simulate one Eb/N0 point.
#[derive(Clone, Copy)]
pub struct PointSetup<'a> {
    pub spec: &'a PolarCodeSpec,
    pub decoder: &'a dyn DecoderFactory,
    pub rate_mode: RateMode,
    pub seed: u64,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the frame streams at one Eb/N0 point. Depends on the point's
/// value, not its position in a sweep.
pub fn point_seed(seed: u64, eb_n0_db: f64) -> u64 {
    splitmix(seed ^ splitmix(eb_n0_db.to_bits()))
}

/// Channel LLRs and payload of frame `frame`.
pub fn generate_frame(spec: &PolarCodeSpec, sigma: f64, seed: u64, frame: u64) -> Result<(Vec<u8>, Vec<f64>)> {
    let mut rng = frame_rng(seed, frame);
    let payload: Vec<u8> = (0..spec.k_info()).map(|_| u8::from(rng.random::<bool>())).collect();
    let x = spec.encode(&payload)?;
    let y = add_awgn(&modulate(&x), sigma, &mut rng);
    Ok((payload, channel_llr(&y, sigma)))
}

impl PointSetup<'_> {
    pub fn sigma(&self, eb_n0_db: f64) -> Result<f64> {
        let rate = self.rate_mode.rate(self.spec.len(), self.spec.k_info(), self.spec.crc_len());
        sigma_from_ebn0(eb_n0_db, rate)
    }

    /// Decodes frames `range` at `eb_n0_db`; output is ordered by frame and
    /// independent of the worker count.
    pub fn simulate_frames(&self, eb_n0_db: f64, range: std::ops::Range<u64>) -> Result<Vec<FrameRecord>> {
        let sigma = self.sigma(eb_n0_db)?;
        let seed = point_seed(self.seed, eb_n0_db);
        let spec = self.spec;
        range
            .into_par_iter()
            .map_init(
                || self.decoder.build(spec),
                |dec, frame| {
                    let dec = dec.as_mut().map_err(|e| Error::Config(e.to_string()))?;
                    let (payload, llr) = generate_frame(spec, sigma, seed, frame)?;
                    let out = dec.decode_frame(&llr)?;
                    let bit_errors = out.payload.iter().zip(&payload).filter(|(a, b)| a != b).count();
                    Ok(FrameRecord {
                        frame,
                        iterations: out.iterations,
                        crc_ok: out.crc_ok,
                        time_steps: out.time_steps,
                        bit_errors,
                    })
                },
            )
            .collect()
    }

    /// Runs chunks of frames until the stop rule is met.
    pub fn simulate_point(&self, eb_n0_db: f64, stop: &StopRule) -> Result<FerPoint> {
        stop.validate()?;
        let started = Instant::now();
        let chunk = 4096u64;
        let mut records = Vec::new();
        let mut errors = 0u64;
        loop {
            let start = records.len() as u64;
            let done = start >= stop.max_frames || (start >= stop.min_frames && errors >= stop.min_errors);
            if done {
                break;
            }
            let mut end = (start + chunk).min(stop.max_frames);
            if start < stop.min_frames {
                end = end.min(stop.min_frames);
            }
            let batch = self.simulate_frames(eb_n0_db, start..end)?;
            errors += batch.iter().filter(|r| r.is_error()).count() as u64;
            records.extend(batch);
        }
        let mut point = FerPoint::from_records(eb_n0_db, self.spec.k_info(), &records, stop);
        point.wallclock_s = started.elapsed().as_secs_f64();
        Ok(point)
    }
}
