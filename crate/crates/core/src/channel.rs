//! BPSK over AWGN and channel LLRs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Generator used for every random stream in the crate. Recorded in output
/// provenance.
pub const RNG_NAME: &str = "ChaCha20 (rand_chacha 0.9), stream = frame index";

/// Which bits count toward the code rate in the Eb/N0 conversion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateMode {
    /// `K_info / N`.
    #[default]
    Info,
    /// `(K_info + crc_len) / N`.
    InfoCrc,
}

impl RateMode {
    pub fn rate(self, len: usize, k_info: usize, crc_len: usize) -> f64 {
        match self {
            RateMode::Info => k_info as f64 / len as f64,
            RateMode::InfoCrc => (k_info + crc_len) as f64 / len as f64,
        }
    }
}

impl std::str::FromStr for RateMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "info" => Ok(RateMode::Info),
            "info+crc" | "info-crc" => Ok(RateMode::InfoCrc),
            other => Err(Error::Parse(format!("unknown rate mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub eb_n0_db: f64,
    pub rate: f64,
    pub sigma: f64,
    pub seed: u64,
}

impl ChannelParams {
    pub fn new(eb_n0_db: f64, rate: f64, seed: u64) -> Result<Self> {
        Ok(Self { eb_n0_db, rate, sigma: sigma_from_ebn0(eb_n0_db, rate)?, seed })
    }
}

/// `sigma = sqrt(1 / (2 R 10^(Eb/N0 / 10)))`.
pub fn sigma_from_ebn0(eb_n0_db: f64, rate: f64) -> Result<f64> {
    if !(rate > 0.0 && rate <= 1.0) || !eb_n0_db.is_finite() {
        return Err(Error::Config(format!("rate {rate} must be in (0, 1] and Eb/N0 {eb_n0_db} finite")));
    }
    Ok((1.0 / (2.0 * rate * 10f64.powf(eb_n0_db / 10.0))).sqrt())
}

/// `1 - 2x`.
pub fn modulate(x: &[u8]) -> Vec<f64> {
    x.iter().map(|&b| 1.0 - 2.0 * f64::from(b)).collect()
}

pub fn add_awgn<R: Rng + ?Sized>(s: &[f64], sigma: f64, rng: &mut R) -> Vec<f64> {
    s.iter()
        .map(|&v| {
            let z: f64 = rng.sample(StandardNormal);
            v + sigma * z
        })
        .collect()
}

/// `2y / sigma^2`.
pub fn channel_llr(y: &[f64], sigma: f64) -> Vec<f64> {
    let scale = 2.0 / (sigma * sigma);
    y.iter().map(|&v| scale * v).collect()
}

/// Independent stream for frame `frame` under `seed`.
pub fn frame_rng(seed: u64, frame: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(frame);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modulation() {
        assert_eq!(modulate(&[0, 0, 0]), vec![1.0; 3]);
        assert_eq!(modulate(&[0, 1]), vec![1.0, -1.0]);
        let x = [1u8, 0, 1, 1];
        let back: Vec<u8> = modulate(&x).iter().map(|&s| ((1.0 - s) / 2.0) as u8).collect();
        assert_eq!(back, x);
    }

    #[test]
    fn llr_values() {
        assert!((channel_llr(&[1.0], 0.5f64.sqrt())[0] - 4.0).abs() < 1e-12);
        assert_eq!(channel_llr(&[0.0], 0.7)[0], 0.0);
        assert_eq!(channel_llr(&[-1.0], 1.0)[0], -2.0);
    }

    #[test]
    fn sigma_conversion() {
        assert!((sigma_from_ebn0(0.0, 0.5).unwrap() - 1.0).abs() < 1e-15);
        assert!((sigma_from_ebn0(10.0, 0.5).unwrap() - 0.1f64.sqrt()).abs() < 1e-15);
        assert!((sigma_from_ebn0(4.0, 80.0 / 128.0).unwrap() - 0.564345).abs() < 1e-6);
        assert!(sigma_from_ebn0(1.0, 0.0).is_err());
        assert!(sigma_from_ebn0(1.0, 1.5).is_err());
    }

    #[test]
    fn zero_noise_is_identity() {
        let s = modulate(&[0, 1, 1, 0]);
        let mut rng = frame_rng(1, 0);
        assert_eq!(add_awgn(&s, 0.0, &mut rng), s);
    }

    #[test]
    fn noise_statistics() {
        let sigma = 0.8;
        let mut rng = frame_rng(7, 3);
        let s = vec![0.0; 1_000_000];
        let y = add_awgn(&s, sigma, &mut rng);
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (y.len() - 1) as f64;
        assert!(mean.abs() < 4.0 * sigma / 1e3, "mean {mean}");
        assert!((var / (sigma * sigma) - 1.0).abs() < 0.01, "var {var}");
    }

    #[test]
    fn streams_are_deterministic_and_distinct() {
        let s = vec![1.0; 64];
        let a = add_awgn(&s, 1.0, &mut frame_rng(5, 9));
        let b = add_awgn(&s, 1.0, &mut frame_rng(5, 9));
        let c = add_awgn(&s, 1.0, &mut frame_rng(5, 10));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn noiseless_llr_signs_follow_bits() {
        let x = [0u8, 1, 1, 0, 1];
        for (llr, &b) in channel_llr(&modulate(&x), 0.9).iter().zip(&x) {
            assert_eq!(*llr > 0.0, b == 0);
        }
    }
}
