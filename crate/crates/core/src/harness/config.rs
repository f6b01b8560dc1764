use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::sim::{Decoder, StopRule};
use crate::bp::Kernel;
use crate::channel::RateMode;
use crate::code::{parse_reliability_table, PolarCodeSpec, CRC16_NR};
use crate::cpbp::{CheckRule, CpbpConfig};
use crate::neural::{load_weights_for, Granularity, Scheme, WeightSet};
use crate::{Error, Result};

/// Code parameters of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CodeParams {
    pub len: usize,
    pub k_info: usize,
    pub crc_len: usize,
    /// Generator bitmask without the leading term.
    pub crc_poly: u64,
    /// Reliability table file; the NR sequence when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reliability: Option<PathBuf>,
}

impl Default for CodeParams {
    fn default() -> Self {
        Self { len: 128, k_info: 80, crc_len: 16, crc_poly: CRC16_NR, reliability: None }
    }
}

impl CodeParams {
    pub fn build(&self) -> Result<PolarCodeSpec> {
        match &self.reliability {
            None => PolarCodeSpec::nr(self.len, self.k_info, self.crc_len, self.crc_poly),
            Some(path) => {
                let order = parse_reliability_table(&std::fs::read_to_string(path)?)?;
                PolarCodeSpec::new(self.len, self.k_info, self.crc_len, self.crc_poly, order)
            }
        }
    }
}

/// Which decoder a sweep runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DecoderSpec {
    Cpbp {
        i_max: usize,
        i_thr: usize,
        #[serde(default)]
        kernel: Kernel,
        #[serde(default)]
        crc_rule: CheckRule,
    },
    /// A weighted decoder. Without a weight file all weights are one.
    Weighted {
        scheme: Scheme,
        i_max: usize,
        i_thr: usize,
        #[serde(default)]
        kernel: Kernel,
        #[serde(default)]
        granularity: Granularity,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<PathBuf>,
    },
}

impl DecoderSpec {
    pub fn cpbp_config(&self) -> Result<CpbpConfig> {
        match *self {
            DecoderSpec::Cpbp { i_max, i_thr, kernel, crc_rule } => {
                Ok(CpbpConfig::new(i_max, i_thr, kernel)?.with_crc_rule(crc_rule))
            }
            DecoderSpec::Weighted { i_max, i_thr, kernel, .. } => CpbpConfig::new(i_max, i_thr, kernel),
        }
    }

    pub fn build(&self, spec: &PolarCodeSpec) -> Result<Decoder> {
        let cfg = self.cpbp_config()?;
        match self {
            DecoderSpec::Cpbp { .. } => Ok(Decoder::Cpbp(cfg)),
            DecoderSpec::Weighted { scheme, granularity, weights, .. } => {
                let ws = match weights {
                    Some(path) => {
                        let ws = load_weights_for(path, spec, &cfg)?;
                        if ws.scheme != *scheme {
                            return Err(Error::WeightMismatch(format!(
                                "{} holds {:?} weights, config asks for {scheme:?}",
                                path.display(),
                                ws.scheme
                            )));
                        }
                        ws
                    }
                    None => WeightSet::ones(*scheme, spec, &cfg, *granularity)?,
                };
                Ok(Decoder::Weighted { cfg, weights: Arc::new(ws) })
            }
        }
    }
}

/// A complete, reproducible FER experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub code: CodeParams,
    pub decoder: DecoderSpec,
    pub snr_db: Vec<f64>,
    #[serde(default)]
    pub stop: StopRule,
    #[serde(default)]
    pub rate_mode: RateMode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(decoder: DecoderSpec, snr_db: Vec<f64>) -> Self {
        Self {
            code: CodeParams::default(),
            decoder,
            snr_db,
            stop: StopRule::default(),
            rate_mode: RateMode::Info,
            seed: 0,
            output: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.snr_db.is_empty() {
            return Err(Error::Config("SNR list is empty".into()));
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) || self.snr_db.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!("SNR list must be finite and strictly increasing: {:?}", self.snr_db)));
        }
        self.stop.validate()?;
        self.decoder.cpbp_config()?;
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Reads a config file and keeps its text for provenance headers.
    pub fn load(path: impl AsRef<Path>) -> Result<(Self, String)> {
        let text = std::fs::read_to_string(path)?;
        Ok((Self::from_toml(&text)?, text))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cpbp(i_max: usize, i_thr: usize) -> DecoderSpec {
        DecoderSpec::Cpbp { i_max, i_thr, kernel: Kernel::MinSum, crc_rule: CheckRule::MinSum }
    }

    #[test]
    fn toml_roundtrip() {
        let mut cfg = ExperimentConfig::new(cpbp(30, 15), vec![4.5, 5.0]);
        cfg.seed = 9;
        let text = cfg.to_toml().unwrap();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn minimal_file_uses_defaults() {
        let text = "snr_db = [4.0]\n[decoder]\ntype = \"cpbp\"\ni_max = 30\ni_thr = 30\n";
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(cfg.code, CodeParams::default());
        assert_eq!(cfg.stop, StopRule::default());
        assert_eq!(cfg.decoder.cpbp_config().unwrap(), CpbpConfig::baseline(30));
    }

    #[test]
    fn rejects_bad_snr_lists() {
        assert!(ExperimentConfig::new(cpbp(30, 15), vec![]).validate().is_err());
        assert!(ExperimentConfig::new(cpbp(30, 15), vec![5.0, 4.5]).validate().is_err());
        assert!(ExperimentConfig::new(cpbp(30, 15), vec![4.5, 4.5]).validate().is_err());
        assert!(ExperimentConfig::new(cpbp(30, 31), vec![4.5]).validate().is_err());
    }

    #[test]
    fn weighted_without_file_is_all_ones() {
        let spec = PolarCodeSpec::nr_128_80();
        let d = DecoderSpec::Weighted {
            scheme: Scheme::Ncpbp,
            i_max: 4,
            i_thr: 2,
            kernel: Kernel::MinSum,
            granularity: Granularity::PerStage,
            weights: None,
        };
        match d.build(&spec).unwrap() {
            Decoder::Weighted { weights, .. } => assert!(weights.is_all_ones()),
            other => panic!("unexpected {other:?}"),
        }
    }
}
