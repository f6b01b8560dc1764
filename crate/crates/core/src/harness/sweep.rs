use std::io::Write;

use super::config::ExperimentConfig;
use super::sim::{DecoderFactory, FerPoint, PointSetup};
use crate::channel::RNG_NAME;
use crate::{Error, Result};

const CONFIG_PREFIX: &str = "# config: ";

/// Points of one sweep plus the monotonicity diagnostic.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub label: String,
    pub points: Vec<FerPoint>,
    /// FER is nonincreasing in Eb/N0. Reported, never enforced.
    pub fer_monotone: bool,
}

impl Sweep {
    pub fn new(label: String, points: Vec<FerPoint>) -> Self {
        let fer_monotone = points.windows(2).all(|w| w[1].fer <= w[0].fer);
        Self { label, points, fer_monotone }
    }
}

pub fn sweep(cfg: &ExperimentConfig) -> Result<Sweep> {
    sweep_with_progress(cfg, |_| {})
}

/// Runs every SNR point of `cfg` in order, reporting each as it finishes.
pub fn sweep_with_progress(cfg: &ExperimentConfig, mut progress: impl FnMut(&FerPoint)) -> Result<Sweep> {
    cfg.validate()?;
    let spec = cfg.code.build()?;
    let decoder = cfg.decoder.build(&spec)?;
    let setup = PointSetup { spec: &spec, decoder: &decoder, rate_mode: cfg.rate_mode, seed: cfg.seed };
    let mut points = Vec::with_capacity(cfg.snr_db.len());
    for &snr in &cfg.snr_db {
        let p = setup.simulate_point(snr, &cfg.stop)?;
        progress(&p);
        points.push(p);
    }
    Ok(Sweep::new(decoder.label(), points))
}

/// Writes `#` provenance lines, with `config_text` echoed line by line,
/// followed by one CSV row per point.
pub fn write_csv<W: Write>(mut out: W, sweep: &Sweep, config_text: &str) -> Result<()> {
    writeln!(out, "# decoder: {}", sweep.label)?;
    writeln!(out, "# generator: {} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"))?;
    writeln!(out, "# rng: {RNG_NAME}")?;
    for line in config_text.lines() {
        writeln!(out, "{CONFIG_PREFIX}{line}")?;
    }
    writeln!(out, "# fer_monotone: {}", sweep.fer_monotone)?;
    let mut w = csv::Writer::from_writer(out);
    for p in &sweep.points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(sweep: &Sweep, config_text: &str) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(&mut buf, sweep, config_text)?;
    String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
}

/// The config text echoed in a CSV written by [`write_csv`].
pub fn config_text_from_csv(text: &str) -> String {
    text.lines().filter_map(|l| l.strip_prefix(CONFIG_PREFIX).or((l == CONFIG_PREFIX.trim_end()).then_some(""))).fold(
        String::new(),
        |mut acc, l| {
            acc.push_str(l);
            acc.push('\n');
            acc
        },
    )
}

pub fn read_csv_points(text: &str) -> Result<Vec<FerPoint>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

impl ExperimentConfig {
    /// Recovers the configuration from the provenance header of a CSV.
    pub fn from_csv_header(text: &str) -> Result<Self> {
        Self::from_toml(&config_text_from_csv(text))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bp::Kernel;
    use crate::cpbp::CheckRule;
    use crate::harness::config::DecoderSpec;
    use crate::harness::StopRule;

    fn point(snr: f64, fer: f64) -> FerPoint {
        FerPoint {
            eb_n0_db: snr,
            frames: 10,
            frame_errors: (fer * 10.0) as u64,
            bit_errors: 0,
            fer,
            ber: 0.0,
            fer_lo: 0.0,
            fer_hi: 1.0,
            avg_time_steps: 7.0,
            avg_iterations: 1.0,
            undetected_errors: 0,
            censored: false,
            wallclock_s: 0.0,
        }
    }

    #[test]
    fn monotonicity_is_flagged() {
        assert!(Sweep::new("x".into(), vec![point(1.0, 0.5), point(2.0, 0.5), point(3.0, 0.1)]).fer_monotone);
        assert!(!Sweep::new("x".into(), vec![point(1.0, 0.1), point(2.0, 0.2)]).fer_monotone);
    }

    #[test]
    fn csv_roundtrip_keeps_config_and_rows() {
        let dec = DecoderSpec::Cpbp { i_max: 5, i_thr: 3, kernel: Kernel::MinSum, crc_rule: CheckRule::MinSum };
        let mut cfg = ExperimentConfig::new(dec, vec![1.0, 2.0]);
        cfg.stop = StopRule::fixed(20);
        let text = cfg.to_toml().unwrap();
        let s = Sweep::new("CPBP-(5,3)".into(), vec![point(1.0, 0.5), point(2.0, 0.2)]);
        let csv = csv_string(&s, &text).unwrap();
        assert!(csv.starts_with("# decoder: CPBP-(5,3)\n"));
        assert_eq!(config_text_from_csv(&csv), text);
        assert_eq!(ExperimentConfig::from_csv_header(&csv).unwrap(), cfg);
        assert_eq!(read_csv_points(&csv).unwrap(), s.points);
    }
}
