use std::io::Write;

use serde::Serialize;

use super::sim::FerPoint;
use crate::cpbp::{latency_cpbp, latency_cpbp_without_final_stage, CpbpConfig};
use crate::Result;

/// Latency figures of one decoder configuration, in time steps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatencyRow {
    pub label: String,
    pub i_max: usize,
    pub i_thr: usize,
    pub log_len: usize,
    /// Full formula at `I_ET = I_max`.
    pub worst_case: usize,
    /// Same, without the trailing `+ n` term.
    pub worst_case_without_final_stage: usize,
    pub measured_eb_n0_db: Option<f64>,
    pub measured_avg: Option<f64>,
}

impl LatencyRow {
    pub fn new(cfg: &CpbpConfig, log_len: usize) -> Self {
        Self {
            label: cfg.label(),
            i_max: cfg.i_max,
            i_thr: cfg.i_thr,
            log_len,
            worst_case: latency_cpbp(cfg.i_max, cfg.i_thr, log_len),
            worst_case_without_final_stage: latency_cpbp_without_final_stage(cfg.i_max, cfg.i_thr, log_len),
            measured_eb_n0_db: None,
            measured_avg: None,
        }
    }

    pub fn with_measurement(mut self, point: &FerPoint) -> Self {
        self.measured_eb_n0_db = Some(point.eb_n0_db);
        self.measured_avg = Some(point.avg_time_steps);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatencyReport {
    pub rows: Vec<LatencyRow>,
}

impl LatencyReport {
    pub fn new(configs: &[CpbpConfig], log_len: usize) -> Self {
        Self { rows: configs.iter().map(|c| LatencyRow::new(c, log_len)).collect() }
    }

    /// Ratio of row `a`'s worst case to row `b`'s, for both formula
    /// variants.
    pub fn ratio(&self, a: usize, b: usize) -> (f64, f64) {
        let (a, b) = (&self.rows[a], &self.rows[b]);
        (
            a.worst_case as f64 / b.worst_case as f64,
            a.worst_case_without_final_stage as f64 / b.worst_case_without_final_stage as f64,
        )
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}
