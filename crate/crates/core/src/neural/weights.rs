use serde::{Deserialize, Serialize};

use crate::code::PolarCodeSpec;
use crate::cpbp::{CpbpConfig, CrcEdgeWeights};
use crate::{Error, Result};

/// Which multiplicative weights a decoder carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Eight merged slots per PE unit, one set per iteration, plus CRC edge
    /// weights shared by all iterations.
    Ncpbp,
    /// Twelve slots per PE unit shared across iterations.
    NnmsRnn,
    /// Only `w0, w3, w6, w9` of the twelve-slot form are trained.
    Nnms,
    Unweighted,
}

impl Scheme {
    pub fn slots(self) -> usize {
        match self {
            Scheme::Ncpbp => 8,
            Scheme::NnmsRnn => 12,
            Scheme::Nnms => 4,
            Scheme::Unweighted => 0,
        }
    }

    pub fn slot_names(self) -> &'static [&'static str] {
        match self {
            Scheme::Ncpbp => &["w0", "w12", "w34", "w5", "w6", "w78", "w910", "w11"],
            Scheme::NnmsRnn => &["w0", "w1", "w2", "w3", "w4", "w5", "w6", "w7", "w8", "w9", "w10", "w11"],
            Scheme::Nnms => &["w0", "w3", "w6", "w9"],
            Scheme::Unweighted => &[],
        }
    }

    /// Whether polar weights differ between iterations.
    pub fn per_iteration(self) -> bool {
        matches!(self, Scheme::Ncpbp)
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ncpbp" => Ok(Scheme::Ncpbp),
            "nnms-rnn" | "nnms_rnn" => Ok(Scheme::NnmsRnn),
            "nnms" => Ok(Scheme::Nnms),
            "unweighted" | "cpbp" => Ok(Scheme::Unweighted),
            other => Err(Error::Parse(format!("unknown weight scheme {other:?}"))),
        }
    }
}

/// How many PEs share one weight unit within an iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Granularity {
    /// One unit for all PEs of an iteration.
    PerIteration,
    /// One unit per stage.
    #[default]
    PerStage,
    /// One unit per PE.
    PerPe,
}

impl std::str::FromStr for Granularity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-iteration" => Ok(Granularity::PerIteration),
            "per-stage" => Ok(Granularity::PerStage),
            "per-pe" => Ok(Granularity::PerPe),
            other => Err(Error::Parse(format!("unknown granularity {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightMeta {
    #[serde(rename = "N")]
    pub len: usize,
    #[serde(rename = "K_info")]
    pub k_info: usize,
    pub crc_len: usize,
    #[serde(rename = "I_max")]
    pub i_max: usize,
    #[serde(rename = "I_thr")]
    pub i_thr: usize,
    pub granularity: Granularity,
}

impl WeightMeta {
    pub fn new(spec: &PolarCodeSpec, cfg: &CpbpConfig, granularity: Granularity) -> Self {
        Self {
            len: spec.len(),
            k_info: spec.k_info(),
            crc_len: spec.crc_len(),
            i_max: cfg.i_max,
            i_thr: cfg.i_thr,
            granularity,
        }
    }

    pub fn log_len(&self) -> usize {
        self.len.trailing_zeros() as usize
    }
}

/// Placement of every trainable slot in the flat weight vector.
///
/// Polar slot index: `(iter_unit * units_per_iteration + unit) * slots +
/// slot`, where `iter_unit = i - 1` for per-iteration schemes (0
/// otherwise), and `unit` is 0, the stage `s`, or `s * N/2 + pe` for the
/// three granularities. CRC check-to-variable weights follow, then CRC
/// output weights, each indexed by Tanner edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WeightLayout {
    pub scheme: Scheme,
    pub granularity: Granularity,
    pub log_len: usize,
    pub half_len: usize,
    pub slots: usize,
    pub iteration_units: usize,
    pub units_per_iteration: usize,
    pub crc_edges: usize,
}

impl WeightLayout {
    pub fn new(scheme: Scheme, meta: &WeightMeta, crc_edges: usize) -> Self {
        let log_len = meta.log_len();
        let half_len = meta.len / 2;
        let units_per_iteration = match meta.granularity {
            Granularity::PerIteration => 1,
            Granularity::PerStage => log_len,
            Granularity::PerPe => log_len * half_len,
        };
        let has_crc = scheme == Scheme::Ncpbp && meta.i_thr < meta.i_max;
        Self {
            scheme,
            granularity: meta.granularity,
            log_len,
            half_len,
            slots: scheme.slots(),
            iteration_units: if scheme.per_iteration() { meta.i_max } else { 1 },
            units_per_iteration,
            crc_edges: if has_crc { crc_edges } else { 0 },
        }
    }

    pub fn polar_len(&self) -> usize {
        self.slots * self.iteration_units * self.units_per_iteration
    }

    pub fn crc_len(&self) -> usize {
        2 * self.crc_edges
    }

    pub fn total(&self) -> usize {
        self.polar_len() + self.crc_len()
    }

    /// First slot of the unit used by the PE at rank `pe` of `stage` in
    /// iteration `iteration` (1-based).
    #[inline]
    pub fn unit_base(&self, iteration: usize, stage: usize, pe: usize) -> usize {
        let it = if self.iteration_units > 1 { iteration - 1 } else { 0 };
        let unit = match self.granularity {
            Granularity::PerIteration => 0,
            Granularity::PerStage => stage,
            Granularity::PerPe => stage * self.half_len + pe,
        };
        (it * self.units_per_iteration + unit) * self.slots
    }

    pub fn crc_check_base(&self) -> usize {
        self.polar_len()
    }

    pub fn crc_output_base(&self) -> usize {
        self.polar_len() + self.crc_edges
    }
}

/// Where a trained weight set came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub train_config: super::train::TrainConfig,
    #[serde(default)]
    pub final_heldout_loss: Option<f64>,
}

/// All trainable scalars of a weighted decoder.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSet {
    pub scheme: Scheme,
    pub meta: WeightMeta,
    pub polar: Vec<f64>,
    pub crc: Option<CrcEdgeWeights>,
    pub provenance: Option<Provenance>,
}

impl WeightSet {
    /// Every slot set to one.
    pub fn ones(scheme: Scheme, spec: &PolarCodeSpec, cfg: &CpbpConfig, granularity: Granularity) -> Result<Self> {
        cfg.validate()?;
        let meta = WeightMeta::new(spec, cfg, granularity);
        let layout = WeightLayout::new(scheme, &meta, spec.crc_graph()?.num_edges());
        Ok(Self {
            scheme,
            meta,
            polar: vec![1.0; layout.polar_len()],
            crc: (layout.crc_edges > 0).then(|| CrcEdgeWeights::ones(layout.crc_edges)),
            provenance: None,
        })
    }

    pub fn unweighted(spec: &PolarCodeSpec, cfg: &CpbpConfig) -> Result<Self> {
        Self::ones(Scheme::Unweighted, spec, cfg, Granularity::PerStage)
    }

    pub fn layout(&self) -> WeightLayout {
        let edges = self.crc.as_ref().map_or(0, |c| c.check_to_var.len());
        let mut layout = WeightLayout::new(self.scheme, &self.meta, edges);
        layout.crc_edges = edges;
        layout
    }

    pub fn label(&self, cfg: &CpbpConfig) -> String {
        match self.scheme {
            Scheme::Ncpbp => format!("NCPBP-({},{})", cfg.i_max, cfg.i_thr),
            Scheme::NnmsRnn => format!("NNMS-RNN-{}", cfg.i_max),
            Scheme::Nnms => format!("NNMS-{}", cfg.i_max),
            Scheme::Unweighted => cfg.label(),
        }
    }

    pub fn num_trainable(&self) -> usize {
        self.polar.len() + self.crc.as_ref().map_or(0, |c| 2 * c.check_to_var.len())
    }

    /// Polar slots followed by CRC check-to-variable and output weights.
    pub fn trainable(&self) -> Vec<f64> {
        let mut out = self.polar.clone();
        if let Some(c) = &self.crc {
            out.extend_from_slice(&c.check_to_var);
            out.extend_from_slice(&c.output);
        }
        out
    }

    pub fn set_trainable(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_trainable() {
            return Err(Error::LengthMismatch { expected: self.num_trainable(), actual: flat.len() });
        }
        let p = self.polar.len();
        self.polar.copy_from_slice(&flat[..p]);
        if let Some(c) = &mut self.crc {
            let e = c.check_to_var.len();
            c.check_to_var.copy_from_slice(&flat[p..p + e]);
            c.output.copy_from_slice(&flat[p + e..]);
        }
        Ok(())
    }

    pub fn is_all_ones(&self) -> bool {
        self.trainable().iter().all(|&w| w == 1.0)
    }

    /// Errors unless these weights were built for `spec` and `cfg`.
    pub fn check_compatible(&self, spec: &PolarCodeSpec, cfg: &CpbpConfig) -> Result<()> {
        let want = WeightMeta::new(spec, cfg, self.meta.granularity);
        if want != self.meta {
            return Err(Error::WeightMismatch(format!("file has {:?}, decoder needs {:?}", self.meta, want)));
        }
        let edges = spec.crc_graph()?.num_edges();
        let layout = WeightLayout::new(self.scheme, &self.meta, edges);
        let crc_edges = self.crc.as_ref().map_or(0, |c| c.check_to_var.len());
        let crc_ok = self.crc.as_ref().is_none_or(|c| c.output.len() == c.check_to_var.len());
        if self.polar.len() != layout.polar_len() || crc_edges != layout.crc_edges || !crc_ok {
            return Err(Error::WeightMismatch(format!(
                "expected {} polar and {} CRC weights, found {} and {}",
                layout.polar_len(),
                layout.crc_len(),
                self.polar.len(),
                2 * crc_edges
            )));
        }
        Ok(())
    }
}

/// Trainable-slot totals for one decoder configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightCount {
    pub label: String,
    pub slots_per_unit: usize,
    pub units_per_iteration: usize,
    pub iteration_units: usize,
    pub polar_per_iteration: usize,
    pub polar: usize,
    pub crc: usize,
    pub total: usize,
    /// Published total for the same decoder, where one exists.
    pub reference: Option<usize>,
}

impl WeightCount {
    pub fn delta(&self) -> Option<i64> {
        self.reference.map(|r| self.total as i64 - r as i64)
    }
}

/// Deterministic enumeration of trainable slots.
pub fn count_weights(scheme: Scheme, meta: &WeightMeta, crc_edges: usize) -> WeightCount {
    let layout = WeightLayout::new(scheme, meta, crc_edges);
    let cfg = CpbpConfig { i_max: meta.i_max, i_thr: meta.i_thr, ..CpbpConfig::baseline(1) };
    let label = match scheme {
        Scheme::Ncpbp => format!("NCPBP-({},{})", cfg.i_max, cfg.i_thr),
        Scheme::NnmsRnn => format!("NNMS-RNN-{}", cfg.i_max),
        Scheme::Nnms => format!("NNMS-{}", cfg.i_max),
        Scheme::Unweighted => cfg.label(),
    };
    let nr_code = meta.len == 128 && meta.k_info == 80 && meta.crc_len == 16;
    let reference = match (scheme, nr_code, meta.i_max, meta.i_thr) {
        (Scheme::Nnms, true, 30, _) => Some(3840),
        (Scheme::NnmsRnn, true, 30, _) => Some(11520),
        (Scheme::Ncpbp, true, 30, 15) => Some(8288),
        _ => None,
    };
    WeightCount {
        label,
        slots_per_unit: layout.slots,
        units_per_iteration: layout.units_per_iteration,
        iteration_units: layout.iteration_units,
        polar_per_iteration: layout.slots * layout.units_per_iteration,
        polar: layout.polar_len(),
        crc: layout.crc_len(),
        total: layout.total(),
        reference,
    }
}
