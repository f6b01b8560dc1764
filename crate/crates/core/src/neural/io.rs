use std::path::Path;

use serde::{Deserialize, Serialize};

use super::weights::{Provenance, Scheme, WeightMeta, WeightSet};
use crate::code::PolarCodeSpec;
use crate::cpbp::{CpbpConfig, CrcEdgeWeights};
use crate::{Error, Result};

pub const WEIGHT_FORMAT_VERSION: u32 = 1;

const INDEX_CONVENTION: &str = "polar_weights[((it * units_per_iteration + unit) * slots) + slot]; \
it = iteration - 1 for ncpbp, 0 otherwise; unit = 0 (per-iteration), stage (per-stage) or \
stage * N/2 + pe (per-pe); crc_weights arrays are indexed by Tanner edge sorted by (check, variable)";

#[derive(Debug, Serialize, Deserialize)]
struct WeightFile {
    format_version: u32,
    scheme: Scheme,
    #[serde(flatten)]
    meta: WeightMeta,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    index_convention: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    slot_names: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    polar_weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    crc_weights: Option<CrcEdgeWeights>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<Provenance>,
}

pub fn weights_to_json(ws: &WeightSet) -> Result<String> {
    let weighted = ws.scheme != Scheme::Unweighted;
    let file = WeightFile {
        format_version: WEIGHT_FORMAT_VERSION,
        scheme: ws.scheme,
        meta: ws.meta,
        index_convention: weighted.then(|| INDEX_CONVENTION.to_string()),
        slot_names: weighted.then(|| ws.scheme.slot_names().iter().map(|s| s.to_string()).collect()),
        polar_weights: if weighted { ws.polar.clone() } else { Vec::new() },
        crc_weights: if weighted { ws.crc.clone() } else { None },
        provenance: ws.provenance.clone(),
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

pub fn weights_from_json(text: &str) -> Result<WeightSet> {
    let file: WeightFile = serde_json::from_str(text)?;
    if file.format_version != WEIGHT_FORMAT_VERSION {
        return Err(Error::Parse(format!("unsupported weight format version {}", file.format_version)));
    }
    let ws = WeightSet {
        scheme: file.scheme,
        meta: file.meta,
        polar: file.polar_weights,
        crc: file.crc_weights,
        provenance: file.provenance,
    };
    let layout = ws.layout();
    if ws.polar.len() != layout.polar_len() {
        return Err(Error::WeightMismatch(format!(
            "{} polar weights in file, layout needs {}",
            ws.polar.len(),
            layout.polar_len()
        )));
    }
    if ws.scheme != Scheme::Ncpbp && ws.crc.is_some() {
        return Err(Error::WeightMismatch("only ncpbp carries CRC weights".into()));
    }
    Ok(ws)
}

pub fn save_weights(ws: &WeightSet, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, weights_to_json(ws)?)?;
    Ok(())
}

pub fn load_weights(path: impl AsRef<Path>) -> Result<WeightSet> {
    weights_from_json(&std::fs::read_to_string(path)?)
}

/// Loads a weight file and checks it against the decoder it is meant for.
pub fn load_weights_for(path: impl AsRef<Path>, spec: &PolarCodeSpec, cfg: &CpbpConfig) -> Result<WeightSet> {
    let ws = load_weights(path)?;
    ws.check_compatible(spec, cfg)?;
    Ok(ws)
}
