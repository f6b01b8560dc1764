use super::forward::Targets;
use super::tape::bce_value;
use crate::bp::CLIP_BOUND;
use crate::{Error, Result};

/// Multiloss over recorded soft outputs.
///
/// `stage_soft[i - 1][s]` holds the stage-`s` LLRs of iteration `i` and
/// `crc_soft` the CRC-layer LLRs at the information positions tagged with
/// their iteration. Terms are summed in forward order (all stage terms of
/// an iteration, then its CRC terms), so the result is bit-exact with the
/// loss computed during the forward pass. Inputs are clipped first.
pub fn multiloss(stage_soft: &[Vec<Vec<f64>>], crc_soft: &[(usize, Vec<f64>)], truth: &Targets) -> Result<f64> {
    let mismatch = |what: &str| Error::Config(format!("multiloss shape mismatch: {what}"));
    let mut total = 0.0;
    let mut crc = crc_soft.iter().peekable();
    for (idx, stages) in stage_soft.iter().enumerate() {
        if stages.len() != truth.stages.len() {
            return Err(mismatch("stage count"));
        }
        for (row, h) in stages.iter().zip(&truth.stages) {
            if row.len() != h.len() {
                return Err(mismatch("stage length"));
            }
            for (&x, &b) in row.iter().zip(h) {
                total += bce_value(x.clamp(-CLIP_BOUND, CLIP_BOUND), b);
            }
        }
        while let Some((i, row)) = crc.next_if(|(i, _)| *i == idx + 1) {
            debug_assert_eq!(*i, idx + 1);
            if row.len() != truth.crc_bits.len() {
                return Err(mismatch("CRC output length"));
            }
            for (&x, &b) in row.iter().zip(&truth.crc_bits) {
                total += bce_value(x.clamp(-CLIP_BOUND, CLIP_BOUND), b);
            }
        }
    }
    if crc.next().is_some() {
        return Err(mismatch("CRC output for an iteration without stage outputs"));
    }
    Ok(total)
}
