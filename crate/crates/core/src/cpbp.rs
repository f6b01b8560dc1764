//! The CRC-polar BP decoder and its latency model.
//!
//! For iterations `i <= i_thr` the decoder runs plain BP on the polar graph
//! with the CRC used only as a stopping test. From iteration `i_thr + 1` on,
//! the stage-0 left-to-right messages at the info set are replaced each
//! iteration by one flooding round on the CRC Tanner graph (min-sum checks
//! unless [`CheckRule::SumProduct`] is selected).

use serde::{Deserialize, Serialize};

use crate::bp::{clip, hard_decision_into, Kernel, MessageState, CLIP_BOUND, FROZEN_LLR};
use crate::code::{CrcTannerGraph, PolarCodeSpec};
use crate::{Error, Result};

/// Check-node rule of the CRC layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckRule {
    /// Sign product times the smallest other magnitude.
    #[default]
    MinSum,
    /// `2 atanh(prod tanh(x / 2))` over the other inputs.
    SumProduct,
}

impl std::str::FromStr for CheckRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "minsum" | "min-sum" => Ok(CheckRule::MinSum),
            "sum-product" | "exact" => Ok(CheckRule::SumProduct),
            other => Err(Error::Parse(format!("unknown CRC check rule {other:?}"))),
        }
    }
}

impl std::fmt::Display for CheckRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CheckRule::MinSum => "minsum",
            CheckRule::SumProduct => "sum-product",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CpbpConfig {
    pub i_max: usize,
    pub i_thr: usize,
    #[serde(default)]
    pub kernel: Kernel,
    #[serde(default)]
    pub crc_rule: CheckRule,
}

impl CpbpConfig {
    pub fn new(i_max: usize, i_thr: usize, kernel: Kernel) -> Result<Self> {
        let cfg = Self { i_max, i_thr, kernel, crc_rule: CheckRule::MinSum };
        cfg.validate()?;
        Ok(cfg)
    }

    /// CRC used for early stopping only.
    pub fn baseline(i_max: usize) -> Self {
        Self { i_max, i_thr: i_max, kernel: Kernel::MinSum, crc_rule: CheckRule::MinSum }
    }

    pub fn with_crc_rule(self, crc_rule: CheckRule) -> Self {
        Self { crc_rule, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.i_max == 0 || self.i_thr > self.i_max {
            return Err(Error::Config(format!(
                "need 1 <= i_max and 0 <= i_thr <= i_max, got i_max={} i_thr={}",
                self.i_max, self.i_thr
            )));
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        let mut label = format!("CPBP-({},{})", self.i_max, self.i_thr);
        if self.crc_rule == CheckRule::SumProduct {
            label.push_str("/sp");
        }
        label
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeOutcome {
    pub u_hat: Vec<u8>,
    pub payload: Vec<u8>,
    /// Iteration at which decoding stopped, `I_ET`.
    pub iterations: usize,
    pub crc_ok: bool,
    pub time_steps: usize,
}

/// Multipliers on the CRC layer, one per Tanner edge for the
/// check-to-variable messages and one per edge for the output sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrcEdgeWeights {
    pub check_to_var: Vec<f64>,
    pub output: Vec<f64>,
}

impl CrcEdgeWeights {
    pub fn ones(edges: usize) -> Self {
        Self { check_to_var: vec![1.0; edges], output: vec![1.0; edges] }
    }
}

/// One flooding round of min-sum BP on the CRC graph.
///
/// Variable `j` reads `l0[positions[j]]`. The returned `r0` holds, at each
/// info position, the sum of incoming check-to-variable messages (the
/// variable's own input is not added), and [`FROZEN_LLR`] elsewhere.
pub fn crc_bp_update(l0: &[f64], graph: &CrcTannerGraph, weights: Option<&CrcEdgeWeights>) -> Result<Vec<f64>> {
    let mut r0 = vec![0.0; l0.len()];
    let mut scratch = Vec::new();
    crc_bp_update_into(l0, graph, weights, CheckRule::MinSum, &mut scratch, &mut r0)?;
    Ok(r0)
}

/// [`crc_bp_update`] with a selectable check rule.
pub fn crc_bp_update_with(
    l0: &[f64],
    graph: &CrcTannerGraph,
    weights: Option<&CrcEdgeWeights>,
    rule: CheckRule,
) -> Result<Vec<f64>> {
    let mut r0 = vec![0.0; l0.len()];
    let mut scratch = Vec::new();
    crc_bp_update_into(l0, graph, weights, rule, &mut scratch, &mut r0)?;
    Ok(r0)
}

/// `2 atanh(prod_{k != e} tanh(x_k / 2))` for every `e`, via prefix and
/// suffix products.
fn sum_product_check(x: &[f64], out: &mut [f64]) {
    let t: Vec<f64> = x.iter().map(|v| (v / 2.0).tanh()).collect();
    let mut prefix = 1.0;
    for (o, &te) in out.iter_mut().zip(&t) {
        *o = prefix;
        prefix *= te;
    }
    let mut suffix = 1.0;
    let limit = 1.0 - 1e-15;
    for (o, &te) in out.iter_mut().zip(&t).rev() {
        *o = 2.0 * (*o * suffix).clamp(-limit, limit).atanh();
        suffix *= te;
    }
}

pub(crate) fn crc_bp_update_into(
    l0: &[f64],
    graph: &CrcTannerGraph,
    weights: Option<&CrcEdgeWeights>,
    rule: CheckRule,
    c2v: &mut Vec<f64>,
    r0: &mut [f64],
) -> Result<()> {
    let positions = graph.positions();
    if r0.len() != l0.len() || positions.iter().any(|&p| p >= l0.len()) {
        return Err(Error::Config(format!(
            "CRC graph positions do not fit a length-{} message vector",
            l0.len()
        )));
    }
    if let Some(w) = weights {
        if w.check_to_var.len() != graph.num_edges() || w.output.len() != graph.num_edges() {
            return Err(Error::WeightMismatch(format!("expected {} CRC edge weights", graph.num_edges())));
        }
    }
    let edges = graph.edges();
    c2v.clear();
    c2v.resize(edges.len(), 0.0);
    let mut inputs = Vec::new();
    for c in 0..graph.num_checks() {
        let range = graph.check_edges(c);
        if rule == CheckRule::SumProduct {
            inputs.clear();
            inputs.extend(range.clone().map(|e| l0[positions[edges[e].1]]));
            sum_product_check(&inputs, &mut c2v[range.clone()]);
            if let Some(w) = weights {
                for e in range {
                    c2v[e] *= w.check_to_var[e];
                }
            }
            continue;
        }
        let (mut min1, mut min2, mut arg1, mut neg) = (f64::INFINITY, f64::INFINITY, usize::MAX, false);
        for e in range.clone() {
            let x = l0[positions[edges[e].1]];
            let m = x.abs();
            neg ^= x < 0.0;
            if m < min1 {
                min2 = min1;
                min1 = m;
                arg1 = e;
            } else if m < min2 {
                min2 = m;
            }
        }
        for e in range {
            let x = l0[positions[edges[e].1]];
            let m = if e == arg1 { min2 } else { min1 };
            let v = if neg ^ (x < 0.0) { -m } else { m };
            c2v[e] = match weights {
                Some(w) => w.check_to_var[e] * v,
                None => v,
            };
        }
    }
    r0.fill(FROZEN_LLR);
    for (j, &pos) in positions.iter().enumerate() {
        let mut acc = 0.0;
        for &e in graph.var_edges(j) {
            acc += match weights {
                Some(w) => w.output[e] * c2v[e],
                None => c2v[e],
            };
        }
        r0[pos] = clip(acc, CLIP_BOUND);
    }
    Ok(())
}

/// `(2n - 1)(I_ET - 1) + n`.
pub fn latency_bp(i_et: usize, n: usize) -> usize {
    (2 * n - 1) * (i_et - 1) + n
}

/// Time steps of a CPBP decode stopping at `i_et`: the BP latency plus two
/// steps per iteration spent on the CRC graph.
pub fn latency_cpbp(i_et: usize, i_thr: usize, n: usize) -> usize {
    latency_bp(i_et, n) + 2 * i_et.saturating_sub(i_thr)
}

/// [`latency_cpbp`] without the trailing `+ n` term. This is the
/// convention behind the commonly quoted worst cases of 407 steps for
/// CPBP-(30,15) and 2887 for CPBP-(200,50) at `n = 7`.
pub fn latency_cpbp_without_final_stage(i_et: usize, i_thr: usize, n: usize) -> usize {
    latency_cpbp(i_et, i_thr, n) - n
}

/// Reusable CPBP decoder; owns its scratch message state.
#[derive(Debug, Clone)]
pub struct CpbpDecoder<'a> {
    spec: &'a PolarCodeSpec,
    graph: CrcTannerGraph,
    cfg: CpbpConfig,
    state: MessageState,
    c2v: Vec<f64>,
    r0: Vec<f64>,
    u_hat: Vec<u8>,
    word: Vec<u8>,
}

impl<'a> CpbpDecoder<'a> {
    pub fn new(spec: &'a PolarCodeSpec, cfg: CpbpConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            spec,
            graph: spec.crc_graph()?,
            cfg,
            state: MessageState::new(spec, cfg.i_max, CLIP_BOUND),
            c2v: Vec::new(),
            r0: vec![0.0; spec.len()],
            u_hat: vec![0; spec.len()],
            word: vec![0; spec.word_len()],
        })
    }

    pub fn config(&self) -> CpbpConfig {
        self.cfg
    }

    pub fn graph(&self) -> &CrcTannerGraph {
        &self.graph
    }

    /// Message state left by the last decode.
    pub fn state(&self) -> &MessageState {
        &self.state
    }

    pub fn decode(&mut self, chan_llr: &[f64]) -> Result<DecodeOutcome> {
        let CpbpConfig { i_max, i_thr, kernel, .. } = self.cfg;
        self.state.reset(chan_llr)?;
        let mut crc_ok = false;
        let mut stopped = i_max;
        for i in 1..=i_max {
            self.state.left_pass(i, kernel)?;
            if i > i_thr {
                crc_bp_update_into(self.state.l_stage(0), &self.graph, None, self.cfg.crc_rule, &mut self.c2v, &mut self.r0)?;
                self.state.set_r0(&self.r0)?;
            }
            hard_decision_into(self.state.l_stage(0), self.state.r_stage(0), &mut self.u_hat);
            for (w, &p) in self.word.iter_mut().zip(self.spec.info_set()) {
                *w = self.u_hat[p];
            }
            if self.spec.crc().check(&self.word) {
                crc_ok = true;
                stopped = i;
                break;
            }
            if i < i_max {
                self.state.right_pass(i, kernel)?;
            }
        }
        Ok(DecodeOutcome {
            u_hat: self.u_hat.clone(),
            payload: self.word[..self.spec.k_info()].to_vec(),
            iterations: stopped,
            crc_ok,
            time_steps: latency_cpbp(stopped, i_thr, self.spec.log_len()),
        })
    }
}

pub fn decode_cpbp(chan_llr: &[f64], spec: &PolarCodeSpec, cfg: CpbpConfig) -> Result<DecodeOutcome> {
    CpbpDecoder::new(spec, cfg)?.decode(chan_llr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{channel_llr, modulate};
    use crate::code::CrcTannerGraph;

    #[test]
    fn latency_values() {
        assert_eq!(latency_bp(1, 7), 7);
        assert_eq!(latency_bp(30, 7), 384);
        assert_eq!(latency_bp(1, 1), 1);
        assert_eq!(latency_cpbp(15, 15, 7), 189);
        assert_eq!(latency_cpbp(30, 15, 7), 414);
        assert_eq!(latency_cpbp(200, 50, 7), 2894);
        assert_eq!(latency_cpbp_without_final_stage(30, 15, 7), 407);
        assert_eq!(latency_cpbp_without_final_stage(200, 50, 7), 2887);
    }

    #[test]
    fn latency_monotonicity() {
        for n in 1..9 {
            for thr in 0..40 {
                for et in 1..40 {
                    assert!(latency_cpbp(et + 1, thr, n) >= latency_cpbp(et, thr, n));
                    assert!(latency_cpbp(et, thr + 1, n) <= latency_cpbp(et, thr, n));
                }
            }
        }
    }

    #[test]
    fn config_validation() {
        assert!(CpbpConfig::new(0, 0, Kernel::MinSum).is_err());
        assert!(CpbpConfig::new(5, 6, Kernel::MinSum).is_err());
        assert!(CpbpConfig::new(5, 5, Kernel::Exact).is_ok());
        assert_eq!(CpbpConfig::baseline(30).label(), "CPBP-(30,30)");
    }

    fn single_check() -> CrcTannerGraph {
        CrcTannerGraph::from_dense(vec![vec![1, 1, 1]]).unwrap()
    }

    #[test]
    fn check_rule_example() {
        let r0 = crc_bp_update(&[4.0, -2.0, 3.0], &single_check(), None).unwrap();
        assert_eq!(r0, vec![-2.0, 3.0, -2.0]);
    }

    #[test]
    fn zero_inputs_give_zero_outputs() {
        let spec = PolarCodeSpec::nr_128_80();
        let g = spec.crc_graph().unwrap();
        let r0 = crc_bp_update(&[0.0; 128], &g, None).unwrap();
        for (t, &v) in r0.iter().enumerate() {
            assert_eq!(v, if spec.is_frozen(t) { FROZEN_LLR } else { 0.0 });
        }
    }

    #[test]
    fn consistent_input_is_reinforced() {
        let spec = PolarCodeSpec::nr_128_80();
        let g = spec.crc_graph().unwrap();
        let msg: Vec<u8> = (0..80).map(|i| (i % 3 == 1) as u8).collect();
        let u = spec.build_u(&spec.attach_crc(&msg).unwrap()).unwrap();
        let l0: Vec<f64> = u.iter().map(|&b| if b == 1 { -8.0 } else { 8.0 }).collect();
        let r0 = crc_bp_update(&l0, &g, None).unwrap();
        for &p in spec.info_set() {
            assert_eq!(r0[p].signum(), l0[p].signum(), "position {p}");
        }
    }

    #[test]
    fn output_excludes_own_input() {
        let g = single_check();
        let a = crc_bp_update(&[4.0, -2.0, 3.0], &g, None).unwrap();
        let b = crc_bp_update(&[4.0, -2.0, 9.0], &g, None).unwrap();
        assert_eq!(a[2], b[2]);
        assert_ne!(a[1], b[1]);
    }

    #[test]
    fn weights_scale_messages() {
        let g = single_check();
        let w = CrcEdgeWeights { check_to_var: vec![0.5, 1.0, 1.0], output: vec![1.0, 1.0, 3.0] };
        let r0 = crc_bp_update(&[4.0, -2.0, 3.0], &g, Some(&w)).unwrap();
        assert_eq!(r0, vec![-1.0, 3.0, -6.0]);
        let bad = CrcEdgeWeights::ones(2);
        assert!(crc_bp_update(&[4.0, -2.0, 3.0], &g, Some(&bad)).is_err());
    }

    #[test]
    fn mismatched_graph_errors() {
        let spec = PolarCodeSpec::nr_128_80();
        let g = spec.crc_graph().unwrap();
        assert!(crc_bp_update(&[0.0; 64], &g, None).is_err());
    }

    #[test]
    fn clean_frame_stops_at_first_iteration() {
        let spec = PolarCodeSpec::nr_128_80();
        let msg: Vec<u8> = (0..80).map(|i| (i % 5 < 2) as u8).collect();
        let x = spec.encode(&msg).unwrap();
        let llr = channel_llr(&modulate(&x), 0.316);
        for cfg in [CpbpConfig::baseline(30), CpbpConfig::new(30, 0, Kernel::MinSum).unwrap()] {
            let out = decode_cpbp(&llr, &spec, cfg).unwrap();
            assert!(out.crc_ok);
            assert_eq!(out.iterations, 1);
            assert_eq!(out.payload, msg);
            assert_eq!(out.time_steps, if cfg.i_thr == 0 { 9 } else { 7 });
        }
    }

    #[test]
    fn failed_frame_runs_to_the_limit() {
        let spec = PolarCodeSpec::nr_128_80();
        let llr: Vec<f64> = (0..128).map(|t| if t % 2 == 0 { 1.5 } else { -1.0 }).collect();
        let mut dec = CpbpDecoder::new(&spec, CpbpConfig::new(12, 4, Kernel::MinSum).unwrap()).unwrap();
        let out = dec.decode(&llr).unwrap();
        if !out.crc_ok {
            assert_eq!(out.iterations, 12);
            assert_eq!(out.time_steps, latency_cpbp(12, 4, 7));
        }
        assert!(dec.state().iteration() <= 12);
    }

    #[test]
    fn early_stop_leaves_later_iterations_untouched() {
        let spec = PolarCodeSpec::nr_128_80();
        let x = spec.encode(&[0; 80]).unwrap();
        let llr = channel_llr(&modulate(&x), 0.5);
        let mut dec = CpbpDecoder::new(&spec, CpbpConfig::baseline(30)).unwrap();
        let out = dec.decode(&llr).unwrap();
        assert_eq!(dec.state().iteration(), out.iterations);
    }

    #[test]
    fn sum_product_check_matches_tanh_rule() {
        let x = [1.5, -0.7, 3.0, -2.2, 0.4];
        let mut out = [0.0; 5];
        sum_product_check(&x, &mut out);
        for (e, &got) in out.iter().enumerate() {
            let p: f64 = (0..x.len()).filter(|&k| k != e).map(|k| (x[k] / 2.0).tanh()).product();
            assert!((got - 2.0 * p.atanh()).abs() < 1e-12);
            let ms = (0..x.len()).filter(|&k| k != e).map(|k| x[k]).fold(f64::INFINITY, |m, v| {
                if m.is_infinite() {
                    v
                } else {
                    crate::bp::min_sum_kernel(m, v)
                }
            });
            assert_eq!(got < 0.0, ms < 0.0);
            assert!(got.abs() <= ms.abs());
        }
    }

    #[test]
    fn sum_product_rule_is_labelled_and_decodes() {
        let spec = PolarCodeSpec::nr_128_80();
        let cfg = CpbpConfig::new(30, 15, Kernel::MinSum).unwrap().with_crc_rule(CheckRule::SumProduct);
        assert_eq!(cfg.label(), "CPBP-(30,15)/sp");
        let x = spec.encode(&vec![1; spec.k_info()]).unwrap();
        let llr = channel_llr(&modulate(&x), 0.3);
        let out = decode_cpbp(&llr, &spec, cfg).unwrap();
        assert!(out.crc_ok);
        assert_eq!(out.payload, vec![1; spec.k_info()]);
    }
}
