use super::pe::PeWeights;
use super::tape::{Backend, Node, Plain, Tape};
use super::weights::{WeightLayout, WeightSet};
use crate::bp::{clip, PeIndex, CLIP_BOUND, FROZEN_LLR};
use crate::code::{stage_values, CrcTannerGraph, PolarCodeSpec};
use crate::cpbp::{latency_cpbp, CheckRule, CpbpConfig, DecodeOutcome};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Stops at the first iteration whose decision passes the CRC.
    Inference,
    /// Always runs `I_max` iterations.
    Training,
}

/// Correct hard values the soft outputs are scored against.
#[derive(Debug, Clone, PartialEq)]
pub struct Targets {
    /// `h_s` for stages `0..n`; the channel stage is not scored.
    pub stages: Vec<Vec<u8>>,
    /// `u` restricted to the information set, in info-set order.
    pub crc_bits: Vec<u8>,
}

impl Targets {
    pub fn from_message(spec: &PolarCodeSpec, u: &[u8]) -> Result<Self> {
        crate::code::expect_len(u, spec.len())?;
        let mut stages = stage_values(u)?;
        stages.truncate(spec.log_len());
        let crc_bits = spec.info_set().iter().map(|&p| u[p]).collect();
        Ok(Self { stages, crc_bits })
    }

    /// Targets of the all-zero codeword.
    pub fn zero(spec: &PolarCodeSpec) -> Self {
        Self { stages: vec![vec![0; spec.len()]; spec.log_len()], crc_bits: vec![0; spec.info_set().len()] }
    }
}

/// Values recorded during one forward pass, indexed by iteration `i - 1`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    /// `l0 + r0` at decision time.
    pub stage0_sums: Vec<Vec<f64>>,
    /// `clip(l^i_s + r^{i-1}_s)` for stages `0..n`, taken right after the
    /// left pass.
    pub soft_outputs: Vec<Vec<Vec<f64>>>,
    /// `(i, clip(l^i_0 + r^i_0))` at the information positions, for every
    /// iteration that ran the CRC layer.
    pub crc_outputs: Vec<(usize, Vec<f64>)>,
    pub candidates: Vec<Vec<u8>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOutput {
    pub outcome: DecodeOutcome,
    pub trace: Trace,
}

/// Fixed structure of the unrolled decoder.
#[derive(Debug, Clone)]
pub struct Network<'a> {
    spec: &'a PolarCodeSpec,
    graph: CrcTannerGraph,
    cfg: CpbpConfig,
    layout: WeightLayout,
}

pub(crate) struct Pass<V> {
    pub loss: Option<V>,
    pub outcome: DecodeOutcome,
}

impl<'a> Network<'a> {
    pub fn new(spec: &'a PolarCodeSpec, cfg: CpbpConfig, weights: &WeightSet) -> Result<Self> {
        cfg.validate()?;
        if cfg.crc_rule != CheckRule::MinSum {
            return Err(Error::Config("weighted decoders support the min-sum CRC check rule only".into()));
        }
        weights.check_compatible(spec, &cfg)?;
        Ok(Self { spec, graph: spec.crc_graph()?, cfg, layout: weights.layout() })
    }

    pub fn spec(&self) -> &'a PolarCodeSpec {
        self.spec
    }

    pub fn config(&self) -> CpbpConfig {
        self.cfg
    }

    pub fn layout(&self) -> &WeightLayout {
        &self.layout
    }

    pub fn graph(&self) -> &CrcTannerGraph {
        &self.graph
    }

    /// Runs the unrolled graph on backend `b` with weight handles `w`.
    pub(crate) fn run<B: Backend>(
        &self,
        b: &mut B,
        w: &[B::V],
        chan_llr: &[f64],
        mode: Mode,
        targets: Option<&Targets>,
        mut trace: Option<&mut Trace>,
    ) -> Result<Pass<B::V>> {
        let spec = self.spec;
        let (len, n) = (spec.len(), spec.log_len());
        crate::code::expect_len(chan_llr, len)?;
        if w.len() != self.layout.total() {
            return Err(Error::WeightMismatch(format!("expected {} weight handles, got {}", self.layout.total(), w.len())));
        }
        if let Some(t) = targets {
            if t.stages.len() != n || t.stages.iter().any(|h| h.len() != len) || t.crc_bits.len() != spec.info_set().len()
            {
                return Err(Error::Config("training targets do not match the code".into()));
            }
        }
        let CpbpConfig { i_max, i_thr, kernel, .. } = self.cfg;
        let layout = &self.layout;
        let zero = b.constant(0.0);
        let sat = b.constant(FROZEN_LLR);
        let mut l = vec![zero; (n + 1) * len];
        let mut r = vec![zero; (n + 1) * len];
        for (t, &x) in chan_llr.iter().enumerate() {
            l[n * len + t] = b.constant(clip(x, CLIP_BOUND));
        }
        for t in spec.frozen_set() {
            r[*t] = sat;
        }

        let positions = self.graph.positions();
        let edges = self.graph.edges();
        let (c2v_base, out_base) = (layout.crc_check_base(), layout.crc_output_base());
        let crc_weighted = layout.crc_edges > 0;
        let mut c2v = vec![zero; edges.len()];
        let (mut inputs, mut ext, mut terms) = (Vec::new(), Vec::new(), Vec::new());
        let mut loss_terms = Vec::new();
        let record = targets.is_some() || trace.is_some();

        let mut u_hat = vec![0u8; len];
        let mut word = vec![0u8; spec.word_len()];
        let (mut crc_ok, mut stopped) = (false, i_max);
        for i in 1..=i_max {
            for s in (0..n).rev() {
                let k = s + 1;
                for pe in PeIndex::stage(len, s) {
                    let view = PeWeights::view(layout, w, layout.unit_base(i, s, pe.position()));
                    let (t, j) = (pe.t, pe.j);
                    let (a, c) = b.pe_left(&view, kernel, l[k * len + t], l[k * len + j], r[s * len + t], r[s * len + j]);
                    l[s * len + t] = a;
                    l[s * len + j] = c;
                }
            }

            if record {
                let mut soft = Vec::with_capacity(n);
                for s in 0..n {
                    let mut row = Vec::with_capacity(len);
                    for t in 0..len {
                        let (lv, rv) = (l[s * len + t], r[s * len + t]);
                        if let Some(tg) = targets {
                            loss_terms.push(b.soft_bce(lv, rv, tg.stages[s][t]));
                        }
                        row.push(clip(b.value(lv) + b.value(rv), CLIP_BOUND));
                    }
                    soft.push(row);
                }
                if let Some(tr) = trace.as_deref_mut() {
                    tr.soft_outputs.push(soft);
                }
            }

            if i > i_thr {
                for c in 0..self.graph.num_checks() {
                    let range = self.graph.check_edges(c);
                    inputs.clear();
                    inputs.extend(range.clone().map(|e| l[positions[edges[e].1]]));
                    b.extrinsic(&inputs, &mut ext);
                    for (e, &x) in range.zip(&ext) {
                        c2v[e] = if crc_weighted { b.mul(w[c2v_base + e], x) } else { x };
                    }
                }
                for (v, &pos) in positions.iter().enumerate() {
                    terms.clear();
                    for &e in self.graph.var_edges(v) {
                        let x = if crc_weighted { b.mul(w[out_base + e], c2v[e]) } else { c2v[e] };
                        terms.push(x);
                    }
                    let acc = b.sum(&terms);
                    r[pos] = b.clip(acc);
                }
                if record {
                    let mut row = Vec::with_capacity(positions.len());
                    for (v, &pos) in positions.iter().enumerate() {
                        if let Some(tg) = targets {
                            loss_terms.push(b.soft_bce(l[pos], r[pos], tg.crc_bits[v]));
                        }
                        row.push(clip(b.value(l[pos]) + b.value(r[pos]), CLIP_BOUND));
                    }
                    if let Some(tr) = trace.as_deref_mut() {
                        tr.crc_outputs.push((i, row));
                    }
                }
            }

            for t in 0..len {
                u_hat[t] = u8::from(b.value(r[t]) + b.value(l[t]) < 0.0);
            }
            if let Some(tr) = trace.as_deref_mut() {
                tr.stage0_sums.push((0..len).map(|t| b.value(r[t]) + b.value(l[t])).collect());
                tr.candidates.push(u_hat.clone());
            }
            for (x, &p) in word.iter_mut().zip(spec.info_set()) {
                *x = u_hat[p];
            }
            crc_ok = spec.crc().check(&word);
            if crc_ok && mode == Mode::Inference {
                stopped = i;
                break;
            }

            if i < i_max {
                for s in 0..n.saturating_sub(1) {
                    let k = s + 1;
                    for pe in PeIndex::stage(len, s) {
                        let view = PeWeights::view(layout, w, layout.unit_base(i, s, pe.position()));
                        let (t, j) = (pe.t, pe.j);
                        let (a, c) =
                            b.pe_right(&view, kernel, r[s * len + t], r[s * len + j], l[k * len + t], l[k * len + j]);
                        r[k * len + t] = a;
                        r[k * len + j] = c;
                    }
                }
            }
        }

        let loss = targets.map(|_| b.sum(&loss_terms));
        Ok(Pass {
            loss,
            outcome: DecodeOutcome {
                u_hat,
                payload: word[..spec.k_info()].to_vec(),
                iterations: stopped,
                crc_ok,
                time_steps: latency_cpbp(stopped, i_thr, n),
            },
        })
    }

    /// Multiloss of one frame evaluated directly.
    pub fn loss(&self, weights: &[f64], chan_llr: &[f64], targets: &Targets) -> Result<f64> {
        let pass = self.run(&mut Plain::new(CLIP_BOUND), weights, chan_llr, Mode::Training, Some(targets), None)?;
        Ok(pass.loss.expect("targets given"))
    }

    /// Records the frame on `tape` and returns the loss node. Weight leaf
    /// `k` of the tape is trainable slot `k`.
    pub fn record(&self, tape: &mut Tape, weights: &[f64], chan_llr: &[f64], targets: &Targets) -> Result<Node> {
        tape.clear();
        let handles: Vec<Node> = weights.iter().map(|&x| tape.weight(x)).collect();
        let pass = self.run(tape, &handles, chan_llr, Mode::Training, Some(targets), None)?;
        Ok(pass.loss.expect("targets given"))
    }

    /// Loss of one frame and `seed` times its gradient added into `grad`.
    pub fn loss_and_grad(
        &self,
        tape: &mut Tape,
        weights: &[f64],
        chan_llr: &[f64],
        targets: &Targets,
        seed: f64,
        grad: &mut [f64],
    ) -> Result<f64> {
        let out = self.record(tape, weights, chan_llr, targets)?;
        tape.backward_into(out, seed, grad);
        Ok(tape.value(out))
    }
}

/// One pass over the unrolled graph with recorded intermediate values.
pub fn forward_unrolled(
    chan_llr: &[f64],
    spec: &PolarCodeSpec,
    cfg: CpbpConfig,
    weights: &WeightSet,
    mode: Mode,
) -> Result<ForwardOutput> {
    let net = Network::new(spec, cfg, weights)?;
    let mut trace = Trace::default();
    let w = weights.trainable();
    let pass = net.run(&mut Plain::new(CLIP_BOUND), &w, chan_llr, mode, None, Some(&mut trace))?;
    Ok(ForwardOutput { outcome: pass.outcome, trace })
}

/// Weighted CPBP decoder for inference.
#[derive(Debug, Clone)]
pub struct NeuralDecoder<'a> {
    net: Network<'a>,
    weights: WeightSet,
    flat: Vec<f64>,
}

impl<'a> NeuralDecoder<'a> {
    pub fn new(spec: &'a PolarCodeSpec, cfg: CpbpConfig, weights: WeightSet) -> Result<Self> {
        let net = Network::new(spec, cfg, &weights)?;
        let flat = weights.trainable();
        Ok(Self { net, weights, flat })
    }

    pub fn weights(&self) -> &WeightSet {
        &self.weights
    }

    pub fn network(&self) -> &Network<'a> {
        &self.net
    }

    pub fn decode(&mut self, chan_llr: &[f64]) -> Result<DecodeOutcome> {
        let pass = self.net.run(&mut Plain::new(CLIP_BOUND), &self.flat, chan_llr, Mode::Inference, None, None)?;
        Ok(pass.outcome)
    }
}
