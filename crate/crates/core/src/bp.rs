//! Belief propagation on the polar factor graph.
//!
//! Stage 0 is the message side, stage `n` the channel side. The processing
//! element (PE) at stage `s` joins bits `t` and `j = t + 2^s` of stages `s`
//! and `k = s + 1`, for every `t` with bit `s` clear.

use serde::{Deserialize, Serialize};

use crate::code::PolarCodeSpec;
use crate::{Error, Result};

/// Saturation magnitude for every stored message.
pub const CLIP_BOUND: f64 = 20.0;

/// Stands in for `+inf` at frozen stage-0 positions. Larger than
/// [`CLIP_BOUND`] and never clipped.
pub const FROZEN_LLR: f64 = 1.0e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    #[default]
    MinSum,
    Exact,
}

impl Kernel {
    #[inline]
    pub fn apply(self, x: f64, y: f64) -> f64 {
        match self {
            Kernel::MinSum => min_sum_kernel(x, y),
            Kernel::Exact => exact_kernel(x, y),
        }
    }
}

impl std::str::FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "minsum" | "min-sum" => Ok(Kernel::MinSum),
            "exact" => Ok(Kernel::Exact),
            other => Err(Error::Parse(format!("unknown kernel {other:?}"))),
        }
    }
}

impl std::fmt::Display for Kernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Kernel::MinSum => "minsum",
            Kernel::Exact => "exact",
        })
    }
}

/// `sgn(x) sgn(y) min(|x|, |y|)` with `sgn(0) = +1`.
#[inline]
pub fn min_sum_kernel(x: f64, y: f64) -> f64 {
    let m = x.abs().min(y.abs());
    if (x < 0.0) != (y < 0.0) {
        -m
    } else {
        m
    }
}

/// `2 atanh(tanh(x/2) tanh(y/2))`, evaluated as the min-sum value plus two
/// correction terms so it stays accurate for large magnitudes.
#[inline]
pub fn exact_kernel(x: f64, y: f64) -> f64 {
    let (a, b) = (x.abs(), y.abs());
    let m = a.min(b) + (-(a + b)).exp().ln_1p() - (-(a - b).abs()).exp().ln_1p();
    let m = m.max(0.0);
    if (x < 0.0) != (y < 0.0) {
        -m
    } else {
        m
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Partial derivatives of [`exact_kernel`] with respect to `x` and `y`.
pub fn exact_kernel_grad(x: f64, y: f64) -> (f64, f64) {
    let (a, b) = (x.abs(), y.abs());
    let sx = if x < 0.0 { -1.0 } else { 1.0 };
    let sy = if y < 0.0 { -1.0 } else { 1.0 };
    let sum = sigmoid(-(a + b));
    let diff = sigmoid(-(a - b).abs());
    // derivative of the magnitude w.r.t. the smaller and the larger input
    let (d_small, d_large) = (1.0 - sum - diff, diff - sum);
    let (da, db) = if a <= b { (d_small, d_large) } else { (d_large, d_small) };
    (sy * da, sx * db)
}

#[inline]
pub fn clip(x: f64, bound: f64) -> f64 {
    x.clamp(-bound, bound)
}

/// Right-to-left PE update: returns `(l_{t,s}, l_{j,s})`.
#[inline]
pub fn pe_update_left(l_tk: f64, l_jk: f64, r_ts: f64, r_js: f64, kernel: Kernel, bound: f64) -> (f64, f64) {
    let l_ts = kernel.apply(l_tk, r_js + l_jk);
    let l_js = kernel.apply(l_tk, r_ts) + l_jk;
    (clip(l_ts, bound), clip(l_js, bound))
}

/// Left-to-right PE update: returns `(r_{t,k}, r_{j,k})`.
#[inline]
pub fn pe_update_right(r_ts: f64, r_js: f64, l_tk: f64, l_jk: f64, kernel: Kernel, bound: f64) -> (f64, f64) {
    let r_tk = kernel.apply(r_ts, l_jk + r_js);
    let r_jk = kernel.apply(r_ts, l_tk) + r_js;
    (clip(r_tk, bound), clip(r_jk, bound))
}

/// Position of a PE inside its stage, in `0..N/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PeIndex {
    pub t: usize,
    pub j: usize,
    pub stage: usize,
}

impl PeIndex {
    /// All `N/2` PEs of `stage` in increasing `t`.
    pub fn stage(len: usize, stage: usize) -> impl Iterator<Item = PeIndex> {
        let half = 1usize << stage;
        (0..len).filter(move |t| t & half == 0).map(move |t| PeIndex { t, j: t + half, stage })
    }

    /// Rank of this PE among the `N/2` PEs of its stage.
    pub fn position(&self) -> usize {
        let low = self.t & ((1 << self.stage) - 1);
        ((self.t >> (self.stage + 1)) << self.stage) | low
    }
}

/// `û_t = 0` iff `r0[t] + l0[t] >= 0`.
pub fn hard_decision(l0: &[f64], r0: &[f64]) -> Vec<u8> {
    l0.iter().zip(r0).map(|(&l, &r)| u8::from(r + l < 0.0)).collect()
}

pub(crate) fn hard_decision_into(l0: &[f64], r0: &[f64], out: &mut [u8]) {
    for ((o, &l), &r) in out.iter_mut().zip(l0).zip(r0) {
        *o = u8::from(r + l < 0.0);
    }
}

/// Messages of one decode on the unrolled graph.
///
/// Each iteration reads only the previous iteration's left-to-right
/// messages, so one layer of `l` and one of `r` is kept and overwritten in
/// iteration order. [`MessageState::left_pass`] of iteration `i` must follow
/// iteration `i - 1`, and [`MessageState::right_pass`] of `i` must follow
/// the left pass of `i`.
#[derive(Debug, Clone)]
pub struct MessageState {
    len: usize,
    log_len: usize,
    l: Vec<f64>,
    r: Vec<f64>,
    r0_init: Vec<f64>,
    clip_bound: f64,
    iteration: usize,
    right_done: bool,
    max_iterations: usize,
}

pub fn init_messages(spec: &PolarCodeSpec, chan_llr: &[f64], max_iterations: usize) -> Result<MessageState> {
    let mut state = MessageState::new(spec, max_iterations, CLIP_BOUND);
    state.reset(chan_llr)?;
    Ok(state)
}

impl MessageState {
    pub fn new(spec: &PolarCodeSpec, max_iterations: usize, clip_bound: f64) -> Self {
        let len = spec.len();
        let log_len = spec.log_len();
        let r0_init = spec.frozen_mask().iter().map(|&f| if f { FROZEN_LLR } else { 0.0 }).collect();
        Self {
            len,
            log_len,
            l: vec![0.0; (log_len + 1) * len],
            r: vec![0.0; (log_len + 1) * len],
            r0_init,
            clip_bound,
            iteration: 0,
            right_done: true,
            max_iterations,
        }
    }

    /// Re-initialises for a new frame.
    pub fn reset(&mut self, chan_llr: &[f64]) -> Result<()> {
        if chan_llr.len() != self.len {
            return Err(Error::LengthMismatch { expected: self.len, actual: chan_llr.len() });
        }
        self.l.fill(0.0);
        self.r.fill(0.0);
        let (n, len, bound) = (self.log_len, self.len, self.clip_bound);
        for (dst, &v) in self.l[n * len..].iter_mut().zip(chan_llr) {
            *dst = clip(v, bound);
        }
        self.r[..len].copy_from_slice(&self.r0_init);
        self.iteration = 0;
        self.right_done = true;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn clip_bound(&self) -> f64 {
        self.clip_bound
    }

    pub fn l_stage(&self, s: usize) -> &[f64] {
        &self.l[s * self.len..(s + 1) * self.len]
    }

    pub fn r_stage(&self, s: usize) -> &[f64] {
        &self.r[s * self.len..(s + 1) * self.len]
    }

    /// Overwrites `r` at stage 0 for the current iteration (CRC layer
    /// output).
    pub fn set_r0(&mut self, r0: &[f64]) -> Result<()> {
        if r0.len() != self.len {
            return Err(Error::LengthMismatch { expected: self.len, actual: r0.len() });
        }
        self.r[..self.len].copy_from_slice(r0);
        Ok(())
    }

    pub fn hard_decision(&self) -> Vec<u8> {
        hard_decision(self.l_stage(0), self.r_stage(0))
    }

    /// Stages `n-1` down to 0, reading `r` of the previous iteration.
    pub fn left_pass(&mut self, i: usize, kernel: Kernel) -> Result<()> {
        if i != self.iteration + 1 || i > self.max_iterations || i == 0 {
            return Err(Error::IterationOutOfRange { got: i, expected: self.iteration + 1, max: self.max_iterations });
        }
        let (len, bound) = (self.len, self.clip_bound);
        for s in (0..self.log_len).rev() {
            let half = 1usize << s;
            let (lo, hi) = self.l.split_at_mut((s + 1) * len);
            let out = &mut lo[s * len..];
            let inp = &hi[..len];
            let r = &self.r[s * len..(s + 1) * len];
            for t in (0..len).filter(|t| t & half == 0) {
                let j = t + half;
                let (a, b) = pe_update_left(inp[t], inp[j], r[t], r[j], kernel, bound);
                out[t] = a;
                out[j] = b;
            }
        }
        self.iteration = i;
        self.right_done = false;
        Ok(())
    }

    /// Stages 1 up to `n-1`, from stage-0 `r` of this iteration.
    pub fn right_pass(&mut self, i: usize, kernel: Kernel) -> Result<()> {
        if i != self.iteration || self.right_done {
            return Err(Error::IterationOutOfRange { got: i, expected: self.iteration, max: self.max_iterations });
        }
        let (len, bound) = (self.len, self.clip_bound);
        for s in 0..self.log_len.saturating_sub(1) {
            let half = 1usize << s;
            let (lo, hi) = self.r.split_at_mut((s + 1) * len);
            let inp = &lo[s * len..];
            let out = &mut hi[..len];
            let l = &self.l[(s + 1) * len..(s + 2) * len];
            for t in (0..len).filter(|t| t & half == 0) {
                let j = t + half;
                let (a, b) = pe_update_right(inp[t], inp[j], l[t], l[j], kernel, bound);
                out[t] = a;
                out[j] = b;
            }
        }
        self.right_done = true;
        Ok(())
    }

    pub fn max_abs_message(&self) -> (f64, f64) {
        let l = self.l.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let r = self.r[self.len..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        (l, r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{channel_llr, modulate};

    #[test]
    fn min_sum_values() {
        assert_eq!(min_sum_kernel(2.0, -3.0), -2.0);
        assert_eq!(min_sum_kernel(5.0, 0.0), 0.0);
        assert_eq!(min_sum_kernel(-4.0, 0.0), 0.0);
        assert_eq!(min_sum_kernel(-1.5, -0.5), 0.5);
    }

    #[test]
    fn exact_values() {
        // 2 atanh(tanh(0.5)^2), evaluated independently
        let want = 2.0 * (0.5f64.tanh().powi(2)).atanh();
        assert!((exact_kernel(1.0, 1.0) - want).abs() < 1e-14);
        assert!((want - 0.43378).abs() < 1e-5);
        assert_eq!(exact_kernel(3.0, 0.0), 0.0);
        assert!((exact_kernel(60.0, -50.0) + 50.0 - (-10f64).exp().ln_1p()).abs() < 1e-12);
    }

    #[test]
    fn exact_kernel_grad_matches_differences() {
        let h = 1e-6;
        for &(x, y) in &[(1.0, 2.0), (-0.3, 0.7), (2.5, -2.4), (4.0, 0.1), (-1.2, -3.3)] {
            let (dx, dy) = exact_kernel_grad(x, y);
            let fx = (exact_kernel(x + h, y) - exact_kernel(x - h, y)) / (2.0 * h);
            let fy = (exact_kernel(x, y + h) - exact_kernel(x, y - h)) / (2.0 * h);
            assert!((dx - fx).abs() < 1e-7, "{x} {y}: {dx} vs {fx}");
            assert!((dy - fy).abs() < 1e-7, "{x} {y}: {dy} vs {fy}");
        }
    }

    #[test]
    fn left_update_examples() {
        let k = Kernel::MinSum;
        assert_eq!(pe_update_left(0.0, 0.0, 0.0, 0.0, k, CLIP_BOUND), (0.0, 0.0));
        assert_eq!(pe_update_left(2.0, -3.0, 1.0, 1.0, k, CLIP_BOUND), (-2.0, -2.0));
        let (_, l_js) = pe_update_left(-7.0, 2.5, FROZEN_LLR, 0.0, k, CLIP_BOUND);
        assert_eq!(l_js, -7.0 + 2.5);
    }

    #[test]
    fn right_update_examples() {
        let k = Kernel::MinSum;
        assert_eq!(pe_update_right(0.0, 0.0, 0.0, 0.0, k, CLIP_BOUND), (0.0, 0.0));
        assert_eq!(pe_update_right(4.0, 1.0, -2.0, 3.0, k, CLIP_BOUND), (4.0, -1.0));
    }

    #[test]
    fn outputs_are_clipped() {
        let (a, b) = pe_update_left(30.0, 25.0, 0.0, 30.0, Kernel::MinSum, CLIP_BOUND);
        assert_eq!((a, b), (20.0, 20.0));
    }

    #[test]
    fn pe_positions_cover_stage() {
        for s in 0..3 {
            let pos: Vec<usize> = PeIndex::stage(8, s).map(|p| p.position()).collect();
            assert_eq!(pos, vec![0, 1, 2, 3]);
            for p in PeIndex::stage(8, s) {
                assert_eq!(p.j, p.t + (1 << s));
                assert_eq!(p.t >> s & 1, 0);
            }
        }
    }

    #[test]
    fn hard_decision_rules() {
        assert_eq!(hard_decision(&[1.0, -1.0, -2.0], &[-1.0, 0.0, 3.0]), vec![0, 1, 0]);
        assert_eq!(hard_decision(&[0.5; 4], &[0.0; 4]), vec![0; 4]);
    }

    fn fig1_spec() -> PolarCodeSpec {
        PolarCodeSpec::new(8, 5, 0, 0, vec![0, 1, 2, 4, 7, 6, 5, 3]).unwrap()
    }

    #[test]
    fn init_sets_frozen_and_channel() {
        let spec = fig1_spec();
        let llr = [1.0, -2.0, 30.0, -40.0, 0.0, 5.0, 6.0, -7.0];
        let st = init_messages(&spec, &llr, 5).unwrap();
        assert_eq!(&st.r_stage(0)[..3], &[FROZEN_LLR; 3]);
        assert_eq!(&st.r_stage(0)[3..], &[0.0; 5]);
        assert_eq!(st.l_stage(3)[2], 20.0);
        assert_eq!(st.l_stage(3)[3], -20.0);
        assert!(st.l_stage(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_state_stays_zero() {
        let spec = PolarCodeSpec::new(8, 8, 0, 0, (0..8).collect()).unwrap();
        let mut st = init_messages(&spec, &[0.0; 8], 3).unwrap();
        st.left_pass(1, Kernel::MinSum).unwrap();
        st.right_pass(1, Kernel::MinSum).unwrap();
        assert_eq!(st.max_abs_message(), (0.0, 0.0));
        assert_eq!(st.l_stage(0).len(), 8);
    }

    #[test]
    fn passes_enforce_iteration_order() {
        let spec = fig1_spec();
        let mut st = init_messages(&spec, &[1.0; 8], 2).unwrap();
        assert!(st.right_pass(1, Kernel::MinSum).is_err());
        assert!(st.left_pass(2, Kernel::MinSum).is_err());
        st.left_pass(1, Kernel::MinSum).unwrap();
        st.right_pass(1, Kernel::MinSum).unwrap();
        assert!(st.right_pass(1, Kernel::MinSum).is_err());
        st.left_pass(2, Kernel::MinSum).unwrap();
        assert!(st.left_pass(3, Kernel::MinSum).is_err());
    }

    #[test]
    fn noiseless_single_left_pass_recovers_u() {
        let spec = fig1_spec();
        for w in 0u8..32 {
            let word: Vec<u8> = (0..5).map(|i| (w >> i) & 1).collect();
            let u = spec.build_u(&word).unwrap();
            let x = spec.polar_transform(&u).unwrap();
            let llr: Vec<f64> = channel_llr(&modulate(&x), 0.5).iter().map(|v| v * 3.0).collect();
            let mut st = init_messages(&spec, &llr, 1).unwrap();
            st.left_pass(1, Kernel::MinSum).unwrap();
            assert_eq!(st.hard_decision(), u);
        }
    }
}
