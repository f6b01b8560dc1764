//! Scalar evaluation backends for the unrolled decoder.
//!
//! The forward pass is written once against [`Backend`]. [`Plain`] evaluates
//! on `f64` directly; [`Tape`] additionally records every operation so that
//! gradients can be accumulated in reverse.

use super::pe::{compose_left, compose_right, PeWeights};
use crate::bp::{exact_kernel, exact_kernel_grad, min_sum_kernel, Kernel};

pub trait Backend {
    type V: Copy;

    fn constant(&mut self, x: f64) -> Self::V;
    fn value(&self, v: Self::V) -> f64;
    fn add(&mut self, a: Self::V, b: Self::V) -> Self::V;
    fn mul(&mut self, w: Self::V, x: Self::V) -> Self::V;
    fn kernel(&mut self, k: Kernel, a: Self::V, b: Self::V) -> Self::V;
    fn clip(&mut self, a: Self::V) -> Self::V;
    /// Min-sum check-node messages: `out[e]` combines every input except `e`.
    fn extrinsic(&mut self, inputs: &[Self::V], out: &mut Vec<Self::V>);
    /// Left-to-right sum starting from `0.0`.
    fn sum(&mut self, terms: &[Self::V]) -> Self::V;
    /// Binary cross-entropy of LLR `a` against a hard bit.
    fn bce(&mut self, a: Self::V, target: u8) -> Self::V;

    /// Loss term `bce(clip(a + b), target)`.
    fn soft_bce(&mut self, a: Self::V, b: Self::V, target: u8) -> Self::V
    where
        Self: Sized,
    {
        let s = self.add(a, b);
        let c = self.clip(s);
        self.bce(c, target)
    }

    /// Weighted right-to-left PE update, `(l_ts, l_js)`.
    fn pe_left(
        &mut self,
        w: &PeWeights<Self::V>,
        kernel: Kernel,
        l_tk: Self::V,
        l_jk: Self::V,
        r_ts: Self::V,
        r_js: Self::V,
    ) -> (Self::V, Self::V)
    where
        Self: Sized,
    {
        compose_left(self, w, kernel, l_tk, l_jk, r_ts, r_js)
    }

    /// Weighted left-to-right PE update, `(r_tk, r_jk)`.
    fn pe_right(
        &mut self,
        w: &PeWeights<Self::V>,
        kernel: Kernel,
        r_ts: Self::V,
        r_js: Self::V,
        l_tk: Self::V,
        l_jk: Self::V,
    ) -> (Self::V, Self::V)
    where
        Self: Sized,
    {
        compose_right(self, w, kernel, r_ts, r_js, l_tk, l_jk)
    }

    /// `w * x`, or `x` untouched for a fixed unit slot.
    #[inline]
    fn scale(&mut self, w: Option<Self::V>, x: Self::V) -> Self::V {
        match w {
            Some(w) => self.mul(w, x),
            None => x,
        }
    }
}

/// `ln(1 + e^z)` without overflow.
#[inline]
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Cross-entropy between `p(bit = 1) = sigmoid(-llr)` and a hard target.
#[inline]
pub fn bce_value(llr: f64, target: u8) -> f64 {
    if target == 0 {
        softplus(-llr)
    } else {
        softplus(llr)
    }
}

#[inline]
fn bce_grad(llr: f64, target: u8) -> f64 {
    if target == 0 {
        -sigmoid(-llr)
    } else {
        sigmoid(llr)
    }
}

#[inline]
fn kernel_value(k: Kernel, a: f64, b: f64) -> f64 {
    match k {
        Kernel::MinSum => min_sum_kernel(a, b),
        Kernel::Exact => exact_kernel(a, b),
    }
}

/// Min-sum extrinsic values of a check, with first-index ties.
fn extrinsic_values(x: &[f64], out: &mut Vec<f64>) {
    let (mut min1, mut min2, mut arg1, mut neg) = (f64::INFINITY, f64::INFINITY, usize::MAX, false);
    for (e, &v) in x.iter().enumerate() {
        let m = v.abs();
        neg ^= v < 0.0;
        if m < min1 {
            min2 = min1;
            min1 = m;
            arg1 = e;
        } else if m < min2 {
            min2 = m;
        }
    }
    out.clear();
    out.extend(x.iter().enumerate().map(|(e, &v)| {
        let m = if e == arg1 { min2 } else { min1 };
        if neg ^ (v < 0.0) {
            -m
        } else {
            m
        }
    }));
}

/// Direct floating-point evaluation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Plain {
    pub bound: f64,
}

impl Plain {
    pub fn new(bound: f64) -> Self {
        Self { bound }
    }
}

impl Backend for Plain {
    type V = f64;

    #[inline]
    fn constant(&mut self, x: f64) -> f64 {
        x
    }
    #[inline]
    fn value(&self, v: f64) -> f64 {
        v
    }
    #[inline]
    fn add(&mut self, a: f64, b: f64) -> f64 {
        a + b
    }
    #[inline]
    fn mul(&mut self, w: f64, x: f64) -> f64 {
        w * x
    }
    #[inline]
    fn kernel(&mut self, k: Kernel, a: f64, b: f64) -> f64 {
        kernel_value(k, a, b)
    }
    #[inline]
    fn clip(&mut self, a: f64) -> f64 {
        a.clamp(-self.bound, self.bound)
    }
    fn extrinsic(&mut self, inputs: &[f64], out: &mut Vec<f64>) {
        extrinsic_values(inputs, out);
    }
    fn sum(&mut self, terms: &[f64]) -> f64 {
        terms.iter().fold(0.0, |acc, &t| acc + t)
    }
    #[inline]
    fn bce(&mut self, a: f64, target: u8) -> f64 {
        bce_value(a, target)
    }
}

/// Index of a recorded value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Node(u32);

impl Node {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Const,
    Weight(u32),
    Add(u32, u32),
    Mul(u32, u32),
    MinSum(u32, u32),
    Exact(u32, u32),
    Clip(u32),
    /// Inputs are `aux[start..start + len]`; the value excludes input
    /// `skip`. `arg` is the input attaining the minimum and `neg` the sign
    /// of the remaining inputs, both fixed when recorded.
    Extrinsic { start: u32, len: u16, skip: u16, arg: u16, neg: bool },
    Sum { start: u32, len: u32 },
    Bce(u32, u8),
    /// `bce(clip(a + b))`.
    SoftBce(u32, u32, u8),
    /// One output of a fused PE; `aux[rec..rec + 10]` holds the inputs
    /// `x0, y, p, q` and weight slots `A, B, C, D, G, E` (see [`PeParts`]).
    Pe { rec: u32, mode: u8, lower: bool },
}

const MODE_EXACT: u8 = 1;
const MODE_MERGED: u8 = 2;

/// Intermediates of a fused PE:
/// `upper = clip(A K(x0, s))` with `s = B (p + q)` (merged) or
/// `s = B p + C q`, and `lower = clip(G (D K(x0, y)) + E q)`. Fixed slots
/// point at a constant one; multiplying by it is exact.
struct PeParts {
    x0: f64,
    y: f64,
    p: f64,
    q: f64,
    w: [f64; 6],
    s: f64,
    k: f64,
    pre_upper: f64,
    k2: f64,
    pre_lower: f64,
}

#[inline]
fn sgn(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Partial derivatives of a kernel, with the min-sum tie rule.
#[inline]
fn kernel_grad(exact: bool, a: f64, b: f64) -> (f64, f64) {
    if exact {
        exact_kernel_grad(a, b)
    } else if a.abs() <= b.abs() {
        (sgn(b), 0.0)
    } else {
        (0.0, sgn(a))
    }
}

/// Recorded scalar computation with reverse-mode differentiation.
#[derive(Debug, Clone, Default)]
pub struct Tape {
    bound: f64,
    ops: Vec<Op>,
    vals: Vec<f64>,
    aux: Vec<u32>,
    weights: usize,
    one: Option<Node>,
    scratch: Vec<f64>,
}

impl Tape {
    pub fn new(bound: f64) -> Self {
        Self { bound, ..Default::default() }
    }

    pub fn clear(&mut self) {
        self.ops.clear();
        self.vals.clear();
        self.aux.clear();
        self.weights = 0;
        self.one = None;
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn num_weights(&self) -> usize {
        self.weights
    }

    /// Leaf for trainable slot `slot`; slots must be created as `0, 1, ...`.
    pub fn weight(&mut self, value: f64) -> Node {
        let slot = self.weights as u32;
        self.weights += 1;
        self.push(Op::Weight(slot), value)
    }

    pub fn values(&self) -> &[f64] {
        &self.vals
    }

    #[inline]
    fn pe_parts(&self, rec: u32, mode: u8, vals: &[f64]) -> PeParts {
        let r: &[u32; 10] = self.aux[rec as usize..rec as usize + 10].try_into().expect("PE record");
        let ld = |i: u32| vals[i as usize];
        let (x0, y, p, q) = (ld(r[0]), ld(r[1]), ld(r[2]), ld(r[3]));
        let w = [ld(r[4]), ld(r[5]), ld(r[6]), ld(r[7]), ld(r[8]), ld(r[9])];
        let exact = mode & MODE_EXACT != 0;
        let kern = |a: f64, b: f64| if exact { exact_kernel(a, b) } else { min_sum_kernel(a, b) };
        let s = if mode & MODE_MERGED != 0 { w[1] * (p + q) } else { w[1] * p + w[2] * q };
        let k = kern(x0, s);
        let pre_upper = w[0] * k;
        let k2 = kern(x0, y);
        let pre_lower = w[4] * (w[3] * k2) + w[5] * q;
        PeParts { x0, y, p, q, w, s, k, pre_upper, k2, pre_lower }
    }

    fn push_pe(&mut self, kernel: Kernel, merged: bool, inputs: [Node; 4], w: [Option<Node>; 6]) -> (Node, Node) {
        let one = match self.one {
            Some(n) => n,
            None => {
                let n = self.push(Op::Const, 1.0);
                self.one = Some(n);
                n
            }
        };
        let rec = self.aux.len() as u32;
        self.aux.extend(inputs.iter().map(|n| n.0));
        self.aux.extend(w.iter().map(|n| n.unwrap_or(one).0));
        let mode = u8::from(kernel == Kernel::Exact) * MODE_EXACT + u8::from(merged) * MODE_MERGED;
        let parts = self.pe_parts(rec, mode, &self.vals);
        let b = self.bound;
        let upper = self.push(Op::Pe { rec, mode, lower: false }, parts.pre_upper.clamp(-b, b));
        let lower = self.push(Op::Pe { rec, mode, lower: true }, parts.pre_lower.clamp(-b, b));
        (upper, lower)
    }

    #[inline]
    fn push(&mut self, op: Op, v: f64) -> Node {
        let id = self.ops.len() as u32;
        self.ops.push(op);
        self.vals.push(v);
        Node(id)
    }

    fn eval(&self, op: Op, node: usize, vals: &[f64], weights: &[f64]) -> f64 {
        let v = |i: u32| vals[i as usize];
        match op {
            Op::Const => self.vals[node],
            Op::Weight(s) => weights[s as usize],
            Op::Add(a, b) => v(a) + v(b),
            Op::Mul(a, b) => v(a) * v(b),
            Op::MinSum(a, b) => min_sum_kernel(v(a), v(b)),
            Op::Exact(a, b) => exact_kernel(v(a), v(b)),
            Op::Clip(a) => v(a).clamp(-self.bound, self.bound),
            Op::Extrinsic { start, len, skip, .. } => {
                let inputs = &self.aux[start as usize..start as usize + len as usize];
                let (mut m, mut neg) = (f64::INFINITY, false);
                for (e, &i) in inputs.iter().enumerate() {
                    neg ^= v(i) < 0.0;
                    if e != skip as usize {
                        m = m.min(v(i).abs());
                    }
                }
                if neg ^ (v(inputs[skip as usize]) < 0.0) {
                    -m
                } else {
                    m
                }
            }
            Op::Sum { start, len } => {
                self.aux[start as usize..(start + len) as usize].iter().fold(0.0, |acc, &i| acc + v(i))
            }
            Op::Bce(a, t) => bce_value(v(a), t),
            Op::SoftBce(a, b, t) => bce_value((v(a) + v(b)).clamp(-self.bound, self.bound), t),
            Op::Pe { rec, mode, lower } => {
                let parts = self.pe_parts(rec, mode, vals);
                let pre = if lower { parts.pre_lower } else { parts.pre_upper };
                pre.clamp(-self.bound, self.bound)
            }
        }
    }

    /// Re-evaluates every node with new weight values.
    pub fn replay(&self, weights: &[f64]) -> Vec<f64> {
        assert_eq!(weights.len(), self.weights, "replay needs one value per weight leaf");
        let mut vals = Vec::with_capacity(self.vals.len());
        for (n, &op) in self.ops.iter().enumerate() {
            let x = self.eval(op, n, &vals, weights);
            vals.push(x);
        }
        vals
    }

    /// Which side of every non-smooth point each node sits on, given node
    /// values `vals`. Two evaluations with equal signatures lie on the same
    /// smooth piece.
    pub fn branch_signature(&self, vals: &[f64]) -> Vec<u32> {
        let v = |i: u32| vals[i as usize];
        let mut sig = Vec::new();
        for &op in &self.ops {
            match op {
                Op::MinSum(a, b) => sig.push(u32::from(v(a).abs() <= v(b).abs())),
                Op::Clip(a) => sig.push(u32::from(v(a).abs() > self.bound)),
                Op::Extrinsic { start, len, skip, .. } => {
                    let inputs = &self.aux[start as usize..start as usize + len as usize];
                    sig.push(argmin_excluding(inputs, skip as usize, vals) as u32);
                }
                Op::SoftBce(a, b, _) => sig.push(u32::from((v(a) + v(b)).abs() > self.bound)),
                Op::Pe { rec, mode, lower } => {
                    let pp = self.pe_parts(rec, mode, vals);
                    let (other, pre) = if lower { (pp.y, pp.pre_lower) } else { (pp.s, pp.pre_upper) };
                    if mode & MODE_EXACT == 0 {
                        sig.push(u32::from(pp.x0.abs() <= other.abs()));
                    }
                    sig.push(u32::from(pre.abs() > self.bound));
                }
                _ => {}
            }
        }
        sig
    }

    /// Gradient of node `out` scaled by `seed`, per weight leaf.
    pub fn backward(&mut self, out: Node, seed: f64) -> Vec<f64> {
        let mut grad = vec![0.0; self.weights];
        self.backward_into(out, seed, &mut grad);
        grad
    }

    /// Adds `seed * d out / d w` into `grad`.
    pub fn backward_into(&mut self, out: Node, seed: f64, grad: &mut [f64]) {
        assert_eq!(grad.len(), self.weights);
        let mut adj = std::mem::take(&mut self.scratch);
        adj.clear();
        adj.resize(out.index() + 1, 0.0);
        adj[out.index()] = seed;
        let vals = &self.vals;
        let v = |i: u32| vals[i as usize];
        for n in (0..=out.index()).rev() {
            let g = adj[n];
            let op = self.ops[n];
            // the upper output of a PE sits right before the lower one and is
            // handled together with it
            let pair = matches!(op, Op::Pe { lower: true, .. });
            if g == 0.0 && !pair {
                continue;
            }
            match op {
                Op::Const => {}
                Op::Weight(s) => grad[s as usize] += g,
                Op::Add(a, b) => {
                    adj[a as usize] += g;
                    adj[b as usize] += g;
                }
                Op::Mul(a, b) => {
                    adj[a as usize] += g * v(b);
                    adj[b as usize] += g * v(a);
                }
                Op::MinSum(a, b) => {
                    let (x, y) = (v(a), v(b));
                    let sign = |z: f64| if z < 0.0 { -1.0 } else { 1.0 };
                    if x.abs() <= y.abs() {
                        adj[a as usize] += g * sign(y);
                    } else {
                        adj[b as usize] += g * sign(x);
                    }
                }
                Op::Exact(a, b) => {
                    let (dx, dy) = exact_kernel_grad(v(a), v(b));
                    adj[a as usize] += g * dx;
                    adj[b as usize] += g * dy;
                }
                Op::Clip(a) => {
                    if v(a).abs() <= self.bound {
                        adj[a as usize] += g;
                    }
                }
                Op::Extrinsic { start, arg, neg, .. } => {
                    let input = self.aux[start as usize + arg as usize];
                    adj[input as usize] += if neg { -g } else { g };
                }
                Op::Sum { start, len } => {
                    for &i in &self.aux[start as usize..(start + len) as usize] {
                        adj[i as usize] += g;
                    }
                }
                Op::Bce(a, t) => adj[a as usize] += g * bce_grad(v(a), t),
                Op::SoftBce(a, b, t) => {
                    let x = v(a) + v(b);
                    if x.abs() <= self.bound {
                        let d = g * bce_grad(x, t);
                        adj[a as usize] += d;
                        adj[b as usize] += d;
                    }
                }
                Op::Pe { lower: false, .. } => {}
                Op::Pe { rec, mode, lower: true } => {
                    let g_up = if n > 0 && matches!(self.ops[n - 1], Op::Pe { lower: false, .. }) { adj[n - 1] } else { 0.0 };
                    if g == 0.0 && g_up == 0.0 {
                        continue;
                    }
                    let pp = self.pe_parts(rec, mode, vals);
                    let r = &self.aux[rec as usize..rec as usize + 10];
                    let exact = mode & MODE_EXACT != 0;
                    let mut put = |slot: usize, d: f64| adj[r[slot] as usize] += d;
                    let w = pp.w;
                    if g_up != 0.0 && pp.pre_upper.abs() <= self.bound {
                        put(4, g_up * pp.k);
                        let gk = g_up * w[0];
                        let (dx0, ds) = kernel_grad(exact, pp.x0, pp.s);
                        put(0, gk * dx0);
                        let gs = gk * ds;
                        if mode & MODE_MERGED != 0 {
                            put(5, gs * (pp.p + pp.q));
                            put(2, gs * w[1]);
                            put(3, gs * w[1]);
                        } else {
                            put(5, gs * pp.p);
                            put(6, gs * pp.q);
                            put(2, gs * w[1]);
                            put(3, gs * w[2]);
                        }
                    }
                    if g != 0.0 && pp.pre_lower.abs() <= self.bound {
                        put(9, g * pp.q);
                        put(3, g * w[5]);
                        put(8, g * (w[3] * pp.k2));
                        let gt = g * w[4];
                        put(7, gt * pp.k2);
                        let gt = gt * w[3];
                        let (dx0, dy) = kernel_grad(exact, pp.x0, pp.y);
                        put(0, gt * dx0);
                        put(1, gt * dy);
                    }
                }
            }
        }
        self.scratch = adj;
    }
}

fn argmin_excluding(inputs: &[u32], skip: usize, vals: &[f64]) -> usize {
    let mut best = usize::MAX;
    let mut m = f64::INFINITY;
    for (e, &i) in inputs.iter().enumerate() {
        let a = vals[i as usize].abs();
        if e != skip && (best == usize::MAX || a < m) {
            best = e;
            m = a;
        }
    }
    best
}

impl Backend for Tape {
    type V = Node;

    #[inline]
    fn constant(&mut self, x: f64) -> Node {
        self.push(Op::Const, x)
    }
    #[inline]
    fn value(&self, v: Node) -> f64 {
        self.vals[v.index()]
    }
    #[inline]
    fn add(&mut self, a: Node, b: Node) -> Node {
        let x = self.value(a) + self.value(b);
        self.push(Op::Add(a.0, b.0), x)
    }
    #[inline]
    fn mul(&mut self, w: Node, x: Node) -> Node {
        let y = self.value(w) * self.value(x);
        self.push(Op::Mul(w.0, x.0), y)
    }
    #[inline]
    fn kernel(&mut self, k: Kernel, a: Node, b: Node) -> Node {
        let y = kernel_value(k, self.value(a), self.value(b));
        let op = match k {
            Kernel::MinSum => Op::MinSum(a.0, b.0),
            Kernel::Exact => Op::Exact(a.0, b.0),
        };
        self.push(op, y)
    }
    #[inline]
    fn clip(&mut self, a: Node) -> Node {
        let y = self.value(a).clamp(-self.bound, self.bound);
        self.push(Op::Clip(a.0), y)
    }
    fn extrinsic(&mut self, inputs: &[Node], out: &mut Vec<Node>) {
        let start = self.aux.len() as u32;
        self.aux.extend(inputs.iter().map(|n| n.0));
        let x: Vec<f64> = inputs.iter().map(|&n| self.value(n)).collect();
        let mut ys = Vec::with_capacity(x.len());
        extrinsic_values(&x, &mut ys);
        let len = u16::try_from(inputs.len()).expect("check degree fits in u16");
        // two smallest magnitudes, first index wins ties
        let (mut a1, mut a2) = (usize::MAX, usize::MAX);
        for (e, v) in x.iter().enumerate() {
            if a1 == usize::MAX || v.abs() < x[a1].abs() {
                a2 = a1;
                a1 = e;
            } else if a2 == usize::MAX || v.abs() < x[a2].abs() {
                a2 = e;
            }
        }
        let neg_all = x.iter().fold(false, |n, &v| n ^ (v < 0.0));
        out.clear();
        for (e, y) in ys.into_iter().enumerate() {
            let arg = if e == a1 { a2 } else { a1 };
            let neg = neg_all ^ (x[e] < 0.0) ^ (x[arg] < 0.0);
            let op = Op::Extrinsic { start, len, skip: e as u16, arg: arg as u16, neg };
            out.push(self.push(op, y));
        }
    }
    fn sum(&mut self, terms: &[Node]) -> Node {
        let start = self.aux.len() as u32;
        self.aux.extend(terms.iter().map(|n| n.0));
        let y = terms.iter().fold(0.0, |acc, &t| acc + self.value(t));
        self.push(Op::Sum { start, len: terms.len() as u32 }, y)
    }
    #[inline]
    fn bce(&mut self, a: Node, target: u8) -> Node {
        let y = bce_value(self.value(a), target);
        self.push(Op::Bce(a.0, target), y)
    }
    #[inline]
    fn soft_bce(&mut self, a: Node, b: Node, target: u8) -> Node {
        let y = bce_value((self.value(a) + self.value(b)).clamp(-self.bound, self.bound), target);
        self.push(Op::SoftBce(a.0, b.0, target), y)
    }

    fn pe_left(&mut self, w: &PeWeights<Node>, kernel: Kernel, l_tk: Node, l_jk: Node, r_ts: Node, r_js: Node) -> (Node, Node) {
        let inputs = [l_tk, r_ts, r_js, l_jk];
        match w {
            PeWeights::Merged(w) => self.push_pe(kernel, true, inputs, [w[0], w[1], None, w[2], None, w[3]]),
            PeWeights::Full(w) => self.push_pe(kernel, false, inputs, [w[0], w[1], w[2], w[3], w[4], w[5]]),
        }
    }

    fn pe_right(&mut self, w: &PeWeights<Node>, kernel: Kernel, r_ts: Node, r_js: Node, l_tk: Node, l_jk: Node) -> (Node, Node) {
        let inputs = [r_ts, l_tk, l_jk, r_js];
        match w {
            PeWeights::Merged(w) => self.push_pe(kernel, true, inputs, [w[4], w[5], None, w[6], None, w[7]]),
            PeWeights::Full(w) => self.push_pe(kernel, false, inputs, [w[6], w[7], w[8], w[9], w[10], w[11]]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softplus_and_sigmoid() {
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(softplus(800.0), 800.0);
        assert!(softplus(-800.0) >= 0.0);
        assert!((sigmoid(3.0) + sigmoid(-3.0) - 1.0).abs() < 1e-15);
        assert!((bce_value(0.0, 1) - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn tape_matches_plain_and_replays() {
        let mut t = Tape::new(20.0);
        let w = t.weight(0.7);
        let a = t.constant(-3.0);
        let b = t.constant(2.5);
        let s = t.add(a, b);
        let m = t.mul(w, s);
        let k = t.kernel(Kernel::MinSum, m, b);
        let c = t.clip(k);
        let l = t.bce(c, 1);
        let mut p = Plain::new(20.0);
        let clipped = p.clip(min_sum_kernel(0.7 * (-3.0 + 2.5), 2.5));
        let expect = p.bce(clipped, 1);
        assert_eq!(t.value(l), expect);
        assert_eq!(t.replay(&[0.7]), t.values());
        let g = t.backward(l, 1.0);
        // d/dw softplus(w * -0.5) = -0.5 sigmoid(-0.35)
        assert!((g[0] - (-0.5 * sigmoid(-0.35))).abs() < 1e-14);
        let g2 = t.backward(l, 2.0);
        assert_eq!(g2[0], 2.0 * g[0]);
    }

    #[test]
    fn extrinsic_gradient_follows_the_minimum() {
        let mut t = Tape::new(20.0);
        let ws: Vec<Node> = [1.0, -2.0, 3.0].iter().map(|&x| t.weight(x)).collect();
        let mut out = Vec::new();
        t.extrinsic(&ws, &mut out);
        let vals: Vec<f64> = out.iter().map(|&n| t.value(n)).collect();
        assert_eq!(vals, vec![-2.0, 1.0, -1.0]);
        assert_eq!(t.replay(&[1.0, -2.0, 3.0]), t.values());
        let total = t.sum(&out);
        let g = t.backward(total, 1.0);
        // out0 = -|w1| sgn.. -> d/dw1 = +1 (w1 < 0 so -|w1| = w1); out1 = w0; out2 = -w0
        assert_eq!(g, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn saturated_clip_blocks_gradient() {
        let mut t = Tape::new(1.0);
        let w = t.weight(5.0);
        let c = t.clip(w);
        assert_eq!(t.backward(c, 1.0), vec![0.0]);
    }
}
