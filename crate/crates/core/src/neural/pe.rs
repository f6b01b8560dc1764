use super::tape::{Backend, Plain};
use super::weights::{Scheme, WeightLayout};
use crate::bp::Kernel;

/// Weights seen by one PE. `None` is a slot fixed to one, which skips the
/// multiplication altogether.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PeWeights<V> {
    /// `[w0, w12, w34, w5, w6, w78, w910, w11]`.
    Merged([Option<V>; 8]),
    /// `[w0, w1, ..., w11]`.
    Full([Option<V>; 12]),
}

impl<V: Copy> PeWeights<V> {
    pub fn unit() -> Self {
        PeWeights::Merged([None; 8])
    }

    /// View of the unit starting at `base` in the flat slot vector `w`.
    #[inline]
    pub fn view(layout: &WeightLayout, w: &[V], base: usize) -> Self {
        match layout.scheme {
            Scheme::Unweighted => Self::unit(),
            Scheme::Ncpbp => PeWeights::Merged(std::array::from_fn(|k| Some(w[base + k]))),
            Scheme::NnmsRnn => PeWeights::Full(std::array::from_fn(|k| Some(w[base + k]))),
            Scheme::Nnms => {
                let mut full = [None; 12];
                for (k, slot) in [0, 3, 6, 9].into_iter().enumerate() {
                    full[slot] = Some(w[base + k]);
                }
                PeWeights::Full(full)
            }
        }
    }
}

impl PeWeights<f64> {
    /// Merged form with concrete values.
    pub fn merged(w: [f64; 8]) -> Self {
        PeWeights::Merged(w.map(Some))
    }

    pub fn full(w: [f64; 12]) -> Self {
        PeWeights::Full(w.map(Some))
    }
}

pub(crate) fn compose_left<B: Backend>(
    b: &mut B,
    w: &PeWeights<B::V>,
    kernel: Kernel,
    l_tk: B::V,
    l_jk: B::V,
    r_ts: B::V,
    r_js: B::V,
) -> (B::V, B::V) {
    let (upper, lower) = match w {
        PeWeights::Merged(w) => {
            let s = b.add(r_js, l_jk);
            let s = b.scale(w[1], s);
            let f = b.kernel(kernel, l_tk, s);
            let upper = b.scale(w[0], f);
            let f = b.kernel(kernel, l_tk, r_ts);
            let x = b.scale(w[2], f);
            let y = b.scale(w[3], l_jk);
            (upper, b.add(x, y))
        }
        PeWeights::Full(w) => {
            let x = b.scale(w[1], r_js);
            let y = b.scale(w[2], l_jk);
            let s = b.add(x, y);
            let f = b.kernel(kernel, l_tk, s);
            let upper = b.scale(w[0], f);
            let f = b.kernel(kernel, l_tk, r_ts);
            let f = b.scale(w[3], f);
            let x = b.scale(w[4], f);
            let y = b.scale(w[5], l_jk);
            (upper, b.add(x, y))
        }
    };
    (b.clip(upper), b.clip(lower))
}

pub(crate) fn compose_right<B: Backend>(
    b: &mut B,
    w: &PeWeights<B::V>,
    kernel: Kernel,
    r_ts: B::V,
    r_js: B::V,
    l_tk: B::V,
    l_jk: B::V,
) -> (B::V, B::V) {
    let (upper, lower) = match w {
        PeWeights::Merged(w) => {
            let s = b.add(l_jk, r_js);
            let s = b.scale(w[5], s);
            let f = b.kernel(kernel, r_ts, s);
            let upper = b.scale(w[4], f);
            let f = b.kernel(kernel, r_ts, l_tk);
            let x = b.scale(w[6], f);
            let y = b.scale(w[7], r_js);
            (upper, b.add(x, y))
        }
        PeWeights::Full(w) => {
            let x = b.scale(w[7], l_jk);
            let y = b.scale(w[8], r_js);
            let s = b.add(x, y);
            let f = b.kernel(kernel, r_ts, s);
            let upper = b.scale(w[6], f);
            let f = b.kernel(kernel, r_ts, l_tk);
            let f = b.scale(w[9], f);
            let x = b.scale(w[10], f);
            let y = b.scale(w[11], r_js);
            (upper, b.add(x, y))
        }
    };
    (b.clip(upper), b.clip(lower))
}

/// Weighted right-to-left PE update: `(l_{t,s}, l_{j,s})`.
pub fn weighted_pe_left(
    l_tk: f64,
    l_jk: f64,
    r_ts: f64,
    r_js: f64,
    w: &PeWeights<f64>,
    kernel: Kernel,
    bound: f64,
) -> (f64, f64) {
    compose_left(&mut Plain::new(bound), w, kernel, l_tk, l_jk, r_ts, r_js)
}

/// Weighted left-to-right PE update: `(r_{t,k}, r_{j,k})`.
pub fn weighted_pe_right(
    r_ts: f64,
    r_js: f64,
    l_tk: f64,
    l_jk: f64,
    w: &PeWeights<f64>,
    kernel: Kernel,
    bound: f64,
) -> (f64, f64) {
    compose_right(&mut Plain::new(bound), w, kernel, r_ts, r_js, l_tk, l_jk)
}
