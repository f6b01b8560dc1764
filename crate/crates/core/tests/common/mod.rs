//! Reference implementations written independently of the library, used as
//! oracles by several test targets.
#![allow(dead_code)]

use polar_cpbp::bp::{Kernel, CLIP_BOUND};
use polar_cpbp::channel::{add_awgn, channel_llr, modulate};
use polar_cpbp::code::{polar_transform, PolarCodeSpec};
use polar_cpbp::cpbp::CpbpConfig;
use polar_cpbp::neural::{Granularity, Network, Scheme, Tape, Targets, WeightSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// `x = u G` with `G` the n-fold Kronecker power of `[[1,0],[1,1]]`:
/// `G[i][j] = 1` exactly when the set bits of `j` are a subset of those of
/// `i`.
pub fn encode_by_matrix(u: &[u8]) -> Vec<u8> {
    let n = u.len();
    (0..n).map(|j| (0..n).filter(|&i| i & j == j).fold(0u8, |acc, i| acc ^ u[i])).collect()
}

/// Long division of `bits · x^len` by `x^len + poly`, remainder MSB first.
pub fn crc_by_division(bits: &[u8], len: usize, poly: u64) -> Vec<u8> {
    let mut gen = vec![1u8];
    gen.extend((0..len).rev().map(|k| ((poly >> k) & 1) as u8));
    let mut work = bits.to_vec();
    work.extend(std::iter::repeat_n(0, len));
    for i in 0..bits.len() {
        if work[i] == 1 {
            for (w, g) in work[i..=i + len].iter_mut().zip(&gen) {
                *w ^= g;
            }
        }
    }
    work[bits.len()..].to_vec()
}

fn f_minsum(a: f64, b: f64) -> f64 {
    let sign = if (a < 0.0) == (b < 0.0) { 1.0 } else { -1.0 };
    sign * a.abs().min(b.abs())
}

fn sat(x: f64) -> f64 {
    x.clamp(-20.0, 20.0)
}

/// Result of [`conventional_bp`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceOutcome {
    pub u_hat: Vec<u8>,
    pub payload: Vec<u8>,
    pub iterations: usize,
    pub crc_ok: bool,
}

/// Flooding min-sum BP on the polar factor graph with the CRC used only to
/// stop early. Messages are kept as full `L[stage][bit]`, `R[stage][bit]`
/// tables; the column `n` of `L` holds the channel values.
pub fn conventional_bp(spec: &PolarCodeSpec, chan: &[f64], i_max: usize) -> ReferenceOutcome {
    let n_len = spec.len();
    let n = n_len.trailing_zeros() as usize;
    let mut big_l = vec![vec![0.0f64; n_len]; n + 1];
    let mut big_r = vec![vec![0.0f64; n_len]; n + 1];
    for t in 0..n_len {
        big_l[n][t] = sat(chan[t]);
        big_r[0][t] = if spec.is_frozen(t) { 1000.0 } else { 0.0 };
    }
    let info = spec.info_set();
    let k = spec.k_info();
    let crc_len = spec.crc_len();
    let poly = spec.crc().poly();
    let mut u_hat = vec![0u8; n_len];
    for it in 1..=i_max {
        for s in (0..n).rev() {
            let step = 1 << s;
            for block in (0..n_len).step_by(2 * step) {
                for t in block..block + step {
                    let j = t + step;
                    let (lt, lj) = (big_l[s + 1][t], big_l[s + 1][j]);
                    let (rt, rj) = (big_r[s][t], big_r[s][j]);
                    big_l[s][t] = sat(f_minsum(lt, rj + lj));
                    big_l[s][j] = sat(f_minsum(lt, rt) + lj);
                }
            }
        }
        for t in 0..n_len {
            u_hat[t] = u8::from(big_l[0][t] + big_r[0][t] < 0.0);
        }
        let word: Vec<u8> = info.iter().map(|&p| u_hat[p]).collect();
        if crc_by_division(&word[..k], crc_len, poly) == word[k..] {
            return ReferenceOutcome { payload: word[..k].to_vec(), u_hat, iterations: it, crc_ok: true };
        }
        if it == i_max {
            return ReferenceOutcome { payload: word[..k].to_vec(), u_hat, iterations: it, crc_ok: false };
        }
        for s in 0..n - 1 {
            let step = 1 << s;
            for block in (0..n_len).step_by(2 * step) {
                for t in block..block + step {
                    let j = t + step;
                    let (rt, rj) = (big_r[s][t], big_r[s][j]);
                    let (lt, lj) = (big_l[s + 1][t], big_l[s + 1][j]);
                    big_r[s + 1][t] = sat(f_minsum(rt, lj + rj));
                    big_r[s + 1][j] = sat(f_minsum(rt, lt) + rj);
                }
            }
        }
    }
    unreachable!("i_max is at least one")
}

/// Outcome of [`gradient_check`].
#[derive(Debug, Clone, Copy)]
pub struct GradientReport {
    /// Slots whose perturbed evaluations stayed on the same smooth piece.
    pub checked: usize,
    pub nonzero: usize,
    /// Worst `|analytic - fd| / max(|analytic|, 1e-8)` over checked slots
    /// whose gradients are not both below `1e-10`.
    pub max_rel: f64,
}

/// Central differences (step `1e-4`) against reverse-mode gradients on
/// `P(8, 2)` with a 3-bit CRC, `I_max = 2`, `I_thr = 0`, for `rounds`
/// random frames and weight draws per scheme.
pub fn gradient_check(seed: u64, rounds: usize) -> GradientReport {
    let spec = PolarCodeSpec::nr(8, 2, 3, 0b011).unwrap();
    let cfg = CpbpConfig::new(2, 0, Kernel::MinSum).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let h = 1e-4;
    let mut report = GradientReport { checked: 0, nonzero: 0, max_rel: 0.0 };
    for (scheme, gran) in [
        (Scheme::Ncpbp, Granularity::PerPe),
        (Scheme::NnmsRnn, Granularity::PerStage),
        (Scheme::Nnms, Granularity::PerPe),
    ] {
        for _ in 0..rounds {
            let mut ws = WeightSet::ones(scheme, &spec, &cfg, gran).unwrap();
            let w: Vec<f64> = (0..ws.num_trainable()).map(|_| rng.random_range(0.6..1.4)).collect();
            ws.set_trainable(&w).unwrap();
            let net = Network::new(&spec, cfg, &ws).unwrap();
            let payload: Vec<u8> = (0..2).map(|_| u8::from(rng.random::<bool>())).collect();
            let u = spec.build_u(&spec.attach_crc(&payload).unwrap()).unwrap();
            let x = polar_transform(&u).unwrap();
            let mut noise = ChaCha20Rng::seed_from_u64(rng.random());
            let llr = channel_llr(&add_awgn(&modulate(&x), 0.8, &mut noise), 0.8);
            let targets = Targets::from_message(&spec, &u).unwrap();

            let mut tape = Tape::new(CLIP_BOUND);
            let out = net.record(&mut tape, &w, &llr, &targets).unwrap();
            assert_eq!(tape.values()[out.index()], net.loss(&w, &llr, &targets).unwrap());
            let sig = tape.branch_signature(tape.values());
            let analytic = tape.backward(out, 1.0);
            for k in 0..w.len() {
                let mut wp = w.clone();
                wp[k] += h;
                let mut wm = w.clone();
                wm[k] -= h;
                let (vp, vm) = (tape.replay(&wp), tape.replay(&wm));
                if tape.branch_signature(&vp) != sig || tape.branch_signature(&vm) != sig {
                    continue;
                }
                let fd = (vp[out.index()] - vm[out.index()]) / (2.0 * h);
                let a = analytic[k];
                if (a - fd).abs() > 1e-10 {
                    report.max_rel = report.max_rel.max((a - fd).abs() / a.abs().max(1e-8));
                }
                report.checked += 1;
                report.nonzero += usize::from(a != 0.0);
            }
        }
    }
    report
}
