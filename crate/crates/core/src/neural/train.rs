use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::forward::{Network, Targets};
use super::rmsprop::{rmsprop_step, RmsPropConfig, RmsPropState};
use super::tape::Tape;
use super::weights::{Granularity, Provenance, Scheme, WeightSet};
use crate::bp::CLIP_BOUND;
use crate::channel::{add_awgn, channel_llr, frame_rng, sigma_from_ebn0, RateMode};
use crate::code::PolarCodeSpec;
use crate::cpbp::CpbpConfig;
use crate::harness::point_seed;
use crate::{Error, Result};

const TRAIN_STREAM: u64 = 0x7472_6169_6e00_0001;
const HELDOUT_STREAM: u64 = 0x6865_6c64_0000_0002;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub scheme: Scheme,
    pub granularity: Granularity,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub snr_points_db: Vec<f64>,
    pub samples_per_snr: usize,
    /// Zero-codeword frames per SNR point kept aside for the held-out loss.
    pub heldout_per_snr: usize,
    pub clip_bound: f64,
    pub optimizer: RmsPropConfig,
    pub rate_mode: RateMode,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::Ncpbp,
            granularity: Granularity::PerStage,
            learning_rate: 1e-3,
            batch_size: 64,
            epochs: 40,
            snr_points_db: vec![4.0, 4.5, 5.0, 5.5],
            samples_per_snr: 100_000,
            heldout_per_snr: 1000,
            clip_bound: CLIP_BOUND,
            optimizer: RmsPropConfig::default(),
            rate_mode: RateMode::Info,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("training config: {m}")));
        if self.snr_points_db.is_empty() {
            return bad("SNR list is empty");
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 || self.batch_size == 0 || self.epochs == 0 || self.samples_per_snr == 0 {
            return bad("learning rate, batch size, epochs and samples must be positive");
        }
        if self.clip_bound != CLIP_BOUND {
            return bad("only the decoder clip bound of 20 is supported");
        }
        if !(0.0..1.0).contains(&self.optimizer.decay) || self.optimizer.epsilon.is_nan() || self.optimizer.epsilon <= 0.0 {
            return bad("RMSprop needs 0 <= decay < 1 and epsilon > 0");
        }
        if self.scheme == Scheme::Unweighted {
            return bad("the unweighted scheme has nothing to train");
        }
        Ok(())
    }
}

/// Output of [`train`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub weights: WeightSet,
    /// Entry 0 is the mean training loss at the all-ones initialisation;
    /// entry `e` is the mean batch loss during epoch `e`.
    pub loss_history: Vec<f64>,
    /// Held-out mean loss at initialisation and after every epoch.
    pub heldout_history: Vec<f64>,
    pub optimizer: RmsPropState,
}

/// Channel LLRs of the all-zero codeword.
pub fn zero_codeword_llr(len: usize, sigma: f64, seed: u64, frame: u64) -> Vec<f64> {
    let mut rng = frame_rng(seed, frame);
    let y = add_awgn(&vec![1.0; len], sigma, &mut rng);
    channel_llr(&y, sigma)
}

/// Deterministic zero-codeword sample set: `(sigma, stream seed)` per SNR.
struct Samples {
    len: usize,
    per_snr: usize,
    points: Vec<(f64, u64)>,
}

impl Samples {
    fn new(spec: &PolarCodeSpec, tc: &TrainConfig, per_snr: usize, stream: u64) -> Result<Self> {
        let rate = tc.rate_mode.rate(spec.len(), spec.k_info(), spec.crc_len());
        let points = tc
            .snr_points_db
            .iter()
            .map(|&db| Ok((sigma_from_ebn0(db, rate)?, point_seed(tc.seed ^ stream, db))))
            .collect::<Result<_>>()?;
        Ok(Self { len: spec.len(), per_snr, points })
    }

    fn count(&self) -> usize {
        self.per_snr * self.points.len()
    }

    fn llr(&self, k: usize) -> Vec<f64> {
        let (sigma, seed) = self.points[k / self.per_snr];
        zero_codeword_llr(self.len, sigma, seed, (k % self.per_snr) as u64)
    }
}

/// Mean loss and mean gradient over the samples `ids`, reduced in order.
fn batch_gradient(net: &Network, weights: &[f64], samples: &Samples, targets: &Targets, ids: &[usize]) -> Result<(f64, Vec<f64>)> {
    let scale = 1.0 / ids.len() as f64;
    let parts: Vec<(f64, Vec<f64>)> = ids
        .par_iter()
        .map_init(
            || Tape::new(CLIP_BOUND),
            |tape, &k| {
                let mut g = vec![0.0; weights.len()];
                let loss = net.loss_and_grad(tape, weights, &samples.llr(k), targets, scale, &mut g)?;
                Ok((loss, g))
            },
        )
        .collect::<Result<_>>()?;
    let mut grad = vec![0.0; weights.len()];
    let mut loss = 0.0;
    for (l, g) in parts {
        loss += l;
        for (a, b) in grad.iter_mut().zip(g) {
            *a += b;
        }
    }
    Ok((loss * scale, grad))
}

fn mean_loss(net: &Network, weights: &[f64], samples: &Samples, targets: &Targets) -> Result<f64> {
    let losses: Vec<f64> =
        (0..samples.count()).into_par_iter().map(|k| net.loss(weights, &samples.llr(k), targets)).collect::<Result<_>>()?;
    Ok(losses.iter().sum::<f64>() / losses.len().max(1) as f64)
}

/// Mean multiloss of `weights` on the held-out set of `tc`.
pub fn heldout_loss(spec: &PolarCodeSpec, cfg: CpbpConfig, weights: &WeightSet, tc: &TrainConfig) -> Result<f64> {
    let net = Network::new(spec, cfg, weights)?;
    let samples = Samples::new(spec, tc, tc.heldout_per_snr.max(1), HELDOUT_STREAM)?;
    mean_loss(&net, &weights.trainable(), &samples, &Targets::zero(spec))
}

/// Trains weights of `tc.scheme` from the all-ones initialisation on
/// zero-codeword frames.
pub fn train(spec: &PolarCodeSpec, cfg: CpbpConfig, tc: &TrainConfig) -> Result<TrainReport> {
    train_with_progress(spec, cfg, tc, |_, _, _| {})
}

/// [`train`] with a callback receiving `(epoch, train loss, held-out loss)`
/// after every epoch; epoch 0 is the initialisation.
pub fn train_with_progress(
    spec: &PolarCodeSpec,
    cfg: CpbpConfig,
    tc: &TrainConfig,
    mut progress: impl FnMut(usize, f64, f64),
) -> Result<TrainReport> {
    tc.validate()?;
    let mut ws = WeightSet::ones(tc.scheme, spec, &cfg, tc.granularity)?;
    let net = Network::new(spec, cfg, &ws)?;
    let targets = Targets::zero(spec);
    let train_set = Samples::new(spec, tc, tc.samples_per_snr, TRAIN_STREAM)?;
    let heldout = Samples::new(spec, tc, tc.heldout_per_snr.max(1), HELDOUT_STREAM)?;

    let mut w = ws.trainable();
    let mut opt = RmsPropState::new(tc.optimizer, w.len());
    let initial = mean_loss(&net, &w, &train_set, &targets)?;
    let initial_heldout = mean_loss(&net, &w, &heldout, &targets)?;
    if !initial.is_finite() {
        return Err(Error::Diverged { epoch: 0, batch: 0 });
    }
    progress(0, initial, initial_heldout);
    let mut loss_history = vec![initial];
    let mut heldout_history = vec![initial_heldout];

    let mut order: Vec<usize> = (0..train_set.count()).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(tc.seed);
    for epoch in 1..=tc.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let batches = order.chunks(tc.batch_size);
        let nb = batches.len();
        for (bi, ids) in batches.enumerate() {
            let (loss, grad) = batch_gradient(&net, &w, &train_set, &targets, ids)?;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Diverged { epoch, batch: bi });
            }
            rmsprop_step(&mut w, &grad, &mut opt, tc.learning_rate)?;
            total += loss;
        }
        let h = mean_loss(&net, &w, &heldout, &targets)?;
        if !h.is_finite() {
            return Err(Error::Diverged { epoch, batch: nb });
        }
        loss_history.push(total / nb as f64);
        heldout_history.push(h);
        progress(epoch, total / nb as f64, h);
    }

    ws.set_trainable(&w)?;
    ws.provenance = Some(Provenance {
        seed: tc.seed,
        train_config: tc.clone(),
        final_heldout_loss: heldout_history.last().copied(),
    });
    Ok(TrainReport { weights: ws, loss_history, heldout_history, optimizer: opt })
}
