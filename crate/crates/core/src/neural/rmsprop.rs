use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RmsPropConfig {
    pub decay: f64,
    pub epsilon: f64,
}

impl Default for RmsPropConfig {
    fn default() -> Self {
        Self { decay: 0.9, epsilon: 1e-8 }
    }
}

/// Running average of squared gradients, one entry per slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmsPropState {
    pub config: RmsPropConfig,
    pub mean_square: Vec<f64>,
    pub steps: u64,
}

impl RmsPropState {
    pub fn new(config: RmsPropConfig, slots: usize) -> Self {
        Self { config, mean_square: vec![0.0; slots], steps: 0 }
    }
}

/// `v <- rho v + (1 - rho) g^2`, `w <- w - lr g / sqrt(v + eps)`.
pub fn rmsprop_step(weights: &mut [f64], grad: &[f64], state: &mut RmsPropState, lr: f64) -> Result<()> {
    let n = state.mean_square.len();
    if weights.len() != n || grad.len() != n {
        return Err(Error::LengthMismatch { expected: n, actual: weights.len().max(grad.len()) });
    }
    let RmsPropConfig { decay, epsilon } = state.config;
    for ((w, &g), v) in weights.iter_mut().zip(grad).zip(&mut state.mean_square) {
        *v = decay * *v + (1.0 - decay) * g * g;
        *w -= lr * g / (*v + epsilon).sqrt();
    }
    state.steps += 1;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut w = vec![1.0, -2.0];
        let mut st = RmsPropState::new(RmsPropConfig::default(), 2);
        rmsprop_step(&mut w, &[0.0, 0.0], &mut st, 0.1).unwrap();
        assert_eq!(w, vec![1.0, -2.0]);
    }

    #[test]
    fn constant_gradient_steps_approach_lr() {
        let mut w = vec![0.0];
        let mut st = RmsPropState::new(RmsPropConfig::default(), 1);
        let lr = 1e-3;
        let mut prev = 0.0;
        for _ in 0..500 {
            rmsprop_step(&mut w, &[0.3], &mut st, lr).unwrap();
            let step = prev - w[0];
            prev = w[0];
            assert!(step > 0.0);
            if st.steps > 200 {
                assert!((step - lr).abs() < 1e-9, "step {step}");
            }
        }
    }

    #[test]
    fn first_step_value() {
        // v = 0.1 g^2, step = lr / sqrt(0.1)
        let mut w = vec![0.0];
        let mut st = RmsPropState::new(RmsPropConfig { decay: 0.9, epsilon: 0.0 }, 1);
        rmsprop_step(&mut w, &[2.0], &mut st, 0.01).unwrap();
        assert!((w[0] + 0.01 / 0.1f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn state_roundtrip() {
        let mut w = vec![0.5; 3];
        let mut st = RmsPropState::new(RmsPropConfig::default(), 3);
        rmsprop_step(&mut w, &[0.1, 1.0 / 3.0, -7.25], &mut st, 1e-3).unwrap();
        let s = serde_json::to_string(&st).unwrap();
        let back: RmsPropState = serde_json::from_str(&s).unwrap();
        assert_eq!(back, st);
        assert!(back.mean_square.iter().zip(&st.mean_square).all(|(a, b)| a.to_bits() == b.to_bits()));
    }
}
