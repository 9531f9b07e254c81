use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::ParameterStore;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    pub learning_rate: f64,
    pub decay_rate: f64,
    pub decay_period: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            decay_rate: 0.95,
            decay_period: 10_000,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && self.decay_rate > 0.0
            && self.decay_rate <= 1.0
            && self.decay_period >= 1
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid optimizer settings {self:?}")))
        }
    }

    /// Staircase decay: `γ · rate^⌊step / period⌋`.
    pub fn lr_at(&self, step: usize) -> f64 {
        self.learning_rate * self.decay_rate.powi((step / self.decay_period) as i32)
    }
}

/// Learning rate of the default schedule.
pub fn lr_at(step: usize) -> f64 {
    OptimizerConfig::default().lr_at(step)
}

/// Bias-corrected Adam over a single trainable store.
#[derive(Clone, Debug)]
pub struct AdamState<S> {
    config: OptimizerConfig,
    m: Vec<S>,
    v: Vec<S>,
    step: usize,
}

impl<S: Scalar> AdamState<S> {
    pub fn new(config: OptimizerConfig, slots: usize) -> Self {
        Self {
            config,
            m: vec![S::zero(); slots],
            v: vec![S::zero(); slots],
            step: 0,
        }
    }

    pub fn for_store(config: OptimizerConfig, store: &ParameterStore<S>) -> Self {
        Self::new(config, store.len())
    }

    /// Number of updates applied so far.
    pub fn steps(&self) -> usize {
        self.step
    }

    pub fn current_lr(&self) -> f64 {
        self.config.lr_at(self.step)
    }

    pub fn moments(&self) -> (&[S], &[S]) {
        (&self.m, &self.v)
    }

    pub fn step(&mut self, params: &mut ParameterStore<S>, grad: &[S]) -> Result<()> {
        if grad.len() != self.m.len() || params.len() != self.m.len() {
            return Err(Error::usage(format!(
                "optimizer sized for {} slots, got {} parameters and {} gradient entries",
                self.m.len(),
                params.len(),
                grad.len()
            )));
        }
        let theta = params.values_mut()?;
        let c = &self.config;
        let lr = S::lit(c.lr_at(self.step));
        self.step += 1;
        let (b1, b2) = (S::lit(c.beta1), S::lit(c.beta2));
        let t = self.step as i32;
        let bc1 = S::one() - S::lit(c.beta1.powi(t));
        let bc2 = S::one() - S::lit(c.beta2.powi(t));
        let eps = S::lit(c.epsilon);
        for (((p, &g), m), v) in theta.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = b1 * *m + (S::one() - b1) * g;
            *v = b2 * *v + (S::one() - b2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p = *p - lr * m_hat / (v_hat.sqrt() + eps);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule() {
        assert_eq!(lr_at(0), 1e-3);
        assert_eq!(lr_at(9_999), 1e-3);
        assert!((lr_at(10_000) - 9.5e-4).abs() < 1e-18);
        assert!((lr_at(25_000) - 9.025e-4).abs() < 1e-18);
    }

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let mut p = ParameterStore::from_values(vec![0.3, -1.2]);
        let mut adam = AdamState::new(OptimizerConfig::default(), 2);
        adam.step(&mut p, &[0.0, 0.0]).unwrap();
        assert_eq!(p.as_slice(), &[0.3, -1.2]);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut p = ParameterStore::from_values(vec![0.0f64]);
        let mut adam = AdamState::new(OptimizerConfig::default(), 1);
        adam.step(&mut p, &[1.0]).unwrap();
        // m̂ = 1, v̂ = 1 ⇒ Δ = lr / (1 + 1e-8)
        let expected = -1e-3 / (1.0 + 1e-8);
        assert!((p.as_slice()[0] - expected).abs() < 1e-18);
    }

    #[test]
    fn frozen_store_is_rejected_and_untouched() {
        let mut p = ParameterStore::from_values(vec![0.5f64]);
        p.freeze();
        let mut adam = AdamState::new(OptimizerConfig::default(), 1);
        assert!(adam.step(&mut p, &[1.0]).is_err());
        assert_eq!(p.as_slice()[0].to_bits(), 0.5f64.to_bits());
    }

    #[test]
    fn length_mismatch() {
        let mut p = ParameterStore::from_values(vec![0.5, 1.0]);
        let mut adam = AdamState::new(OptimizerConfig::default(), 2);
        assert!(matches!(adam.step(&mut p, &[1.0]), Err(Error::Usage(_))));
    }
}
