use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::params::ParamSet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adaptive-moment optimizer with bias-corrected first and second moments.
///
/// Moment buffers are allocated on the first step and must keep matching
/// the parameter shapes afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub config: AdamConfig,
    step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(config: AdamConfig) -> Result<Self> {
        if !(config.learning_rate > 0.0 && config.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                config.learning_rate
            )));
        }
        Ok(Self {
            config,
            step: 0,
            first: Vec::new(),
            second: Vec::new(),
        })
    }

    pub fn with_learning_rate(learning_rate: f64) -> Result<Self> {
        Self::new(AdamConfig {
            learning_rate,
            ..AdamConfig::default()
        })
    }

    /// Number of updates applied so far.
    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Raw state for serialisation: step counter and moment buffers.
    pub fn state(&self) -> (u64, &[Vec<f64>], &[Vec<f64>]) {
        (self.step, &self.first, &self.second)
    }

    pub fn from_state(
        config: AdamConfig,
        step: u64,
        first: Vec<Vec<f64>>,
        second: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if first.len() != second.len()
            || first.iter().zip(&second).any(|(a, b)| a.len() != b.len())
        {
            return Err(Error::shape(
                "Adam::from_state",
                "matching moment buffers",
                "mismatched buffers",
            ));
        }
        let mut adam = Self::new(config)?;
        adam.step = step;
        adam.first = first;
        adam.second = second;
        Ok(adam)
    }

    pub fn step<P: ParamSet>(&mut self, params: &mut P, grads: &P) -> Result<()> {
        let grads = grads.tensors();
        let mut params = params.tensors_mut();
        if grads.len() != params.len() {
            return Err(Error::shape("Adam::step", params.len(), grads.len()));
        }
        for (p, g) in params.iter().zip(&grads) {
            if p.values.len() != g.values.len() {
                return Err(Error::shape("Adam::step", p.values.len(), g.values.len()));
            }
            if let Some(bad) = g.values.iter().position(|v| !v.is_finite()) {
                return Err(Error::Training(format!(
                    "non-finite gradient in {}[{bad}]",
                    g.name
                )));
            }
        }
        if self.first.is_empty() {
            self.first = params.iter().map(|p| vec![0.0; p.values.len()]).collect();
            self.second = self.first.clone();
        } else if self.first.len() != params.len()
            || self
                .first
                .iter()
                .zip(&params)
                .any(|(m, p)| m.len() != p.values.len())
        {
            return Err(Error::shape(
                "Adam::step moments",
                "buffers matching parameters",
                "different parameter layout",
            ));
        }

        self.step += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            eps,
        } = self.config;
        let t = self.step as f64;
        let c1 = 1.0 - libm::pow(beta1, t);
        let c2 = 1.0 - libm::pow(beta2, t);
        for (((p, g), m), v) in params
            .iter_mut()
            .zip(&grads)
            .zip(&mut self.first)
            .zip(&mut self.second)
        {
            for (((w, &g), m), v) in p
                .values
                .iter_mut()
                .zip(g.values)
                .zip(m.iter_mut())
                .zip(v.iter_mut())
            {
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *w -= learning_rate * m_hat / (libm::sqrt(v_hat) + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_is_identity() {
        let mut params = vec![0.3, -1.2, 5.0];
        let before = params.clone();
        let mut adam = Adam::new(AdamConfig::default()).unwrap();
        adam.step(&mut params, &vec![0.0; 3]).unwrap();
        assert_eq!(params, before);
        assert_eq!(adam.steps(), 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut params = vec![2.0];
        let mut adam = Adam::with_learning_rate(0.1).unwrap();
        adam.step(&mut params, &vec![1.0]).unwrap();
        // m_hat = v_hat = 1, update = lr / (1 + eps)
        assert!((params[0] - (2.0 - 0.1 / (1.0 + 1e-8))).abs() < 1e-15);
        assert!((params[0] - 1.9).abs() < 1e-8);
    }

    #[test]
    fn identical_inputs_identical_updates() {
        let mut params = vec![0.7, 0.7];
        let mut adam = Adam::with_learning_rate(0.01).unwrap();
        for _ in 0..5 {
            adam.step(&mut params, &vec![0.25, 0.25]).unwrap();
        }
        assert_eq!(params[0].to_bits(), params[1].to_bits());
    }

    #[test]
    fn non_finite_gradient_names_parameter() {
        let mut params = vec![1.0, 2.0];
        let mut adam = Adam::new(AdamConfig::default()).unwrap();
        let err = adam.step(&mut params, &vec![0.0, f64::NAN]).unwrap_err();
        assert!(matches!(&err, Error::Training(msg) if msg.contains("values[1]")));
    }

    #[test]
    fn rejects_bad_rate_and_shape_change() {
        assert!(Adam::with_learning_rate(0.0).is_err());
        let mut adam = Adam::new(AdamConfig::default()).unwrap();
        adam.step(&mut vec![1.0], &vec![1.0]).unwrap();
        assert!(adam.step(&mut vec![1.0, 2.0], &vec![1.0, 1.0]).is_err());
    }
}
