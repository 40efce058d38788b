use serde::{Deserialize, Serialize};

use crate::error::{invalid, shape, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Moment accumulators for one parameter set. The buffers are created
/// lazily on the first step and must keep the same layout afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(config: AdamConfig) -> Result<Self> {
        let c = config;
        let ok = c.learning_rate > 0.0
            && (0.0..1.0).contains(&c.beta1)
            && (0.0..1.0).contains(&c.beta2)
            && c.epsilon > 0.0;
        if !ok {
            return Err(invalid(format!("invalid Adam settings {c:?}")));
        }
        Ok(Self {
            config,
            step: 0,
            first: Vec::new(),
            second: Vec::new(),
        })
    }

    /// One bias-corrected Adam update. Fails before touching anything if
    /// a gradient is non-finite or the layout changed.
    pub fn step(&mut self, params: Vec<&mut [f64]>, grads: Vec<&[f64]>) -> Result<()> {
        if params.len() != grads.len() {
            return Err(shape(format!(
                "{} parameter buffers but {} gradient buffers",
                params.len(),
                grads.len()
            )));
        }
        for (i, (p, g)) in params.iter().zip(&grads).enumerate() {
            if p.len() != g.len() {
                return Err(shape(format!(
                    "buffer {i}: {} params, {} grads",
                    p.len(),
                    g.len()
                )));
            }
            if let Some(j) = g.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("gradient buffer {i} element {j}")));
            }
        }
        if self.step == 0 {
            self.first = params.iter().map(|p| vec![0.0; p.len()]).collect();
            self.second = self.first.clone();
        } else if self.first.len() != params.len()
            || self
                .first
                .iter()
                .zip(&params)
                .any(|(m, p)| m.len() != p.len())
        {
            return Err(shape("parameter layout changed between Adam steps"));
        }

        self.step += 1;
        let AdamConfig {
            learning_rate: lr,
            beta1: b1,
            beta2: b2,
            epsilon: eps,
        } = self.config;
        let t = self.step as i32;
        let c1 = 1.0 - b1.powi(t);
        let c2 = 1.0 - b2.powi(t);
        let (k1, k2) = (1.0 - b1, 1.0 - b2);
        for (((p, g), m), v) in params
            .into_iter()
            .zip(grads)
            .zip(&mut self.first)
            .zip(&mut self.second)
        {
            for (((p, &g), m), v) in p.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
                *m = b1 * *m + k1 * g;
                *v = b2 * *v + k2 * g * g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *p -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let mut s = AdamState::new(AdamConfig::default()).unwrap();
        let mut p = vec![1.0, -2.0, 3.0];
        for _ in 0..5 {
            s.step(vec![&mut p], vec![&[0.0, 0.0, 0.0]]).unwrap();
        }
        assert_eq!(p, vec![1.0, -2.0, 3.0]);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        for g in [0.3, -7.0, 1e3] {
            let mut s = AdamState::new(AdamConfig::default()).unwrap();
            let mut p = vec![0.5];
            s.step(vec![&mut p], vec![&[g]]).unwrap();
            let delta = p[0] - 0.5;
            // m̂ = g, v̂ = g²: Δ = −lr·g/(|g|+ε)
            let want = -1e-4 * g / (g.abs() + 1e-8);
            assert!((delta - want).abs() < 1e-15, "{delta} vs {want}");
            assert!((delta + 1e-4 * g.signum()).abs() < 1e-10);
        }
    }

    #[test]
    fn quadratic_loss_decreases_after_warmup() {
        let mut s = AdamState::new(AdamConfig {
            learning_rate: 1e-2,
            ..Default::default()
        })
        .unwrap();
        let target = [3.0, -2.0];
        let mut p = vec![0.0, 0.0];
        let loss = |p: &[f64]| (p[0] - target[0]).powi(2) + 4.0 * (p[1] - target[1]).powi(2);
        let mut history = Vec::new();
        for _ in 0..100 {
            let g = [2.0 * (p[0] - target[0]), 8.0 * (p[1] - target[1])];
            s.step(vec![&mut p], vec![&g]).unwrap();
            history.push(loss(&p));
        }
        assert!(history[10..].windows(2).all(|w| w[1] < w[0]));
        assert_eq!(s.step, 100);
    }

    #[test]
    fn non_finite_gradient_fails_fast() {
        let mut s = AdamState::new(AdamConfig::default()).unwrap();
        let mut p = vec![1.0, 2.0];
        assert!(s.step(vec![&mut p], vec![&[0.1, f64::NAN]]).is_err());
        assert_eq!(p, vec![1.0, 2.0]);
        assert_eq!(s.step, 0);
    }

    #[test]
    fn layout_must_not_change() {
        let mut s = AdamState::new(AdamConfig::default()).unwrap();
        let mut p = vec![1.0, 2.0];
        s.step(vec![&mut p], vec![&[0.1, 0.2]]).unwrap();
        let mut q = vec![1.0];
        assert!(s.step(vec![&mut q], vec![&[0.1]]).is_err());
        assert!(AdamState::new(AdamConfig {
            learning_rate: 0.0,
            ..Default::default()
        })
        .is_err());
    }
}
