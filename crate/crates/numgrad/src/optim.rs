//! Bias-corrected Adam.

use std::collections::BTreeMap;

use crate::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One Adam update of `param` in place. `step` counts from 1.
pub fn adam_step<T: Scalar>(
    param: &mut [T],
    grad: &[T],
    m: &mut [T],
    v: &mut [T],
    cfg: &AdamConfig,
    step: u64,
) {
    assert!(step >= 1, "adam step counts from 1");
    assert!(param.len() == grad.len() && m.len() == grad.len() && v.len() == grad.len());
    let (b1, b2) = (cfg.beta1, cfg.beta2);
    let c1 = 1.0 - b1.powi(step as i32);
    let c2 = 1.0 - b2.powi(step as i32);
    for i in 0..param.len() {
        let gi = grad[i].f64();
        let mi = b1 * m[i].f64() + (1.0 - b1) * gi;
        let vi = b2 * v[i].f64() + (1.0 - b2) * gi * gi;
        m[i] = T::of(mi);
        v[i] = T::of(vi);
        let update = cfg.lr * (mi / c1) / ((vi / c2).sqrt() + cfg.eps);
        param[i] = T::of(param[i].f64() - update);
    }
}

/// Adam over a set of named parameters; moments are created lazily.
#[derive(Clone, Debug, Default)]
pub struct Adam<T = f32> {
    pub config: AdamConfig,
    pub step: u64,
    moments: BTreeMap<String, (Vec<T>, Vec<T>)>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(config: AdamConfig) -> Self {
        Adam {
            config,
            step: 0,
            moments: BTreeMap::new(),
        }
    }

    /// Advances the shared step counter; call once per optimizer step.
    pub fn begin_step(&mut self) {
        self.step += 1;
    }

    pub fn update(&mut self, name: &str, param: &mut [T], grad: &[T]) {
        let (m, v) = self
            .moments
            .entry(name.to_string())
            .or_insert_with(|| (vec![T::zero(); grad.len()], vec![T::zero(); grad.len()]));
        adam_step(param, grad, m, v, &self.config, self.step.max(1));
    }

    pub fn moments(&self, name: &str) -> Option<(&[T], &[T])> {
        self.moments.get(name).map(|(m, v)| (m.as_slice(), v.as_slice()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_grad_leaves_params() {
        let mut p = vec![0.5f32, -1.0];
        let (mut m, mut v) = (vec![0.0; 2], vec![0.0; 2]);
        adam_step(&mut p, &[0.0, 0.0], &mut m, &mut v, &AdamConfig::default(), 1);
        assert_eq!(p, vec![0.5, -1.0]);
    }

    #[test]
    fn first_step_magnitude() {
        // m̂ = g, v̂ = g², so the step is lr·g/(|g|+eps).
        let cfg = AdamConfig {
            lr: 0.01,
            ..Default::default()
        };
        for g in [0.3f64, -2.0, 1e-3] {
            let mut p = vec![1.0f64];
            let (mut m, mut v) = (vec![0.0], vec![0.0]);
            adam_step(&mut p, &[g], &mut m, &mut v, &cfg, 1);
            let expected = 1.0 - cfg.lr * g / (g.abs() + cfg.eps);
            assert!((p[0] - expected).abs() < 1e-12, "{} vs {}", p[0], expected);
        }
    }

    #[test]
    fn quadratic_bowl_converges() {
        let cfg = AdamConfig {
            lr: 0.05,
            ..Default::default()
        };
        let mut opt = Adam::<f64>::new(cfg);
        let mut w = vec![1.0f64; 4];
        let mut steps = 0;
        for _ in 0..500 {
            let f: f64 = w.iter().map(|x| x * x).sum();
            if f < 1e-3 {
                break;
            }
            let g: Vec<f64> = w.iter().map(|x| 2.0 * x).collect();
            opt.begin_step();
            opt.update("w", &mut w, &g);
            steps += 1;
        }
        let f: f64 = w.iter().map(|x| x * x).sum();
        assert!(f < 1e-3, "f = {f} after {steps} steps");
    }
}
