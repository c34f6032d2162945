//! Adam with decoupled weight decay and global-norm gradient clipping.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone)]
pub(crate) struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    weight_decay: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(n: usize, lr: f64, weight_decay: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn set_learning_rate(&mut self, lr: f64) {
        self.lr = lr;
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - libm::pow(self.beta1, f64::from(self.t));
        let c2 = 1.0 - libm::pow(self.beta2, f64::from(self.t));
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let update = (self.m[i] / c1) / (libm::sqrt(self.v[i] / c2) + self.eps);
            params[i] -= self.lr * (update + self.weight_decay * params[i]);
        }
    }
}

/// Rescales `grads` so their L2 norm is at most `max_norm`; returns the
/// norm before clipping.
pub(crate) fn clip_global_norm(grads: &mut [f64], max_norm: f64) -> f64 {
    let norm = libm::sqrt(grads.iter().map(|g| g * g).sum());
    if max_norm > 0.0 && norm > max_norm {
        let s = max_norm / norm;
        grads.iter_mut().for_each(|g| *g *= s);
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimises_a_quadratic() {
        let mut p = [3.0, -2.0];
        let mut opt = Adam::new(2, 0.1, 0.0);
        for _ in 0..500 {
            let g = [2.0 * p[0], 2.0 * (p[1] - 1.0)];
            opt.step(&mut p, &g);
        }
        assert!(p[0].abs() < 1e-3 && (p[1] - 1.0).abs() < 1e-3, "{p:?}");
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut p = [0.0];
        Adam::new(1, 0.01, 0.0).step(&mut p, &[123.0]);
        assert!((p[0] + 0.01).abs() < 1e-9);
    }

    #[test]
    fn clipping() {
        let mut g = [3.0, 4.0];
        assert_eq!(clip_global_norm(&mut g, 1.0), 5.0);
        assert!((g[0] - 0.6).abs() < 1e-12 && (g[1] - 0.8).abs() < 1e-12);
        let mut h = [0.3, 0.4];
        clip_global_norm(&mut h, 1.0);
        assert_eq!(h, [0.3, 0.4]);
    }
}
