use std::f64::consts::PI;

/// SGD with heavy-ball momentum and L2 weight decay folded into the gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Sgd {
    pub momentum: f64,
    pub weight_decay: f64,
    velocity: Vec<f64>,
}

impl Sgd {
    pub fn new(n_params: usize, momentum: f64, weight_decay: f64) -> Self {
        Self { momentum, weight_decay, velocity: vec![0.0; n_params] }
    }

    pub fn with_velocity(velocity: Vec<f64>, momentum: f64, weight_decay: f64) -> Self {
        Self { momentum, weight_decay, velocity }
    }

    pub fn velocity(&self) -> &[f64] {
        &self.velocity
    }

    /// `v <- m v + (g + wd p)`, `p <- p - lr v`.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) {
        debug_assert_eq!(params.len(), grads.len());
        for ((p, g), v) in params.iter_mut().zip(grads).zip(&mut self.velocity) {
            *v = self.momentum * *v + (g + self.weight_decay * *p);
            *p -= lr * *v;
        }
    }
}

/// Cosine annealing from `base_lr` at epoch 0 to zero at `total_epochs`.
pub fn cosine_lr(base_lr: f64, epoch: usize, total_epochs: usize) -> f64 {
    base_lr * 0.5 * (1.0 + (PI * epoch as f64 / total_epochs as f64).cos())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_endpoints() {
        assert_eq!(cosine_lr(0.1, 0, 200), 0.1);
        assert!(cosine_lr(0.1, 200, 200).abs() <= 1e-12);
        assert!((cosine_lr(0.1, 100, 200) - 0.05).abs() <= 1e-15);
    }

    #[test]
    fn weight_decay_shrinks_by_factor() {
        let (lr, wd) = (0.1, 5e-4);
        let mut p = vec![1.0, -2.5, 0.75, 3.0e-3];
        let before = p.clone();
        let mut opt = Sgd::new(p.len(), 0.9, wd);
        opt.step(&mut p, &[0.0; 4], lr);
        for (a, b) in p.iter().zip(&before) {
            let expected = b * (1.0 - lr * wd);
            assert!((a - expected).abs() <= f64::EPSILON * expected.abs());
        }
    }

    #[test]
    fn momentum_accumulates() {
        let mut p = vec![0.0];
        let mut opt = Sgd::new(1, 0.9, 0.0);
        opt.step(&mut p, &[1.0], 1.0);
        opt.step(&mut p, &[1.0], 1.0);
        assert_eq!(opt.velocity(), &[1.9]);
        assert_eq!(p, vec![-2.9]);
    }
}
