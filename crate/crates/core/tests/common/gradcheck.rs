//! Finite-difference check of loss gradients backpropagated through an MLP.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tal_core::loss::{self, MagnitudeSchedule, Typicalness};
use tal_core::model::{batch_gradient, Mlp};

pub type Objective = fn(&[f64], usize, f64) -> (f64, Vec<f64>);

pub fn ce(z: &[f64], y: usize, _: f64) -> (f64, Vec<f64>) {
    loss::ce_with_grad(z, y).unwrap()
}

pub fn logitnorm(z: &[f64], y: usize, _: f64) -> (f64, Vec<f64>) {
    loss::logitnorm_with_grad(z, y, 2.5).unwrap()
}

pub fn tal(z: &[f64], y: usize, tau: f64) -> (f64, Vec<f64>) {
    let sched = MagnitudeSchedule::new(1.0, 4.0).unwrap();
    loss::tal_with_grad(z, y, Typicalness::new(tau).unwrap(), &sched).unwrap()
}

pub fn combined(z: &[f64], y: usize, tau: f64) -> (f64, Vec<f64>) {
    let sched = MagnitudeSchedule::new(1.0, 4.0).unwrap();
    loss::combined_with_grad(z, y, Typicalness::new(tau).unwrap(), &sched).unwrap()
}

/// Norm-wise relative error between two gradient vectors.
fn rel_error(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(b.iter().map(|x| x * x).sum::<f64>().sqrt());
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Worst relative error of the analytic MLP gradient against central
/// differences over `instances` random networks and batches.
pub fn worst_network_error(objective: Objective, instances: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let input = rng.random_range(2..=8);
        let hidden = rng.random_range(2..=8);
        let classes = rng.random_range(2..=10);
        let mut model = Mlp::init(&[input, hidden, hidden, classes], &mut rng).unwrap();
        // Non-zero biases keep the network away from all-dead ReLU layers.
        model.params_mut().iter_mut().for_each(|p| *p += rng.random_range(-0.5..0.5));
        let batch = rng.random_range(1..=4);
        let xs: Vec<Vec<f64>> = (0..batch).map(|_| (0..input).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let ys: Vec<usize> = (0..batch).map(|_| rng.random_range(0..classes)).collect();
        let taus: Vec<f64> = (0..batch).map(|_| rng.random_range(0.0..=1.0)).collect();
        let inputs: Vec<&[f64]> = xs.iter().map(|x| x.as_slice()).collect();

        let eval = |m: &Mlp| batch_gradient(m, &inputs, &ys, |i, z, y| Ok(objective(z, y, taus[i]))).unwrap();
        let (_, analytic) = eval(&model);
        let h = 1e-6;
        let numeric: Vec<f64> = (0..model.params().len())
            .map(|p| {
                let mut plus = model.clone();
                plus.params_mut()[p] += h;
                let mut minus = model.clone();
                minus.params_mut()[p] -= h;
                (eval(&plus).0 - eval(&minus).0) / (2.0 * h)
            })
            .collect();
        worst = worst.max(rel_error(&analytic, &numeric));
    }
    worst
}
