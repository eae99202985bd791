//! Loss kernels over a single logit vector.
//!
//! A logit vector `f` splits into a unit direction `f / |f|` and a magnitude
//! `|f|`. Cross-entropy optimizes both; LogitNorm replaces the magnitude by a
//! constant `t`; the TAL loss replaces it by a per-sample magnitude chosen
//! from the sample's typicalness. The combined objective mixes TAL and plain
//! cross-entropy with the typicalness as weight.
//!
//! All gradients are with respect to the raw logits. Typicalness is treated
//! as a constant (it comes from a statistics lookup, not from the network).

use crate::error::{invalid, Error, Result};

/// Lower/upper bound of the typicalness-dependent logit magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagnitudeSchedule {
    t_min: f64,
    t_max: f64,
}

impl MagnitudeSchedule {
    pub fn new(t_min: f64, t_max: f64) -> Result<Self> {
        if !(t_min.is_finite() && t_max.is_finite()) || t_min <= 0.0 {
            return Err(invalid(format!("t_min must be finite and > 0, got {t_min}")));
        }
        if t_max < t_min {
            return Err(invalid(format!("t_max ({t_max}) must be >= t_min ({t_min})")));
        }
        Ok(Self { t_min, t_max })
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    /// `T(tau) = t_min + (1 - tau) (t_max - t_min)`: typical samples get the
    /// small magnitude, atypical ones the large one.
    pub fn magnitude(&self, tau: Typicalness) -> f64 {
        self.t_min + (1.0 - tau.value()) * (self.t_max - self.t_min)
    }
}

impl Default for MagnitudeSchedule {
    fn default() -> Self {
        Self { t_min: 10.0, t_max: 100.0 }
    }
}

/// A typicalness value in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Typicalness(f64);

impl Typicalness {
    pub const TYPICAL: Typicalness = Typicalness(1.0);
    pub const ATYPICAL: Typicalness = Typicalness(0.0);

    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(invalid(format!("typicalness must lie in [0, 1], got {value}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// A nonzero logit vector split into unit direction and Euclidean norm.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitDecomposition {
    pub direction: Vec<f64>,
    pub magnitude: f64,
}

impl LogitDecomposition {
    pub fn reconstruct(&self) -> Vec<f64> {
        self.direction.iter().map(|d| d * self.magnitude).collect()
    }
}

fn check_logits(logits: &[f64]) -> Result<()> {
    if logits.is_empty() {
        return Err(invalid("empty logit vector"));
    }
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(invalid("logits must be finite"));
    }
    Ok(())
}

fn check_label(logits: &[f64], label: usize) -> Result<()> {
    if label >= logits.len() {
        return Err(Error::LabelOutOfRange { index: label, classes: logits.len() });
    }
    Ok(())
}

/// `log sum_i exp(f_i)`, shifted by the maximum so large logits cannot overflow.
pub fn log_sum_exp(logits: &[f64]) -> Result<f64> {
    check_logits(logits)?;
    Ok(lse_unchecked(logits))
}

/// Maximum logit and `sum_{i != argmax} exp(f_i - max)`.
fn shifted_tail(logits: &[f64]) -> (f64, f64) {
    let top = crate::scoring::argmax(logits);
    let max = logits[top];
    let tail = logits.iter().enumerate().filter(|(i, _)| *i != top).map(|(_, v)| (v - max).exp()).sum();
    (max, tail)
}

fn lse_unchecked(logits: &[f64]) -> f64 {
    let (max, tail) = shifted_tail(logits);
    max + tail.ln_1p()
}

fn softmax_unchecked(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= sum);
    out
}

pub fn softmax(logits: &[f64]) -> Result<Vec<f64>> {
    check_logits(logits)?;
    Ok(softmax_unchecked(logits))
}

/// `-log softmax(logits)[label]`, evaluated as `lse(f) - f_y`.
pub fn cross_entropy(logits: &[f64], label: usize) -> Result<f64> {
    check_logits(logits)?;
    check_label(logits, label)?;
    Ok(ce_unchecked(logits, label))
}

fn ce_unchecked(logits: &[f64], label: usize) -> f64 {
    // (max - f_y) + log(1 + tail) keeps full precision when the label wins.
    let (max, tail) = shifted_tail(logits);
    (max - logits[label]) + tail.ln_1p()
}

pub fn decompose(logits: &[f64]) -> Result<LogitDecomposition> {
    check_logits(logits)?;
    let magnitude = logits.iter().map(|v| v * v).sum::<f64>().sqrt();
    if magnitude == 0.0 {
        return Err(Error::DegenerateLogits);
    }
    let direction = logits.iter().map(|v| v / magnitude).collect();
    Ok(LogitDecomposition { direction, magnitude })
}

/// Cross-entropy of the direction scaled to the constant magnitude `t`.
pub fn logitnorm_loss(logits: &[f64], label: usize, t: f64) -> Result<f64> {
    Ok(logitnorm_with_grad(logits, label, t)?.0)
}

pub fn dynamic_magnitude(tau: f64, sched: &MagnitudeSchedule) -> Result<f64> {
    Ok(sched.magnitude(Typicalness::new(tau)?))
}

/// LogitNorm with the magnitude `T(tau)` taken from the schedule.
pub fn tal_loss(logits: &[f64], label: usize, tau: Typicalness, sched: &MagnitudeSchedule) -> Result<f64> {
    logitnorm_loss(logits, label, sched.magnitude(tau))
}

/// `tau * L_tal + (1 - tau) * L_ce` for one sample.
pub fn combined_loss(logits: &[f64], label: usize, tau: Typicalness, sched: &MagnitudeSchedule) -> Result<f64> {
    Ok(combined_with_grad(logits, label, tau, sched)?.0)
}

pub fn grad_combined_loss(
    logits: &[f64],
    label: usize,
    tau: Typicalness,
    sched: &MagnitudeSchedule,
) -> Result<Vec<f64>> {
    Ok(combined_with_grad(logits, label, tau, sched)?.1)
}

/// Cross-entropy and its gradient `softmax(f) - onehot(y)`.
pub fn ce_with_grad(logits: &[f64], label: usize) -> Result<(f64, Vec<f64>)> {
    check_logits(logits)?;
    check_label(logits, label)?;
    let mut grad = softmax_unchecked(logits);
    grad[label] -= 1.0;
    Ok((ce_unchecked(logits, label), grad))
}

/// LogitNorm loss at magnitude `t` and its gradient.
///
/// With `z = t f/|f|` and `g = softmax(z) - onehot(y)`, the chain rule through
/// the normalization Jacobian `(I - f^ f^T) / |f|` gives
/// `t / |f| * (g - f^ (f^ . g))`, which is always orthogonal to `f`.
pub fn logitnorm_with_grad(logits: &[f64], label: usize, t: f64) -> Result<(f64, Vec<f64>)> {
    if !(t.is_finite() && t > 0.0) {
        return Err(invalid(format!("magnitude must be finite and > 0, got {t}")));
    }
    check_label(logits, label)?;
    let dec = decompose(logits)?;
    let scaled: Vec<f64> = dec.direction.iter().map(|d| d * t).collect();
    let loss = ce_unchecked(&scaled, label);

    let mut g = softmax_unchecked(&scaled);
    g[label] -= 1.0;
    let radial: f64 = g.iter().zip(&dec.direction).map(|(a, b)| a * b).sum();
    let scale = t / dec.magnitude;
    let grad = g.iter().zip(&dec.direction).map(|(gi, di)| scale * (gi - di * radial)).collect();
    Ok((loss, grad))
}

pub fn tal_with_grad(
    logits: &[f64],
    label: usize,
    tau: Typicalness,
    sched: &MagnitudeSchedule,
) -> Result<(f64, Vec<f64>)> {
    logitnorm_with_grad(logits, label, sched.magnitude(tau))
}

pub fn combined_with_grad(
    logits: &[f64],
    label: usize,
    tau: Typicalness,
    sched: &MagnitudeSchedule,
) -> Result<(f64, Vec<f64>)> {
    let w = tau.value();
    let (tal, tal_grad) = tal_with_grad(logits, label, tau, sched)?;
    let (ce, ce_grad) = ce_with_grad(logits, label)?;
    let grad = tal_grad.iter().zip(&ce_grad).map(|(a, b)| w * a + (1.0 - w) * b).collect();
    Ok((w * tal + (1.0 - w) * ce, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn sched() -> MagnitudeSchedule {
        MagnitudeSchedule::new(10.0, 100.0).unwrap()
    }

    #[test]
    fn softmax_examples() {
        assert_eq!(softmax(&[0.0, 0.0]).unwrap(), vec![0.5, 0.5]);
        let p = softmax(&[2f64.ln(), 0.0]).unwrap();
        assert_relative_eq!(p[0], 2.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(p[1], 1.0 / 3.0, epsilon = 1e-15);
        let p = softmax(&[1000.0, 0.0]).unwrap();
        assert!(p.iter().all(|v| v.is_finite()));
        assert_eq!(p[0], 1.0);
        assert!(p[1] < 1e-300);
    }

    #[test]
    fn softmax_rejects_non_finite() {
        assert!(matches!(softmax(&[f64::NAN, 0.0]), Err(Error::InvalidInput(_))));
        assert!(matches!(softmax(&[f64::INFINITY, 0.0]), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn cross_entropy_examples() {
        for c in 2..6 {
            let logits = vec![0.7; c];
            assert_relative_eq!(cross_entropy(&logits, c - 1).unwrap(), (c as f64).ln(), epsilon = 1e-14);
        }
        assert!(cross_entropy(&[100.0, 0.0, 0.0], 0).unwrap() < 1e-40);
        // log(1 + e^2)
        assert_relative_eq!(cross_entropy(&[2.0, 0.0], 1).unwrap(), 2.1269280110429727, epsilon = 1e-14);
        assert_eq!(cross_entropy(&[1.0, 2.0], 2), Err(Error::LabelOutOfRange { index: 2, classes: 2 }));
    }

    #[test]
    fn decompose_examples() {
        let d = decompose(&[3.0, 4.0]).unwrap();
        assert_eq!(d.magnitude, 5.0);
        assert_relative_eq!(d.direction[0], 0.6, epsilon = 1e-15);
        assert_relative_eq!(d.direction[1], 0.8, epsilon = 1e-15);
        let d = decompose(&[0.0, -2.0]).unwrap();
        assert_eq!((d.direction.clone(), d.magnitude), (vec![0.0, -1.0], 2.0));
        assert_eq!(decompose(&[0.0, 0.0]), Err(Error::DegenerateLogits));
    }

    #[test]
    fn logitnorm_examples() {
        // log(1 + e^-1)
        let expected = 0.31326168751822286;
        assert_relative_eq!(logitnorm_loss(&[2.0, 0.0], 0, 1.0).unwrap(), expected, epsilon = 1e-14);
        assert_relative_eq!(logitnorm_loss(&[20.0, 0.0], 0, 1.0).unwrap(), expected, epsilon = 1e-14);
        for t in [0.1, 1.0, 10.0, 100.0] {
            assert_relative_eq!(logitnorm_loss(&[1.0, 1.0], 0, t).unwrap(), 2f64.ln(), epsilon = 1e-14);
        }
        assert_eq!(logitnorm_loss(&[0.0, 0.0], 0, 1.0), Err(Error::DegenerateLogits));
    }

    #[test]
    fn dynamic_magnitude_examples() {
        let s = sched();
        assert_eq!(dynamic_magnitude(1.0, &s).unwrap(), 10.0);
        assert_eq!(dynamic_magnitude(0.0, &s).unwrap(), 100.0);
        assert_eq!(dynamic_magnitude(0.5, &s).unwrap(), 55.0);
        assert!(dynamic_magnitude(1.5, &s).is_err());
        assert!(dynamic_magnitude(-0.1, &s).is_err());
        assert!(MagnitudeSchedule::new(100.0, 10.0).is_err());
        assert!(MagnitudeSchedule::new(0.0, 10.0).is_err());
    }

    #[test]
    fn tal_loss_examples() {
        let s = sched();
        // log(1 + e^-10)
        let v = tal_loss(&[2.0, 0.0], 0, Typicalness::TYPICAL, &s).unwrap();
        assert_relative_eq!(v, 4.5398899216870535e-5, max_relative = 1e-12);
        let tau = Typicalness::new(0.3).unwrap();
        let base = tal_loss(&[0.3, -1.2, 2.0], 2, tau, &s).unwrap();
        let scaled = tal_loss(&[3.0, -12.0, 20.0], 2, tau, &s).unwrap();
        assert_relative_eq!(base, scaled, epsilon = 1e-12);
        for t in [0.0, 0.4, 1.0] {
            let v = tal_loss(&[1.0, 1.0], 0, Typicalness::new(t).unwrap(), &s).unwrap();
            assert_relative_eq!(v, 2f64.ln(), epsilon = 1e-14);
        }
    }

    #[test]
    fn combined_loss_boundaries() {
        let s = sched();
        let f = [0.5, -0.25, 1.5];
        let tal1 = tal_loss(&f, 1, Typicalness::TYPICAL, &s).unwrap();
        assert_eq!(combined_loss(&f, 1, Typicalness::TYPICAL, &s).unwrap(), tal1);
        let ce = cross_entropy(&f, 1).unwrap();
        assert_eq!(combined_loss(&f, 1, Typicalness::ATYPICAL, &s).unwrap(), ce);
        let half = Typicalness::new(0.5).unwrap();
        let mid = combined_loss(&f, 1, half, &s).unwrap();
        let tal_half = tal_loss(&f, 1, half, &s).unwrap();
        assert_relative_eq!(mid, 0.5 * (tal_half + ce), epsilon = 1e-14);
    }

    #[test]
    fn ce_gradient_at_uniform_logits() {
        let (_, g) = ce_with_grad(&[0.0, 0.0], 0).unwrap();
        assert_eq!(g, vec![-0.5, 0.5]);
    }

    fn finite_diff(f: impl Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
        let h = 1e-6;
        (0..x.len())
            .map(|i| {
                let mut p = x.to_vec();
                let mut m = x.to_vec();
                p[i] += h;
                m[i] -= h;
                (f(&p) - f(&m)) / (2.0 * h)
            })
            .collect()
    }

    fn rel_err(a: &[f64], b: &[f64]) -> f64 {
        let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(b.iter().map(|x| x * x).sum::<f64>().sqrt());
        diff / scale.max(1e-8)
    }

    fn logit_case() -> impl Strategy<Value = (Vec<f64>, usize, f64)> {
        (2usize..=10).prop_flat_map(|c| (prop::collection::vec(-3.0..3.0f64, c), 0..c, 0.0..=1.0f64))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn softmax_sums_to_one(v in prop::collection::vec(-1000.0..1000.0f64, 2..12)) {
            let p = softmax(&v).unwrap();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            prop_assert!(p.iter().all(|x| *x >= 0.0));
        }

        #[test]
        fn cross_entropy_non_negative((f, y, _) in logit_case()) {
            prop_assert!(cross_entropy(&f, y).unwrap() >= 0.0);
        }

        #[test]
        fn decomposition_reconstructs((f, _, _) in logit_case()) {
            prop_assume!(f.iter().any(|v| *v != 0.0));
            let d = decompose(&f).unwrap();
            let norm = d.direction.iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!((norm - 1.0).abs() <= 1e-12);
            prop_assert!(rel_err(&d.reconstruct(), &f) <= 1e-12);
        }

        #[test]
        fn tal_scale_invariant((f, y, tau) in logit_case(), c in 1e-3..1e3f64) {
            prop_assume!(f.iter().any(|v| v.abs() > 1e-3));
            let s = sched();
            let tau = Typicalness::new(tau).unwrap();
            let scaled: Vec<f64> = f.iter().map(|v| v * c).collect();
            let a = tal_loss(&f, y, tau, &s).unwrap();
            let b = tal_loss(&scaled, y, tau, &s).unwrap();
            prop_assert!((a - b).abs() <= 1e-9);
        }

        #[test]
        fn magnitude_affine_and_bounded(tau in 0.0..=1.0f64, lo in 0.1..50.0f64, span in 0.0..100.0f64) {
            let s = MagnitudeSchedule::new(lo, lo + span).unwrap();
            let t = dynamic_magnitude(tau, &s).unwrap();
            prop_assert!(t >= s.t_min() - 1e-12 && t <= s.t_max() + 1e-12);
            let t2 = dynamic_magnitude((tau + 0.1).min(1.0), &s).unwrap();
            prop_assert!(t2 <= t + 1e-12);
        }

        #[test]
        fn combined_gradient_matches_finite_differences((f, y, tau) in logit_case()) {
            prop_assume!(f.iter().map(|v| v * v).sum::<f64>() > 0.25);
            let s = MagnitudeSchedule::new(1.0, 4.0).unwrap();
            let tau = Typicalness::new(tau).unwrap();
            let g = grad_combined_loss(&f, y, tau, &s).unwrap();
            let fd = finite_diff(|x| combined_loss(x, y, tau, &s).unwrap(), &f);
            prop_assert!(rel_err(&g, &fd) <= 1e-6, "analytic {:?} vs fd {:?}", g, fd);
        }

        #[test]
        fn tal_gradient_orthogonal_to_logits((f, y, tau) in logit_case()) {
            prop_assume!(f.iter().any(|v| v.abs() > 1e-3));
            let s = sched();
            let (_, g) = tal_with_grad(&f, y, Typicalness::new(tau).unwrap(), &s).unwrap();
            let dot: f64 = g.iter().zip(&f).map(|(a, b)| a * b).sum();
            let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            let fnorm = f.iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!(dot.abs() <= 1e-9 * gn * fnorm + 1e-300);
        }
    }
}
