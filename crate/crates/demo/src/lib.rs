//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Three operations: the TAL loss as a function of typicalness, the
//! risk-coverage curve and metrics of a user-supplied ranking, and a small
//! two-dimensional training run.

use tal_core::data::{generate, DatasetSpec};
use tal_core::loss::{self, MagnitudeSchedule, Typicalness};
use tal_core::metrics::{self, assemble, risk_coverage, BinaryScoredSet, FailureMetrics, Setting};
use tal_core::model::{evaluate, id_accuracy, records, train, LossMode, TrainingConfig, DEFAULT_FIXED_T};
use tal_core::scoring::ScoreKind;
use wasm_bindgen::prelude::*;

fn js_err(e: tal_core::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Rows of `(tau, T(tau), tal_loss, combined_loss)` for `steps + 1` evenly
/// spaced typicalness values, flattened.
#[wasm_bindgen]
pub fn loss_curve(logits: &[f64], label: usize, t_min: f64, t_max: f64, steps: usize) -> Result<Vec<f64>, JsError> {
    let sched = MagnitudeSchedule::new(t_min, t_max).map_err(js_err)?;
    let steps = steps.max(1);
    let mut out = Vec::with_capacity(4 * (steps + 1));
    for i in 0..=steps {
        let tau = Typicalness::new(i as f64 / steps as f64).map_err(js_err)?;
        out.push(tau.value());
        out.push(sched.magnitude(tau));
        out.push(loss::tal_loss(logits, label, tau, &sched).map_err(js_err)?);
        out.push(loss::combined_loss(logits, label, tau, &sched).map_err(js_err)?);
    }
    Ok(out)
}

/// Failure-detection metrics of a scored ranking.
#[wasm_bindgen]
pub struct Ranking {
    metrics: FailureMetrics,
    curve: Vec<f64>,
}

#[wasm_bindgen]
impl Ranking {
    /// `positive[i] != 0` marks sample `i` as accept-worthy.
    #[wasm_bindgen(constructor)]
    pub fn new(scores: &[f64], positive: &[u8]) -> Result<Ranking, JsError> {
        if scores.len() != positive.len() {
            return Err(JsError::new("scores and labels differ in length"));
        }
        let set =
            BinaryScoredSet::from_pairs(scores.iter().zip(positive).map(|(&s, &p)| (s, p != 0))).map_err(js_err)?;
        let curve = risk_coverage(&set).map_err(js_err)?.points.into_iter().flat_map(|(c, r)| [c, r]).collect();
        Ok(Ranking { metrics: FailureMetrics::compute(&set), curve })
    }

    /// Metric names, matching [`Ranking::values`].
    pub fn names() -> Vec<String> {
        FailureMetrics::NAMES.iter().map(|s| s.to_string()).collect()
    }

    /// Metric values; NaN where a metric is undefined for the set.
    pub fn values(&self) -> Vec<f64> {
        self.metrics.values().iter().map(|v| v.unwrap_or(f64::NAN)).collect()
    }

    /// Flattened `(coverage, risk)` pairs.
    pub fn curve(&self) -> Vec<f64> {
        self.curve.clone()
    }
}

/// A small training run on a two-dimensional version of the benchmark.
#[wasm_bindgen]
pub struct Experiment {
    points: Vec<f64>,
    summary: Vec<f64>,
    accuracy: f64,
}

const DOMAIN_CODES: [metrics::Domain; 3] = [metrics::Domain::Id, metrics::Domain::Covariate, metrics::Domain::Semantic];

#[wasm_bindgen]
impl Experiment {
    /// `mode` is one of `ce`, `logitnorm`, `fixed-t`, `tal`.
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u64, mode: &str, epochs: usize, t_min: f64, t_max: f64) -> Result<Experiment, JsError> {
        let spec = DatasetSpec {
            seed,
            n_classes: 3,
            feature_dim: 2,
            train_size: 600,
            test_size: 150,
            n_semantic_classes: 1,
            ..DatasetSpec::default()
        };
        let (train_set, test_set) = generate(&spec).map_err(js_err)?;
        let config = TrainingConfig {
            seed,
            epochs,
            batch_size: 64,
            schedule: MagnitudeSchedule::new(t_min, t_max).map_err(js_err)?,
            queue_capacity: 300,
            warmup_fraction: 0.1,
            loss_mode: LossMode::parse(mode, DEFAULT_FIXED_T).map_err(js_err)?,
            hidden: vec![32, 32],
            ..TrainingConfig::default()
        };
        config.validate().map_err(js_err)?;
        let (ckpt, _) = train(&config, &train_set, spec.n_classes).map_err(js_err)?;
        let scored = evaluate(&ckpt.model, &test_set).map_err(js_err)?;

        let mut points = Vec::with_capacity(5 * scored.len());
        for (s, x) in scored.iter().zip(test_set.samples()) {
            let code = DOMAIN_CODES.iter().position(|d| *d == s.domain).expect("known domain");
            points.extend([x.x[0], x.x[1], code as f64, f64::from(u8::from(s.correct))]);
            points.push(s.scores.cosine.unwrap_or(f64::NAN));
        }

        let mut summary = Vec::new();
        for kind in [ScoreKind::Msp, ScoreKind::Cosine] {
            let recs = records(&scored, kind).map_err(js_err)?;
            for setting in Setting::ALL {
                let auroc = assemble(&recs, setting)
                    .ok()
                    .and_then(|set| FailureMetrics::compute(&set).auroc)
                    .unwrap_or(f64::NAN);
                summary.push(auroc);
            }
        }
        Ok(Experiment { points, summary, accuracy: id_accuracy(&scored).unwrap_or(f64::NAN) })
    }

    /// Flattened `(x, y, domain, correct, cosine)` per test sample; domain
    /// 0 = in-distribution, 1 = covariate shift, 2 = semantic shift.
    pub fn points(&self) -> Vec<f64> {
        self.points.clone()
    }

    /// AUROC for MSP then cosine, each over old_fd, ood_d, new_fd.
    pub fn auroc(&self) -> Vec<f64> {
        self.summary.clone()
    }

    pub fn accuracy(&self) -> f64 {
        self.accuracy
    }
}
