//! Runs every loss mode on the default synthetic benchmark and collects the
//! failure-detection metrics the acceptance suite compares.

use std::time::Instant;

use tal_core::data::{generate, Dataset, DatasetSpec};
use tal_core::metrics::{assemble, FailureMetrics, Setting};
use tal_core::model::{evaluate, records, train, LossMode, Mlp, TrainingConfig, DEFAULT_FIXED_T};
use tal_core::scoring::ScoreKind;
use tal_core::Result;

/// Models trained on one benchmark seed.
pub struct SeedRun {
    pub seed: u64,
    pub test: Dataset,
    pub ce: Mlp,
    pub tal: Mlp,
    pub fixed_t: Mlp,
    /// Wall time of the slowest of the three training runs, in seconds.
    pub slowest_secs: f64,
}

impl SeedRun {
    pub fn metrics(&self, model: &Mlp, kind: ScoreKind, setting: Setting) -> Result<FailureMetrics> {
        let scored = evaluate(model, &self.test)?;
        Ok(FailureMetrics::compute(&assemble(&records(&scored, kind)?, setting)?))
    }
}

/// Trains CE, TAL and fixed-T models for one seed with default settings
/// apart from the epoch count.
pub fn run_seed(seed: u64, epochs: usize) -> Result<SeedRun> {
    let spec = DatasetSpec { seed, ..DatasetSpec::default() };
    let (train_set, test) = generate(&spec)?;
    let mut slowest: f64 = 0.0;
    let mut fit = |loss_mode| -> Result<Mlp> {
        let start = Instant::now();
        let config = TrainingConfig { seed, epochs, loss_mode, ..TrainingConfig::default() };
        let model = train(&config, &train_set, spec.n_classes)?.0.model;
        slowest = slowest.max(start.elapsed().as_secs_f64());
        Ok(model)
    };
    let ce = fit(LossMode::Ce)?;
    let tal = fit(LossMode::Tal)?;
    let fixed_t = fit(LossMode::FixedT { t: DEFAULT_FIXED_T })?;
    Ok(SeedRun { seed, test, ce, tal, fixed_t, slowest_secs: slowest })
}
