//! The training loop.
//!
//! In `tal` mode training runs in two phases. The warmup phase trains with
//! plain cross-entropy; after its last epoch one pass over the training set
//! fills the feature queue from correctly predicted samples. From then on
//! each mini-batch computes per-sample typicalness against the queue, uses
//! it to weight the TAL and cross-entropy terms, takes an SGD step and
//! finally pushes the batch's correct-sample statistics into the queue.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::checkpoint::Checkpoint;
use super::network::Mlp;
use super::optim::{cosine_lr, Sgd};
use crate::data::Dataset;
use crate::error::{invalid, Error, Result};
use crate::loss::{self, MagnitudeSchedule, Typicalness};
use crate::scoring::argmax;
use crate::typicalness::{feature_stats, BatchDistances, DistanceMeasure, FeatureQueue, FeatureStats};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossMode {
    /// Plain cross-entropy.
    Ce,
    /// Cross-entropy on the direction scaled to a constant magnitude.
    LogitNorm { t: f64 },
    /// Constant-magnitude TAL plus cross-entropy, weighted 0.5 each.
    FixedT { t: f64 },
    /// Typicalness-weighted TAL with dynamic magnitude plus cross-entropy.
    Tal,
}

impl LossMode {
    pub fn name(&self) -> &'static str {
        match self {
            LossMode::Ce => "ce",
            LossMode::LogitNorm { .. } => "logitnorm",
            LossMode::FixedT { .. } => "fixed-t",
            LossMode::Tal => "tal",
        }
    }

    /// Parses a mode name; `t` is the constant magnitude for the modes that use one.
    pub fn parse(name: &str, t: f64) -> Result<Self> {
        match name {
            "ce" => Ok(LossMode::Ce),
            "logitnorm" => Ok(LossMode::LogitNorm { t }),
            "fixed-t" | "fixed_t" => Ok(LossMode::FixedT { t }),
            "tal" => Ok(LossMode::Tal),
            other => Err(invalid(format!("unknown loss mode '{other}'"))),
        }
    }
}

impl fmt::Display for LossMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LossMode::parse(s, DEFAULT_FIXED_T)
    }
}

pub const DEFAULT_FIXED_T: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    pub seed: u64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub warmup_fraction: f64,
    pub schedule: MagnitudeSchedule,
    pub queue_capacity: usize,
    pub measure: DistanceMeasure,
    pub loss_mode: LossMode,
    pub hidden: Vec<usize>,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            epochs: 200,
            batch_size: 128,
            learning_rate: 0.1,
            momentum: 0.9,
            weight_decay: 5e-4,
            warmup_fraction: 0.05,
            schedule: MagnitudeSchedule::default(),
            queue_capacity: crate::typicalness::DEFAULT_QUEUE_CAPACITY,
            measure: DistanceMeasure::Nearest,
            loss_mode: LossMode::Tal,
            hidden: vec![64, 64],
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if self.epochs == 0 {
            return cfg("epochs must be positive".into());
        }
        if self.batch_size == 0 {
            return cfg("batch_size must be positive".into());
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return cfg("learning_rate must be > 0".into());
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return cfg("momentum must lie in [0, 1)".into());
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return cfg("weight_decay must be >= 0".into());
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return cfg("warmup_fraction must lie in [0, 1)".into());
        }
        if self.queue_capacity == 0 {
            return cfg("queue_capacity must be positive".into());
        }
        if self.measure == DistanceMeasure::Knn(0) {
            return cfg("knn_k must be positive".into());
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return cfg("hidden layer widths must be positive".into());
        }
        if *self.hidden.last().expect("non-empty") < 2 {
            return cfg("the feature layer needs at least 2 units".into());
        }
        match self.loss_mode {
            LossMode::LogitNorm { t } | LossMode::FixedT { t } if !(t.is_finite() && t > 0.0) => {
                return cfg(format!("constant magnitude must be > 0, got {t}"));
            }
            LossMode::Tal if self.warmup_epochs() == 0 => {
                return cfg(format!(
                    "warmup_fraction * epochs = {} leaves no warmup epoch to initialize the queue",
                    self.warmup_fraction * self.epochs as f64
                ));
            }
            _ => {}
        }
        Ok(())
    }

    /// `ceil(lambda * epochs)`, or 0 when the mode has no warmup.
    pub fn warmup_epochs(&self) -> usize {
        if self.loss_mode != LossMode::Tal {
            return 0;
        }
        let raw = self.warmup_fraction * self.epochs as f64;
        if raw < 1.0 - 1e-9 {
            return 0;
        }
        // Absorb representation error such as 0.05 * 200 = 10.000000000000002.
        ((raw - 1e-9).ceil() as usize).min(self.epochs)
    }

    pub fn dims(&self, input_dim: usize, n_classes: usize) -> Vec<usize> {
        std::iter::once(input_dim).chain(self.hidden.iter().copied()).chain([n_classes]).collect()
    }
}

/// One row of the per-epoch training log.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub train_acc: f64,
    pub queue_len: usize,
    /// Mean typicalness over the epoch's samples; `None` outside TAL phase 2.
    pub mean_tau: Option<f64>,
}

/// Mean loss and mean parameter gradient over a mini-batch, with the
/// per-sample loss and logit gradient supplied by `objective`.
pub fn batch_gradient<F>(model: &Mlp, inputs: &[&[f64]], labels: &[usize], mut objective: F) -> Result<(f64, Vec<f64>)>
where
    F: FnMut(usize, &[f64], usize) -> Result<(f64, Vec<f64>)>,
{
    if inputs.is_empty() || inputs.len() != labels.len() {
        return Err(invalid("batch inputs and labels must be non-empty and of equal length"));
    }
    let scale = 1.0 / inputs.len() as f64;
    let mut grads = vec![0.0; model.params().len()];
    let mut total = 0.0;
    for (i, (x, &y)) in inputs.iter().zip(labels).enumerate() {
        let acts = model.activations(x)?;
        let (l, mut g) = objective(i, acts.last().expect("logits"), y)?;
        total += l;
        g.iter_mut().for_each(|v| *v *= scale);
        model.backward(&acts, &g, &mut grads);
    }
    Ok((total * scale, grads))
}

/// Per-sample loss and logit gradient for the non-adaptive modes.
pub fn static_objective(mode: LossMode, logits: &[f64], label: usize) -> Result<(f64, Vec<f64>)> {
    match mode {
        LossMode::Ce | LossMode::Tal => loss::ce_with_grad(logits, label),
        LossMode::LogitNorm { t } => loss::logitnorm_with_grad(logits, label, t),
        LossMode::FixedT { t } => {
            let (ln, ln_g) = loss::logitnorm_with_grad(logits, label, t)?;
            let (ce, ce_g) = loss::ce_with_grad(logits, label)?;
            let g = ln_g.iter().zip(&ce_g).map(|(a, b)| 0.5 * a + 0.5 * b).collect();
            Ok((0.5 * ln + 0.5 * ce, g))
        }
    }
}

struct TrainingSet {
    inputs: Vec<Vec<f64>>,
    labels: Vec<usize>,
}

impl TrainingSet {
    fn from_dataset(data: &Dataset, n_classes: usize) -> Result<Self> {
        if data.is_empty() {
            return Err(invalid("training set is empty"));
        }
        let mut labels = Vec::with_capacity(data.len());
        for s in data.samples() {
            match s.label {
                Some(l) if l < n_classes => labels.push(l),
                Some(l) => return Err(Error::LabelOutOfRange { index: l, classes: n_classes }),
                None => return Err(invalid(format!("training sample {} has no label", s.id))),
            }
        }
        let inputs = data.samples().iter().map(|s| s.x.clone()).collect();
        Ok(Self { inputs, labels })
    }
}

/// Resumable training state.
pub struct Trainer {
    config: TrainingConfig,
    data: TrainingSet,
    model: Mlp,
    optimizer: Sgd,
    queue: FeatureQueue,
    rng: ChaCha8Rng,
    epoch: usize,
}

impl Trainer {
    pub fn new(config: TrainingConfig, data: &Dataset, n_classes: usize) -> Result<Self> {
        config.validate()?;
        let set = TrainingSet::from_dataset(data, n_classes)?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let model = Mlp::init(&config.dims(data.dim(), n_classes), &mut rng)?;
        let optimizer = Sgd::new(model.params().len(), config.momentum, config.weight_decay);
        let queue = FeatureQueue::new(config.queue_capacity)?;
        Ok(Self { config, data: set, model, optimizer, queue, rng, epoch: 0 })
    }

    /// Continues a run from a checkpoint written by [`Trainer::checkpoint`].
    pub fn resume(config: TrainingConfig, data: &Dataset, checkpoint: Checkpoint) -> Result<Self> {
        config.validate()?;
        let n_classes = checkpoint.model.n_classes();
        if checkpoint.model.dims() != config.dims(data.dim(), n_classes).as_slice() {
            return Err(Error::Config(format!(
                "checkpoint architecture {:?} does not match the configuration",
                checkpoint.model.dims()
            )));
        }
        if checkpoint.queue.capacity() != config.queue_capacity {
            return Err(Error::Config("checkpoint queue capacity differs from the configuration".into()));
        }
        if checkpoint.epoch > config.epochs {
            return Err(Error::Config("checkpoint is past the configured epoch count".into()));
        }
        let set = TrainingSet::from_dataset(data, n_classes)?;
        let optimizer = Sgd::with_velocity(checkpoint.velocity, config.momentum, config.weight_decay);
        Ok(Self {
            config,
            data: set,
            model: checkpoint.model,
            optimizer,
            queue: checkpoint.queue,
            rng: checkpoint.rng,
            epoch: checkpoint.epoch,
        })
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn is_finished(&self) -> bool {
        self.epoch >= self.config.epochs
    }

    pub fn model(&self) -> &Mlp {
        &self.model
    }

    pub fn queue(&self) -> &FeatureQueue {
        &self.queue
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            model: self.model.clone(),
            velocity: self.optimizer.velocity().to_vec(),
            queue: self.queue.clone(),
            epoch: self.epoch,
            rng: self.rng.clone(),
        }
    }

    /// Runs epochs until `stop_after` (or the configured total) and returns their logs.
    pub fn run(&mut self, stop_after: Option<usize>) -> Result<Vec<EpochLog>> {
        let end = stop_after.unwrap_or(self.config.epochs).min(self.config.epochs);
        let mut logs = Vec::new();
        while self.epoch < end {
            logs.push(self.run_epoch()?);
        }
        Ok(logs)
    }

    fn adaptive(&self) -> bool {
        self.config.loss_mode == LossMode::Tal && self.epoch >= self.config.warmup_epochs()
    }

    pub fn run_epoch(&mut self) -> Result<EpochLog> {
        if self.is_finished() {
            return Err(Error::Config("training already finished".into()));
        }
        let lr = cosine_lr(self.config.learning_rate, self.epoch, self.config.epochs);
        let adaptive = self.adaptive();
        if adaptive && !self.queue.is_initialized() {
            return Err(Error::Config("feature queue was never initialized".into()));
        }

        let mut order: Vec<usize> = (0..self.data.labels.len()).collect();
        order.shuffle(&mut self.rng);

        let n = order.len() as f64;
        let (mut loss_sum, mut hits, mut tau_sum) = (0.0, 0usize, 0.0);
        for batch in order.chunks(self.config.batch_size) {
            let stats = self.batch_step(batch, lr, adaptive)?;
            loss_sum += stats.loss * batch.len() as f64;
            hits += stats.correct;
            tau_sum += stats.tau_sum;
        }
        self.epoch += 1;

        if self.config.loss_mode == LossMode::Tal && self.epoch == self.config.warmup_epochs() {
            self.initialize_queue()?;
        }

        Ok(EpochLog {
            epoch: self.epoch,
            lr,
            train_loss: loss_sum / n,
            train_acc: hits as f64 / n,
            queue_len: self.queue.len(),
            mean_tau: adaptive.then_some(tau_sum / n),
        })
    }

    /// Fills the queue with statistics of every correctly predicted
    /// training sample, in dataset order.
    fn initialize_queue(&mut self) -> Result<()> {
        let mut stats = Vec::with_capacity(self.data.inputs.len());
        let mut correct = Vec::with_capacity(self.data.inputs.len());
        for (x, &y) in self.data.inputs.iter().zip(&self.data.labels) {
            let out = self.model.forward(x)?;
            stats.push(feature_stats(&out.features)?);
            correct.push(argmax(&out.logits) == y);
        }
        self.queue.push_correct(&stats, &correct)?;
        if self.queue.is_empty() {
            return Err(Error::Config(
                "no correctly predicted training sample after warmup; the queue cannot be initialized".into(),
            ));
        }
        self.queue.mark_initialized();
        Ok(())
    }

    fn batch_step(&mut self, batch: &[usize], lr: f64, adaptive: bool) -> Result<BatchStats> {
        let inputs: Vec<&[f64]> = batch.iter().map(|&i| self.data.inputs[i].as_slice()).collect();
        let labels: Vec<usize> = batch.iter().map(|&i| self.data.labels[i]).collect();

        // Pre-update forward pass: predictions, feature statistics and, in
        // the adaptive phase, typicalness against the queue.
        let mut stats = Vec::with_capacity(batch.len());
        let mut correct = Vec::with_capacity(batch.len());
        for (x, &y) in inputs.iter().zip(&labels) {
            let out = self.model.forward(x)?;
            correct.push(argmax(&out.logits) == y);
            if adaptive {
                stats.push(feature_stats(&out.features)?);
            }
        }
        let taus: Vec<Typicalness> = if adaptive {
            let d = stats.iter().map(|s| self.queue.distance(s, self.config.measure)).collect::<Result<Vec<f64>>>()?;
            BatchDistances::new(d)?.typicalness()
        } else {
            Vec::new()
        };

        let mode = self.config.loss_mode;
        let sched = self.config.schedule;
        let (loss, grads) = batch_gradient(&self.model, &inputs, &labels, |i, logits, y| {
            if adaptive {
                loss::combined_with_grad(logits, y, taus[i], &sched)
            } else {
                static_objective(mode, logits, y)
            }
        })?;
        self.optimizer.step(self.model.params_mut(), &grads, lr);
        if !self.model.params().iter().all(|p| p.is_finite()) {
            return Err(Error::Config("training diverged: non-finite parameters".into()));
        }

        if adaptive {
            self.queue.push_correct(&stats, &correct)?;
        }
        Ok(BatchStats {
            loss,
            correct: correct.iter().filter(|c| **c).count(),
            tau_sum: taus.iter().map(|t| t.value()).sum(),
        })
    }
}

struct BatchStats {
    loss: f64,
    correct: usize,
    tau_sum: f64,
}

/// Trains from scratch to completion.
pub fn train(config: &TrainingConfig, data: &Dataset, n_classes: usize) -> Result<(Checkpoint, Vec<EpochLog>)> {
    let mut trainer = Trainer::new(config.clone(), data, n_classes)?;
    let logs = trainer.run(None)?;
    Ok((trainer.checkpoint(), logs))
}

/// Feature statistics of one input under `model`.
pub fn sample_stats(model: &Mlp, x: &[f64]) -> Result<FeatureStats> {
    feature_stats(&model.forward(x)?.features)
}
