//! Historical feature queue and per-batch typicalness.
//!
//! Each sample is summarised by the mean and population variance of its
//! feature channels. The queue keeps the summaries of recent correctly
//! predicted training samples; a sample's distance to the queue is
//! min-max normalised within its batch to give a typicalness in `[0, 1]`.

use std::collections::VecDeque;

use crate::error::{invalid, Error, Result};
use crate::loss::Typicalness;

/// Default queue capacity for desk-scale runs.
pub const DEFAULT_QUEUE_CAPACITY: usize = 2_000;
/// Default neighbour count for [`DistanceMeasure::Knn`].
pub const DEFAULT_KNN_K: usize = 10;

/// Channel mean and population variance of one feature vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureStats {
    pub mean: f64,
    pub variance: f64,
}

impl FeatureStats {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() || !variance.is_finite() || variance < 0.0 {
            return Err(invalid(format!("invalid feature stats ({mean}, {variance})")));
        }
        Ok(Self { mean, variance })
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

pub fn feature_stats(features: &[f64]) -> Result<FeatureStats> {
    if features.len() < 2 {
        return Err(invalid(format!("feature statistics need at least 2 channels, got {}", features.len())));
    }
    if features.iter().any(|v| !v.is_finite()) {
        return Err(invalid("features must be finite"));
    }
    let n = features.len() as f64;
    let mean = features.iter().sum::<f64>() / n;
    let variance = features.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Ok(FeatureStats { mean, variance })
}

/// Euclidean distance between `(mean, std)` pairs, which is also the
/// 2-Wasserstein distance between the corresponding 1-D Gaussians.
pub fn stat_distance(a: &FeatureStats, b: &FeatureStats) -> f64 {
    squared_distance(a, b).sqrt()
}

fn squared_distance(a: &FeatureStats, b: &FeatureStats) -> f64 {
    let dm = a.mean - b.mean;
    let ds = a.std_dev() - b.std_dev();
    dm * dm + ds * ds
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceMeasure {
    /// Distance to the closest queue entry.
    Nearest,
    /// Mean distance to the `k` closest entries (`k` clamped to the queue length).
    Knn(usize),
}

/// Bounded FIFO of feature statistics from correctly predicted samples.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureQueue {
    entries: VecDeque<FeatureStats>,
    capacity: usize,
    initialized: bool,
}

impl FeatureQueue {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(invalid("queue capacity must be positive"));
        }
        Ok(Self { entries: VecDeque::with_capacity(capacity), capacity, initialized: false })
    }

    /// Rebuild a queue from stored entries (oldest first).
    pub fn from_entries(
        capacity: usize,
        entries: impl IntoIterator<Item = FeatureStats>,
        initialized: bool,
    ) -> Result<Self> {
        let mut queue = Self::new(capacity)?;
        for e in entries {
            queue.push(e);
        }
        queue.initialized = initialized;
        Ok(queue)
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_initialized(&self) -> bool {
        self.initialized
    }

    pub fn mark_initialized(&mut self) {
        self.initialized = true;
    }

    pub fn entries(&self) -> impl ExactSizeIterator<Item = &FeatureStats> {
        self.entries.iter()
    }

    fn push(&mut self, stats: FeatureStats) {
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(stats);
    }

    /// Append, in batch order, the stats whose mask entry is `true`.
    pub fn push_correct(&mut self, batch: &[FeatureStats], correct: &[bool]) -> Result<()> {
        if batch.len() != correct.len() {
            return Err(invalid(format!("{} stats but {} mask entries", batch.len(), correct.len())));
        }
        for (s, _) in batch.iter().zip(correct).filter(|(_, &c)| c) {
            self.push(*s);
        }
        Ok(())
    }

    pub fn distance(&self, stats: &FeatureStats, measure: DistanceMeasure) -> Result<f64> {
        if !self.initialized {
            return Err(Error::QueueNotReady("queue has not been initialized".into()));
        }
        if self.entries.is_empty() {
            return Err(Error::QueueNotReady("queue is empty".into()));
        }
        match measure {
            DistanceMeasure::Nearest => {
                // sqrt is monotone, so the root of the smallest square is the
                // smallest distance.
                let best = self.entries.iter().map(|e| squared_distance(stats, e)).fold(f64::INFINITY, f64::min);
                Ok(best.sqrt())
            }
            DistanceMeasure::Knn(k) => {
                if k == 0 {
                    return Err(invalid("knn requires k >= 1"));
                }
                let k = k.min(self.entries.len());
                let mut d: Vec<f64> = self.entries.iter().map(|e| stat_distance(stats, e)).collect();
                if k < d.len() {
                    d.select_nth_unstable_by(k - 1, f64::total_cmp);
                }
                let mut nearest = d[..k].to_vec();
                nearest.sort_by(f64::total_cmp);
                Ok(nearest.iter().sum::<f64>() / k as f64)
            }
        }
    }
}

/// Per-sample distances to the queue for one batch, with batch extrema.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchDistances {
    distances: Vec<f64>,
    min: f64,
    max: f64,
}

impl BatchDistances {
    pub fn new(distances: Vec<f64>) -> Result<Self> {
        if distances.is_empty() {
            return Err(invalid("batch must contain at least one distance"));
        }
        if distances.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(invalid("distances must be finite and non-negative"));
        }
        let min = distances.iter().copied().fold(f64::INFINITY, f64::min);
        let max = distances.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self { distances, min, max })
    }

    pub fn distances(&self) -> &[f64] {
        &self.distances
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    /// `tau_i = 1 - (d_i - d_min) / (d_max - d_min)`. A batch without spread
    /// carries no contrast, so every sample is treated as typical.
    pub fn typicalness(&self) -> Vec<Typicalness> {
        let span = self.max - self.min;
        self.distances
            .iter()
            .map(|d| {
                if span > 0.0 {
                    let tau = 1.0 - (d - self.min) / span;
                    Typicalness::new(tau.clamp(0.0, 1.0)).expect("clamped")
                } else {
                    Typicalness::TYPICAL
                }
            })
            .collect()
    }
}

pub fn batch_typicalness(distances: &BatchDistances) -> Vec<Typicalness> {
    distances.typicalness()
}
