//! Slow, obviously-correct reference implementations of the ranking metrics.

use rand::Rng;
use tal_core::metrics::{BinaryScoredSet, ScoredItem};

/// Random set of 2..=500 items, both classes present. Half the sets use a
/// coarse score grid so ties are common.
pub fn random_set<R: Rng>(rng: &mut R) -> BinaryScoredSet {
    let n = rng.random_range(2..=500);
    let coarse = rng.random_bool(0.5);
    let mut items: Vec<ScoredItem> = (0..n)
        .map(|_| {
            let score = if coarse { rng.random_range(0..8) as f64 / 4.0 } else { rng.random_range(-3.0..3.0) };
            ScoredItem { score, positive: rng.random_bool(0.6) }
        })
        .collect();
    items[0].positive = true;
    items[1].positive = false;
    BinaryScoredSet::new(items).unwrap()
}

pub fn auroc_pairs(set: &BinaryScoredSet) -> f64 {
    let pos: Vec<f64> = set.items().iter().filter(|i| i.positive).map(|i| i.score).collect();
    let neg: Vec<f64> = set.items().iter().filter(|i| !i.positive).map(|i| i.score).collect();
    let mut wins = 0.0;
    for p in &pos {
        for n in &neg {
            if p > n {
                wins += 1.0;
            } else if p == n {
                wins += 0.5;
            }
        }
    }
    wins / (pos.len() * neg.len()) as f64
}

fn prefix_mean_risk(order: &[bool]) -> f64 {
    let n = order.len();
    (1..=n).map(|k| order[..k].iter().filter(|p| !**p).count() as f64 / k as f64).sum::<f64>() / n as f64
}

/// Descending-score order, ties kept in input order.
pub fn aurc_prefix(set: &BinaryScoredSet) -> f64 {
    let mut items: Vec<&ScoredItem> = set.items().iter().collect();
    items.sort_by(|a, b| b.score.partial_cmp(&a.score).unwrap());
    prefix_mean_risk(&items.iter().map(|i| i.positive).collect::<Vec<_>>())
}

pub fn eaurc_prefix(set: &BinaryScoredSet) -> f64 {
    let mut ideal: Vec<bool> = set.items().iter().map(|i| i.positive).collect();
    ideal.sort_by(|a, b| b.cmp(a));
    aurc_prefix(set) - prefix_mean_risk(&ideal)
}

/// Enumerates every distinct score as an acceptance threshold, highest first.
pub fn aupr_thresholds(items: &[(f64, bool)]) -> f64 {
    let p = items.iter().filter(|i| i.1).count();
    let mut thresholds: Vec<f64> = items.iter().map(|i| i.0).collect();
    thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
    thresholds.dedup();
    let mut area = 0.0;
    let mut prev = 0.0;
    for t in thresholds {
        let tp = items.iter().filter(|i| i.0 >= t && i.1).count();
        let fp = items.iter().filter(|i| i.0 >= t && !i.1).count();
        let recall = tp as f64 / p as f64;
        area += (recall - prev) * (tp as f64 / (tp + fp) as f64);
        prev = recall;
    }
    area
}

pub fn aupr_success_oracle(set: &BinaryScoredSet) -> f64 {
    aupr_thresholds(&set.items().iter().map(|i| (i.score, i.positive)).collect::<Vec<_>>())
}

pub fn aupr_error_oracle(set: &BinaryScoredSet) -> f64 {
    aupr_thresholds(&set.items().iter().map(|i| (-i.score, !i.positive)).collect::<Vec<_>>())
}
