//! Failure-detection evaluation.
//!
//! Evaluation records are first assembled into a [`BinaryScoredSet`] for one
//! of three settings (which predictions *should* be accepted), then scored
//! with the ranking metrics below. Ties between equal scores are broken by
//! input order wherever an ordering is needed, so every metric is
//! reproducible bit for bit.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    Id,
    Covariate,
    Semantic,
}

impl Domain {
    pub fn name(self) -> &'static str {
        match self {
            Domain::Id => "id",
            Domain::Covariate => "covariate",
            Domain::Semantic => "semantic",
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Domain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "id" => Ok(Domain::Id),
            "covariate" => Ok(Domain::Covariate),
            "semantic" => Ok(Domain::Semantic),
            other => Err(invalid(format!("unknown domain '{other}'"))),
        }
    }
}

/// One scored prediction on a test sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationRecord {
    pub sample_id: String,
    pub score: f64,
    pub predicted: usize,
    pub label: Option<usize>,
    pub domain: Domain,
    pub correct: bool,
}

impl EvaluationRecord {
    /// Builds a record, deriving correctness from the label. Semantic-shift
    /// samples have no valid label and are never correct.
    pub fn new(
        sample_id: impl Into<String>,
        score: f64,
        predicted: usize,
        label: Option<usize>,
        domain: Domain,
    ) -> Result<Self> {
        if !score.is_finite() {
            return Err(invalid("record score must be finite"));
        }
        if domain == Domain::Semantic && label.is_some() {
            return Err(invalid("semantic-shift records carry no label"));
        }
        if domain != Domain::Semantic && label.is_none() {
            return Err(invalid(format!("{domain} records need a label")));
        }
        let correct = domain != Domain::Semantic && label == Some(predicted);
        Ok(Self { sample_id: sample_id.into(), score, predicted, label, domain, correct })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Setting {
    /// In-distribution records only; accept the correct ones.
    OldFd,
    /// In-distribution versus semantic shift; correctness is ignored.
    OodD,
    /// Everything; accept correct in-distribution and covariate predictions.
    NewFd,
}

impl Setting {
    pub const ALL: [Setting; 3] = [Setting::OldFd, Setting::OodD, Setting::NewFd];

    pub fn name(self) -> &'static str {
        match self {
            Setting::OldFd => "old_fd",
            Setting::OodD => "ood_d",
            Setting::NewFd => "new_fd",
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Setting::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| invalid(format!("unknown setting '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredItem {
    pub score: f64,
    pub positive: bool,
}

/// Scores labelled with whether the prediction should be accepted.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BinaryScoredSet {
    items: Vec<ScoredItem>,
}

impl BinaryScoredSet {
    pub fn new(items: Vec<ScoredItem>) -> Result<Self> {
        if items.iter().any(|i| !i.score.is_finite()) {
            return Err(invalid("scores must be finite"));
        }
        Ok(Self { items })
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (f64, bool)>) -> Result<Self> {
        Self::new(pairs.into_iter().map(|(score, positive)| ScoredItem { score, positive }).collect())
    }

    pub fn items(&self) -> &[ScoredItem] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.items.iter().filter(|i| i.positive).count()
    }

    pub fn negatives(&self) -> usize {
        self.len() - self.positives()
    }

    /// Indices sorted by descending score, ties in input order.
    fn ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.items.len()).collect();
        idx.sort_by(|&a, &b| self.items[b].score.total_cmp(&self.items[a].score));
        idx
    }

    fn require_both(&self, metric: &str) -> Result<(usize, usize)> {
        let (p, n) = (self.positives(), self.negatives());
        if p == 0 || n == 0 {
            return Err(Error::DegenerateSet(format!("{metric} needs positives and negatives (got {p} and {n})")));
        }
        Ok((p, n))
    }

    fn require_non_empty(&self) -> Result<()> {
        if self.items.is_empty() {
            return Err(Error::DegenerateSet("empty evaluation set".into()));
        }
        Ok(())
    }

    /// Walks descending-score tie groups, yielding cumulative (tp, fp)
    /// after each group.
    fn tie_groups(&self) -> Vec<(usize, usize)> {
        let order = self.ranking();
        let mut out = Vec::new();
        let (mut tp, mut fp) = (0, 0);
        for (pos, &i) in order.iter().enumerate() {
            if self.items[i].positive {
                tp += 1;
            } else {
                fp += 1;
            }
            let last_of_group = order.get(pos + 1).is_none_or(|&j| self.items[j].score != self.items[i].score);
            if last_of_group {
                out.push((tp, fp));
            }
        }
        out
    }
}

/// Builds the binary set for one evaluation setting; one-class sets are
/// an error.
pub fn assemble(records: &[EvaluationRecord], setting: Setting) -> Result<BinaryScoredSet> {
    let set = partition(records, setting)?;
    if set.positives() == 0 || set.negatives() == 0 {
        return Err(Error::DegenerateSet(format!(
            "{setting} set has {} positives and {} negatives",
            set.positives(),
            set.negatives()
        )));
    }
    Ok(set)
}

/// Like [`assemble`] but accepts one-class sets, for which AURC and EAURC
/// are still defined.
pub fn partition(records: &[EvaluationRecord], setting: Setting) -> Result<BinaryScoredSet> {
    let pairs: Vec<(f64, bool)> = records
        .iter()
        .filter_map(|r| match setting {
            Setting::OldFd => (r.domain == Domain::Id).then_some((r.score, r.correct)),
            Setting::OodD => match r.domain {
                Domain::Id => Some((r.score, true)),
                Domain::Semantic => Some((r.score, false)),
                Domain::Covariate => None,
            },
            Setting::NewFd => Some((r.score, r.correct && r.domain != Domain::Semantic)),
        })
        .collect();
    BinaryScoredSet::from_pairs(pairs)
}

/// Risk (error rate among accepted) at coverages `k/N`, `k = 1..N`.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskCoverageCurve {
    pub points: Vec<(f64, f64)>,
}

impl RiskCoverageCurve {
    /// `coverage,risk` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("coverage,risk\n");
        for (c, r) in &self.points {
            out.push_str(&format!("{c},{r}\n"));
        }
        out
    }
}

pub fn risk_coverage(set: &BinaryScoredSet) -> Result<RiskCoverageCurve> {
    set.require_non_empty()?;
    let n = set.len() as f64;
    let mut negatives = 0usize;
    let points = set
        .ranking()
        .into_iter()
        .enumerate()
        .map(|(k, i)| {
            if !set.items[i].positive {
                negatives += 1;
            }
            let accepted = (k + 1) as f64;
            (accepted / n, negatives as f64 / accepted)
        })
        .collect();
    Ok(RiskCoverageCurve { points })
}

fn mean_risk(points: &[(f64, f64)]) -> f64 {
    points.iter().map(|(_, r)| r).sum::<f64>() / points.len() as f64
}

/// Area under the risk-coverage curve: the mean risk over the coverage grid.
pub fn aurc(set: &BinaryScoredSet) -> Result<f64> {
    Ok(mean_risk(&risk_coverage(set)?.points))
}

/// AURC of the ideal ranking with every positive ahead of every negative.
pub fn optimal_aurc(set: &BinaryScoredSet) -> Result<f64> {
    set.require_non_empty()?;
    let p = set.positives();
    let total: f64 = (1..=set.len()).map(|k| if k <= p { 0.0 } else { (k - p) as f64 / k as f64 }).sum();
    Ok(total / set.len() as f64)
}

pub fn eaurc(set: &BinaryScoredSet) -> Result<f64> {
    Ok(aurc(set)? - optimal_aurc(set)?)
}

/// Mann-Whitney estimate of `P(score_pos > score_neg)`, ties counting half.
pub fn auroc(set: &BinaryScoredSet) -> Result<f64> {
    let (p, n) = set.require_both("AUROC")?;
    let mut idx: Vec<usize> = (0..set.len()).collect();
    idx.sort_by(|&a, &b| set.items[a].score.total_cmp(&set.items[b].score));

    // Twice the statistic, kept as an integer until the final division.
    let mut doubled: u128 = 0;
    let mut negatives_below: u128 = 0;
    let mut start = 0;
    while start < idx.len() {
        let score = set.items[idx[start]].score;
        let mut end = start;
        let (mut gp, mut gn) = (0u128, 0u128);
        while end < idx.len() && set.items[idx[end]].score == score {
            if set.items[idx[end]].positive {
                gp += 1;
            } else {
                gn += 1;
            }
            end += 1;
        }
        doubled += 2 * gp * negatives_below + gp * gn;
        negatives_below += gn;
        start = end;
    }
    Ok(doubled as f64 / (2 * p as u128 * n as u128) as f64)
}

/// False-positive rate at the largest observed-score threshold whose
/// true-positive rate reaches 95% (accept iff `score >= threshold`).
pub fn fpr_at_95tpr(set: &BinaryScoredSet) -> Result<f64> {
    let (p, n) = set.require_both("FPR@95TPR")?;
    let (_, fp) = set
        .tie_groups()
        .into_iter()
        .find(|&(tp, _)| tp * 100 >= 95 * p)
        .expect("the lowest threshold accepts every positive");
    Ok(fp as f64 / n as f64)
}

pub fn tnr_at_95tpr(set: &BinaryScoredSet) -> Result<f64> {
    Ok(1.0 - fpr_at_95tpr(set)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    /// Positives are the accept-worthy predictions, ranked by score.
    Success,
    /// Positives are the failures, ranked by negated score.
    Error,
}

/// Step-wise area under the precision-recall curve,
/// `sum_k (R_k - R_{k-1}) P_k` over descending-score thresholds.
pub fn aupr(set: &BinaryScoredSet, polarity: Polarity) -> Result<f64> {
    let oriented = match polarity {
        Polarity::Success => set.clone(),
        Polarity::Error => BinaryScoredSet {
            items: set.items.iter().map(|i| ScoredItem { score: -i.score, positive: !i.positive }).collect(),
        },
    };
    let p = oriented.positives();
    if p == 0 {
        return Err(Error::DegenerateSet("AUPR needs at least one positive".into()));
    }
    let mut area = 0.0;
    let mut prev_recall = 0.0;
    for (tp, fp) in oriented.tie_groups() {
        let recall = tp as f64 / p as f64;
        let precision = tp as f64 / (tp + fp) as f64;
        area += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    Ok(area)
}

pub const DEFAULT_ECE_BINS: usize = 15;

/// Expected calibration error over equal-width confidence bins on `[0, 1]`.
/// Record scores must be probabilities (MSP).
pub fn ece(records: &[EvaluationRecord], bins: usize) -> Result<f64> {
    if bins == 0 {
        return Err(invalid("ECE needs at least one bin"));
    }
    if records.is_empty() {
        return Err(Error::DegenerateSet("ECE of an empty record list".into()));
    }
    if let Some(r) = records.iter().find(|r| !(0.0..=1.0).contains(&r.score)) {
        return Err(invalid(format!("confidence {} outside [0, 1]", r.score)));
    }
    let mut count = vec![0usize; bins];
    let mut conf = vec![0.0; bins];
    let mut hits = vec![0usize; bins];
    for r in records {
        let b = ((r.score * bins as f64) as usize).min(bins - 1);
        count[b] += 1;
        conf[b] += r.score;
        hits[b] += usize::from(r.correct);
    }
    let n = records.len() as f64;
    Ok((0..bins)
        .filter(|&b| count[b] > 0)
        .map(|b| {
            let m = count[b] as f64;
            (m / n) * (hits[b] as f64 / m - conf[b] / m).abs()
        })
        .sum())
}

/// The seven failure-detection metrics for one set. Metrics that are
/// undefined for the set (for example AUROC without any failure) are `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FailureMetrics {
    pub aurc: Option<f64>,
    pub eaurc: Option<f64>,
    pub auroc: Option<f64>,
    pub fpr95: Option<f64>,
    pub tnr95: Option<f64>,
    pub aupr_success: Option<f64>,
    pub aupr_error: Option<f64>,
}

impl FailureMetrics {
    pub const NAMES: [&'static str; 7] = ["aurc", "eaurc", "auroc", "fpr95", "tnr95", "aupr_success", "aupr_error"];

    pub fn compute(set: &BinaryScoredSet) -> Self {
        Self {
            aurc: aurc(set).ok(),
            eaurc: eaurc(set).ok(),
            auroc: auroc(set).ok(),
            fpr95: fpr_at_95tpr(set).ok(),
            tnr95: tnr_at_95tpr(set).ok(),
            aupr_success: aupr(set, Polarity::Success).ok(),
            aupr_error: aupr(set, Polarity::Error).ok(),
        }
    }

    /// Values in [`Self::NAMES`] order.
    pub fn values(&self) -> [Option<f64>; 7] {
        [self.aurc, self.eaurc, self.auroc, self.fpr95, self.tnr95, self.aupr_success, self.aupr_error]
    }
}
