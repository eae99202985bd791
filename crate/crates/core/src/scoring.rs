//! Confidence-rate functions over logits.
//!
//! Every score is oriented so that a larger value means "more confident";
//! entropy is negated and energy is reported as `log sum exp(f)`.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::loss;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScoreKind {
    Msp,
    MaxLogit,
    Cosine,
    Energy,
    Entropy,
}

impl ScoreKind {
    pub const ALL: [ScoreKind; 5] =
        [ScoreKind::Msp, ScoreKind::MaxLogit, ScoreKind::Cosine, ScoreKind::Energy, ScoreKind::Entropy];

    pub fn name(self) -> &'static str {
        match self {
            ScoreKind::Msp => "msp",
            ScoreKind::MaxLogit => "maxlogit",
            ScoreKind::Cosine => "cosine",
            ScoreKind::Energy => "energy",
            ScoreKind::Entropy => "entropy",
        }
    }
}

impl fmt::Display for ScoreKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScoreKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScoreKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| invalid(format!("unknown score '{s}'")))
    }
}

/// All five confidence scores of one logit vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceScores {
    pub predicted: usize,
    pub msp: f64,
    pub max_logit: f64,
    /// `None` when the logit vector is exactly zero.
    pub cosine: Option<f64>,
    pub energy: f64,
    pub entropy: f64,
}

impl ConfidenceScores {
    pub fn get(&self, kind: ScoreKind) -> Result<f64> {
        match kind {
            ScoreKind::Msp => Ok(self.msp),
            ScoreKind::MaxLogit => Ok(self.max_logit),
            ScoreKind::Cosine => self.cosine.ok_or(Error::DegenerateLogits),
            ScoreKind::Energy => Ok(self.energy),
            ScoreKind::Entropy => Ok(self.entropy),
        }
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

pub fn confidence_scores(logits: &[f64]) -> Result<ConfidenceScores> {
    let probs = loss::softmax(logits)?;
    let predicted = argmax(logits);
    let lse = loss::log_sum_exp(logits)?;
    // -H(p) = sum p_i log p_i, with log p_i = f_i - lse.
    let neg_entropy: f64 = probs.iter().zip(logits).filter(|(p, _)| **p > 0.0).map(|(p, f)| p * (f - lse)).sum();
    let cosine = match loss::decompose(logits) {
        Ok(dec) => Some(dec.direction[predicted]),
        Err(Error::DegenerateLogits) => None,
        Err(e) => return Err(e),
    };
    Ok(ConfidenceScores {
        predicted,
        msp: probs[predicted],
        max_logit: logits[predicted],
        cosine,
        energy: lse,
        entropy: neg_entropy.min(0.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Accept,
    Reject,
}

/// Accept iff `score >= threshold`.
pub fn decide(score: f64, threshold: f64) -> Decision {
    if score >= threshold {
        Decision::Accept
    } else {
        Decision::Reject
    }
}
