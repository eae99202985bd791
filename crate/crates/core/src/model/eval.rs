use super::network::Mlp;
use crate::data::Dataset;
use crate::error::{invalid, Result};
use crate::metrics::{Domain, EvaluationRecord};
use crate::scoring::{confidence_scores, ConfidenceScores, ScoreKind};

/// A test sample with its prediction and every confidence score.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredSample {
    pub id: String,
    pub label: Option<usize>,
    pub domain: Domain,
    pub correct: bool,
    pub scores: ConfidenceScores,
}

impl ScoredSample {
    pub fn predicted(&self) -> usize {
        self.scores.predicted
    }
}

/// Scores every test sample. Inference uses the network only; the feature
/// queue plays no part.
pub fn evaluate(model: &Mlp, data: &Dataset) -> Result<Vec<ScoredSample>> {
    if data.dim() != model.input_dim() {
        return Err(invalid(format!("test data has {} features, the model expects {}", data.dim(), model.input_dim())));
    }
    data.samples()
        .iter()
        .map(|s| {
            let scores = confidence_scores(&model.forward(&s.x)?.logits)?;
            let correct = s.domain != Domain::Semantic && s.label == Some(scores.predicted);
            Ok(ScoredSample { id: s.id.clone(), label: s.label, domain: s.domain, correct, scores })
        })
        .collect()
}

/// Evaluation records for one scoring function, in sample order.
pub fn records(samples: &[ScoredSample], kind: ScoreKind) -> Result<Vec<EvaluationRecord>> {
    samples
        .iter()
        .map(|s| EvaluationRecord::new(s.id.clone(), s.scores.get(kind)?, s.predicted(), s.label, s.domain))
        .collect()
}

/// Accuracy over the in-distribution samples.
pub fn id_accuracy(samples: &[ScoredSample]) -> Option<f64> {
    let id: Vec<_> = samples.iter().filter(|s| s.domain == Domain::Id).collect();
    (!id.is_empty()).then(|| id.iter().filter(|s| s.correct).count() as f64 / id.len() as f64)
}
