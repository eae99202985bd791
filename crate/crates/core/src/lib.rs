//! Typicalness-aware learning (TAL) for failure detection.
//!
//! The crate is organised bottom-up:
//!
//! * [`loss`] – softmax, cross-entropy, logit direction/magnitude split,
//!   LogitNorm, the typicalness-weighted TAL objective and analytic
//!   gradients with respect to the logits.
//! * [`typicalness`] – per-sample feature statistics, the historical feature
//!   queue and per-batch min-max typicalness.
//! * [`scoring`] – confidence-rate functions over logits and the threshold
//!   accept/reject rule.
//! * [`metrics`] – three-setting evaluation sets and the failure-detection
//!   metrics (AURC, EAURC, AUROC, FPR/TNR at 95% TPR, AUPR, ECE).
//! * [`model`] – a small ReLU network with hand-written backpropagation, the
//!   training loop and checkpoint files.
//! * [`data`] – the synthetic shift benchmark and its CSV format.
//! * [`config`] – the flat `key = value` run configuration.

pub mod config;
pub mod data;
mod error;
pub mod loss;
pub mod metrics;
pub mod model;
pub mod scoring;
pub mod typicalness;

pub use error::{Error, Result};
