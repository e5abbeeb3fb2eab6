//! Speaker-state transition models.
//!
//! A [`TransitionModel`] is the maximum-likelihood bigram estimate over a
//! [`StateSequence`]: `probs[i][j] = counts[i][j] / sum_j counts[i][j]`.
//! Models can be grown one observation at a time with
//! [`TransitionModel::update_online`], which gives exactly the same counts
//! and probabilities as re-estimating from the extended sequence.

mod model;
mod predict;
mod sequence;
mod stationary;

pub use model::{count_transitions, TransitionCounts, TransitionModel, UnseenRowPolicy};
pub use predict::{argmax, sample_row, PredictionMode, Predictor};
pub use sequence::{StateSequence, TimeSpan};
pub use stationary::Stationary;
