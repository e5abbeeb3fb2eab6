use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::TransitionModel;
use super::sequence::StateSequence;
use crate::error::{Error, Result};

/// How the chain emits its next state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictionMode {
    /// Most probable successor; ties go to the lowest state index.
    #[default]
    Argmax,
    /// Successor drawn from the row distribution with a seeded generator.
    Sampled { seed: u64 },
}

/// Lowest index attaining the maximum of `row`.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (j, &p) in row.iter().enumerate().skip(1) {
        if p > row[best] {
            best = j;
        }
    }
    best
}

/// Inverse-CDF draw from a probability row.
pub fn sample_row<R: Rng + ?Sized>(row: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut cumulative = 0.0;
    let mut last_positive = 0;
    for (j, &p) in row.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        cumulative += p;
        last_positive = j;
        if u < cumulative {
            return j;
        }
    }
    // u landed in the rounding gap above the accumulated sum
    last_positive
}

impl TransitionModel {
    /// Next state after `current` under `mode`. A sampled prediction uses a
    /// fresh generator seeded from the mode, so it is a single draw.
    pub fn predict_next(&self, current: usize, mode: PredictionMode) -> Result<usize> {
        Predictor::new(self, mode).next(current)
    }

    pub fn sample_next<R: Rng + ?Sized>(&self, current: usize, rng: &mut R) -> Result<usize> {
        Ok(sample_row(self.query_row(current)?, rng))
    }

    /// `length` states starting with `initial`, each following the previous
    /// one through [`Predictor::next`].
    pub fn predict_sequence(
        &self,
        initial: usize,
        length: usize,
        mode: PredictionMode,
    ) -> Result<StateSequence> {
        if length == 0 {
            return Err(Error::invalid("prediction length must be positive"));
        }
        self.check_state(initial)?;
        let mut predictor = Predictor::new(self, mode);
        let mut labels = Vec::with_capacity(length);
        labels.push(initial);
        for _ in 1..length {
            let next = predictor.next(*labels.last().unwrap())?;
            labels.push(next);
        }
        StateSequence::new(labels, self.states())
    }
}

/// Stateful next-state generator over a borrowed model. Sampled mode keeps
/// one generator across calls so a run of predictions is reproducible from
/// the seed.
pub struct Predictor<'m> {
    model: &'m TransitionModel,
    rng: Option<ChaCha8Rng>,
}

impl<'m> Predictor<'m> {
    pub fn new(model: &'m TransitionModel, mode: PredictionMode) -> Self {
        let rng = match mode {
            PredictionMode::Argmax => None,
            PredictionMode::Sampled { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
        };
        Self { model, rng }
    }

    pub fn next(&mut self, current: usize) -> Result<usize> {
        let row = self.model.query_row(current)?;
        Ok(match self.rng.as_mut() {
            None => argmax(row),
            Some(rng) => sample_row(row, rng),
        })
    }
}
