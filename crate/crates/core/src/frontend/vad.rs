//! Single-layer speech/non-speech classifier over frame features.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::FrameFeatures;
use crate::error::{Error, Result};

/// Logistic unit: `sigmoid(weights . features + bias)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VadWeights {
    pub weights: Vec<f64>,
    pub bias: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VadDecision {
    pub speech: bool,
    pub probability: f64,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl VadWeights {
    pub fn zeros(dim: usize) -> Self {
        Self {
            weights: vec![0.0; dim],
            bias: 0.0,
        }
    }

    /// Log-energy gate: speech when the frame's log-energy exceeds
    /// `threshold`. All other feature weights are zero.
    pub fn energy_gate(dim: usize, threshold: f64) -> Self {
        let mut weights = vec![0.0; dim];
        weights[0] = 1.0;
        Self {
            weights,
            bias: -threshold,
        }
    }

    pub fn probability(&self, features: &[f64]) -> Result<f64> {
        if features.len() != self.weights.len() {
            return Err(Error::invalid(format!(
                "classifier has {} weights but the frame has {} features",
                self.weights.len(),
                features.len()
            )));
        }
        let z: f64 = self.weights.iter().zip(features).map(|(w, x)| w * x).sum::<f64>() + self.bias;
        Ok(sigmoid(z))
    }

    /// Speech iff the probability is strictly above one half.
    pub fn classify(&self, features: &FrameFeatures) -> Result<VadDecision> {
        let probability = self.probability(&features.vector())?;
        Ok(VadDecision {
            speech: probability > 0.5,
            probability,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedVad {
    pub weights: VadWeights,
    /// Mean cross-entropy after training.
    pub loss: f64,
    /// Loss before each epoch, followed by the final loss.
    pub loss_history: Vec<f64>,
}

fn mean_loss(model: &VadWeights, data: &[(Vec<f64>, bool)]) -> f64 {
    let total: f64 = data
        .iter()
        .map(|(x, y)| {
            let p = model.probability(x).expect("dimensions checked before training");
            let p = p.clamp(1e-15, 1.0 - 1e-15);
            if *y {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum();
    total / data.len() as f64
}

/// Fits the logistic unit by full-batch gradient descent on mean
/// cross-entropy. Starting weights are small uniform draws from `seed`.
pub fn train_vad(
    frames: &[(Vec<f64>, bool)],
    epochs: usize,
    learning_rate: f64,
    seed: u64,
) -> Result<TrainedVad> {
    let Some((first, _)) = frames.first() else {
        return Err(Error::invalid("no training frames"));
    };
    let dim = first.len();
    if let Some(i) = frames.iter().position(|(x, _)| x.len() != dim) {
        return Err(Error::invalid(format!(
            "frame {i} has {} features, expected {dim}",
            frames[i].0.len()
        )));
    }
    if !frames.iter().any(|(_, y)| *y) {
        return Err(Error::invalid("training data has no speech frames"));
    }
    if !frames.iter().any(|(_, y)| !*y) {
        return Err(Error::invalid("training data has no non-speech frames"));
    }
    if !(learning_rate.is_finite() && learning_rate > 0.0) {
        return Err(Error::invalid("learning rate must be positive"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = VadWeights {
        weights: (0..dim).map(|_| rng.random_range(-0.01..0.01)).collect(),
        bias: rng.random_range(-0.01..0.01),
    };
    let n = frames.len() as f64;
    let mut loss_history = Vec::with_capacity(epochs + 1);
    let mut grad = vec![0.0; dim];
    for _ in 0..epochs {
        loss_history.push(mean_loss(&model, frames));
        grad.fill(0.0);
        let mut grad_bias = 0.0;
        for (x, y) in frames {
            let err = model.probability(x)? - if *y { 1.0 } else { 0.0 };
            for (g, xi) in grad.iter_mut().zip(x) {
                *g += err * xi;
            }
            grad_bias += err;
        }
        for (w, g) in model.weights.iter_mut().zip(&grad) {
            *w -= learning_rate * g / n;
        }
        model.bias -= learning_rate * grad_bias / n;
    }
    let loss = mean_loss(&model, frames);
    loss_history.push(loss);
    Ok(TrainedVad {
        weights: model,
        loss,
        loss_history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn features(log_energy: f64) -> FrameFeatures {
        FrameFeatures {
            frame_index: 0,
            time_s: 0.0,
            log_energy,
            zcr: 0.1,
            mfcc: vec![0.0; 13],
        }
    }

    #[test]
    fn zero_weights_are_a_tie_and_not_speech() {
        let d = VadWeights::zeros(15).classify(&features(3.0)).unwrap();
        assert_eq!(d.probability, 0.5);
        assert!(!d.speech);
    }

    #[test]
    fn heavy_energy_weight_detects_loud_frames() {
        let mut w = VadWeights::zeros(15);
        w.weights[0] = 10.0;
        assert!(w.classify(&features(2.0)).unwrap().speech);
        assert!(!w.classify(&features(-20.0)).unwrap().speech);
    }

    #[test]
    fn dimension_mismatch() {
        assert!(VadWeights::zeros(3).classify(&features(0.0)).is_err());
    }

    #[test]
    fn separable_toy_set() {
        let data: Vec<(Vec<f64>, bool)> = (0..40)
            .map(|i| {
                let x = i as f64 / 10.0 - 2.0;
                (vec![x, 0.5 * x], x > 0.0)
            })
            .collect();
        let trained = train_vad(&data, 2000, 0.5, 1).unwrap();
        let correct = data
            .iter()
            .filter(|(x, y)| (trained.weights.probability(x).unwrap() > 0.5) == *y)
            .count();
        assert_eq!(correct, data.len());
    }

    #[test]
    fn zero_epochs_returns_initial_weights() {
        let data = vec![(vec![1.0], true), (vec![-1.0], false)];
        let a = train_vad(&data, 0, 0.1, 5).unwrap();
        let b = train_vad(&data, 0, 0.1, 5).unwrap();
        assert_eq!(a.weights, b.weights);
        assert!(a.weights.weights[0].abs() < 0.01);
        assert_eq!(a.loss_history.len(), 1);
    }

    #[test]
    fn single_class_rejected() {
        let data = vec![(vec![1.0], true), (vec![2.0], true)];
        let err = train_vad(&data, 10, 0.1, 0).unwrap_err();
        assert!(err.to_string().contains("non-speech"));
        let data = vec![(vec![1.0], false)];
        assert!(train_vad(&data, 10, 0.1, 0).unwrap_err().to_string().contains("no speech"));
    }
}
