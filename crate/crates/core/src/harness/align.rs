use itertools::Itertools;

use crate::error::{Error, Result};
use crate::markov::StateSequence;

/// Largest state count [`align_labels`] searches exhaustively.
pub const MAX_ALIGN_STATES: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    /// `permutation[p]` is the truth id assigned to predicted id `p`.
    pub permutation: Vec<usize>,
    pub aligned: StateSequence,
    pub mismatches: usize,
}

impl Alignment {
    pub fn accuracy(&self) -> f64 {
        let n = self.aligned.len();
        if n == 0 {
            1.0
        } else {
            1.0 - self.mismatches as f64 / n as f64
        }
    }
}

/// Relabels `pred` by the permutation of ids that minimizes mismatches
/// against `truth`. Ties keep the lexicographically first permutation, so
/// the identity wins whenever it is optimal.
pub fn align_labels(pred: &StateSequence, truth: &StateSequence) -> Result<Alignment> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch {
            predicted: pred.len(),
            actual: truth.len(),
        });
    }
    let s = pred.states().max(truth.states());
    if s > MAX_ALIGN_STATES {
        return Err(Error::Unsupported(format!(
            "label alignment over {s} states (limit {MAX_ALIGN_STATES})"
        )));
    }
    let mut confusion = vec![vec![0usize; s]; s];
    for (&p, &t) in pred.labels().iter().zip(truth.labels()) {
        confusion[p][t] += 1;
    }
    let mut best: Option<(usize, Vec<usize>)> = None;
    for perm in (0..s).permutations(s) {
        let matches: usize = perm.iter().enumerate().map(|(p, &t)| confusion[p][t]).sum();
        let mismatches = pred.len() - matches;
        if best.as_ref().is_none_or(|(m, _)| mismatches < *m) {
            best = Some((mismatches, perm));
        }
    }
    let (mismatches, permutation) = best.expect("at least one permutation");
    let aligned = StateSequence::new(pred.labels().iter().map(|&p| permutation[p]).collect(), s)?;
    Ok(Alignment {
        permutation,
        aligned,
        mismatches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(l: &[usize], s: usize) -> StateSequence {
        StateSequence::new(l.to_vec(), s).unwrap()
    }

    #[test]
    fn recovers_swap() {
        let truth = seq(&[0, 0, 1, 2, 1], 3);
        let pred = seq(&[1, 1, 0, 2, 0], 3);
        let a = align_labels(&pred, &truth).unwrap();
        assert_eq!(a.permutation, vec![1, 0, 2]);
        assert_eq!(a.mismatches, 0);
        assert_eq!(a.aligned.labels(), truth.labels());
    }

    #[test]
    fn identity_when_equal() {
        let t = seq(&[2, 0, 1, 1], 3);
        let a = align_labels(&t, &t).unwrap();
        assert_eq!(a.permutation, vec![0, 1, 2]);
        assert_eq!(a.accuracy(), 1.0);
    }

    #[test]
    fn too_many_states() {
        let t = seq(&[0], 9);
        assert!(matches!(align_labels(&t, &t), Err(Error::Unsupported(_))));
    }
}
