//! Prediction error measures.
//!
//! * TPE, total percentage error: share of positions whose predicted label
//!   differs from the actual one, in percent.
//! * EPPS, error percentage per state: for a state `x`, the share of the
//!   positions where the *actual* label is `x` that were predicted as
//!   something else. A state that never occurs in the actual sequence has
//!   no EPPS.
//!
//! With the denominator taken from the actual sequence, TPE is the
//! occurrence-weighted mean of the EPPS values.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markov::StateSequence;

fn check_lengths(predicted: &[usize], actual: &[usize]) -> Result<()> {
    if predicted.len() != actual.len() {
        return Err(Error::LengthMismatch {
            predicted: predicted.len(),
            actual: actual.len(),
        });
    }
    Ok(())
}

/// Total percentage error over two equal-length label slices.
pub fn tpe(predicted: &[usize], actual: &[usize]) -> Result<f64> {
    check_lengths(predicted, actual)?;
    if actual.is_empty() {
        return Err(Error::invalid("cannot compute TPE of empty sequences"));
    }
    let wrong = predicted.iter().zip(actual).filter(|(p, a)| p != a).count();
    Ok(100.0 * wrong as f64 / actual.len() as f64)
}

/// Error percentage for state `x`, or `None` if `x` never occurs in `actual`.
pub fn epps(predicted: &[usize], actual: &[usize], x: usize) -> Result<Option<f64>> {
    check_lengths(predicted, actual)?;
    let (mut occurrences, mut wrong) = (0usize, 0usize);
    for (&p, &a) in predicted.iter().zip(actual) {
        if a == x {
            occurrences += 1;
            if p != x {
                wrong += 1;
            }
        }
    }
    Ok((occurrences > 0).then(|| 100.0 * wrong as f64 / occurrences as f64))
}

/// TPE and per-state EPPS for one predicted sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub tpe: f64,
    /// Only states present in the actual sequence appear here.
    pub epps: BTreeMap<usize, f64>,
    pub compared_length: usize,
    pub per_state_occurrences: BTreeMap<usize, usize>,
}

impl EvaluationReport {
    /// Report from already-computed percentages, e.g. published figures.
    /// Occurrence counts are unknown and left empty.
    pub fn from_percentages(tpe: f64, epps: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let epps: BTreeMap<usize, f64> = epps.into_iter().collect();
        for (&state, &value) in epps.iter().chain(std::iter::once((&usize::MAX, &tpe))) {
            if !(0.0..=100.0).contains(&value) {
                let what = if state == usize::MAX {
                    "TPE".to_string()
                } else {
                    format!("EPPS for state {state}")
                };
                return Err(Error::invalid(format!("{what} = {value} is not a percentage")));
            }
        }
        Ok(Self {
            tpe,
            epps,
            compared_length: 0,
            per_state_occurrences: BTreeMap::new(),
        })
    }

    /// Largest EPPS over the states that have one.
    pub fn max_epps(&self) -> Option<f64> {
        self.epps.values().copied().reduce(f64::max)
    }
}

/// Full report for `predicted` against `actual` over `states` labels.
pub fn evaluate(predicted: &[usize], actual: &[usize], states: usize) -> Result<EvaluationReport> {
    check_lengths(predicted, actual)?;
    if actual.is_empty() {
        return Err(Error::invalid("cannot evaluate empty sequences"));
    }
    let mut occurrences = vec![0usize; states];
    let mut wrong = vec![0usize; states];
    let mut total_wrong = 0usize;
    for (index, (&p, &a)) in predicted.iter().zip(actual).enumerate() {
        if a >= states {
            return Err(Error::LabelOutOfRange { index, label: a, states });
        }
        occurrences[a] += 1;
        if p != a {
            wrong[a] += 1;
            total_wrong += 1;
        }
    }
    let mut epps = BTreeMap::new();
    let mut per_state_occurrences = BTreeMap::new();
    for x in 0..states {
        if occurrences[x] > 0 {
            epps.insert(x, 100.0 * wrong[x] as f64 / occurrences[x] as f64);
            per_state_occurrences.insert(x, occurrences[x]);
        }
    }
    Ok(EvaluationReport {
        tpe: 100.0 * total_wrong as f64 / actual.len() as f64,
        epps,
        compared_length: actual.len(),
        per_state_occurrences,
    })
}

/// [`evaluate`] over two sequences, using the wider of the two alphabets.
pub fn evaluate_sequences(predicted: &StateSequence, actual: &StateSequence) -> Result<EvaluationReport> {
    let states = predicted.states().max(actual.states());
    evaluate(predicted.labels(), actual.labels(), states)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tpe_examples() {
        assert_eq!(tpe(&[0, 1, 2, 0], &[0, 1, 2, 0]).unwrap(), 0.0);
        assert_eq!(tpe(&[0, 1, 2, 0], &[0, 1, 1, 0]).unwrap(), 25.0);
        assert_eq!(tpe(&[1, 1, 0], &[0, 0, 1]).unwrap(), 100.0);
    }

    #[test]
    fn tpe_errors() {
        assert!(matches!(
            tpe(&[0, 1], &[0]),
            Err(Error::LengthMismatch { predicted: 2, actual: 1 })
        ));
        assert!(tpe(&[], &[]).is_err());
    }

    #[test]
    fn epps_examples() {
        assert_eq!(epps(&[0, 1, 1, 1], &[0, 0, 1, 1], 0).unwrap(), Some(50.0));
        assert_eq!(epps(&[0, 1, 1, 1], &[0, 0, 1, 1], 2).unwrap(), None);
        assert_eq!(epps(&[0, 0, 1, 1], &[0, 0, 1, 1], 1).unwrap(), Some(0.0));
        assert!(epps(&[0], &[0, 1], 0).is_err());
    }

    #[test]
    fn evaluate_examples() {
        let r = evaluate(&[0, 1, 1, 1, 2, 0], &[0, 0, 1, 1, 2, 2], 3).unwrap();
        assert!((r.tpe - 100.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.epps, BTreeMap::from([(0, 50.0), (1, 0.0), (2, 50.0)]));
        assert_eq!(r.compared_length, 6);

        let r = evaluate(&[1, 0, 1], &[1, 1, 1], 2).unwrap();
        assert!((r.tpe - 100.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.epps.len(), 1);
        assert!((r.epps[&1] - r.tpe).abs() < 1e-12);

        let r = evaluate(&[2, 0, 1], &[2, 0, 1], 3).unwrap();
        assert_eq!(r.tpe, 0.0);
        assert!(r.epps.values().all(|&e| e == 0.0));
    }

    #[test]
    fn published_percentages_validated() {
        assert!(EvaluationReport::from_percentages(9.58, [(0, 8.57), (1, 7.14), (2, 20.0)]).is_ok());
        assert!(EvaluationReport::from_percentages(101.0, []).is_err());
        assert!(EvaluationReport::from_percentages(5.0, [(1, -1.0)]).is_err());
    }
}
