use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markov::{argmax, StateSequence, TransitionModel};
use crate::metrics::{evaluate, EvaluationReport};

/// When the checker compares predictions against fresh diarization labels.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckerInterval {
    #[default]
    EveryIteration,
    /// Iterations whose index is a multiple of `every`.
    FixedEvery { every: usize },
    /// Each iteration independently with probability `p`.
    RandomBernoulli { p: f64, seed: u64 },
}

impl CheckerInterval {
    pub fn validate(&self) -> Result<()> {
        match *self {
            CheckerInterval::EveryIteration => Ok(()),
            CheckerInterval::FixedEvery { every } if every >= 1 => Ok(()),
            CheckerInterval::FixedEvery { .. } => {
                Err(Error::invalid("checker interval must be at least 1"))
            }
            CheckerInterval::RandomBernoulli { p, .. } if p > 0.0 && p <= 1.0 => Ok(()),
            CheckerInterval::RandomBernoulli { p, .. } => Err(Error::invalid(format!(
                "checker probability {p} is outside (0, 1]"
            ))),
        }
    }
}

impl fmt::Display for CheckerInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckerInterval::EveryIteration => write!(f, "every"),
            CheckerInterval::FixedEvery { every } => write!(f, "fixed:{every}"),
            CheckerInterval::RandomBernoulli { p, .. } => write!(f, "bernoulli:{p}"),
        }
    }
}

/// Parses `every`, `fixed:<m>` or `bernoulli:<p>`. The Bernoulli seed is 0;
/// callers that take a `--seed` set it afterwards.
impl FromStr for CheckerInterval {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let parsed = match s.split_once(':') {
            None if s == "every" => CheckerInterval::EveryIteration,
            Some(("fixed", m)) => CheckerInterval::FixedEvery {
                every: m
                    .trim()
                    .parse()
                    .map_err(|e| Error::parse("checker-interval", format!("fixed:{m}: {e}")))?,
            },
            Some(("bernoulli", p)) => CheckerInterval::RandomBernoulli {
                p: p
                    .trim()
                    .parse()
                    .map_err(|e| Error::parse("checker-interval", format!("bernoulli:{p}: {e}")))?,
                seed: 0,
            },
            _ => {
                return Err(Error::parse(
                    "checker-interval",
                    format!("expected every, fixed:<m> or bernoulli:<p>, got {s:?}"),
                ))
            }
        };
        parsed.validate()?;
        Ok(parsed)
    }
}

/// Acceptance thresholds for the checker and the window evaluator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// Percent; a prediction is accepted only with TPE strictly below this.
    pub tpe_threshold: f64,
    /// Percent; every present state's EPPS must be strictly below this.
    pub epps_threshold: f64,
    /// Largest allowed elementwise gap between full and windowed models.
    pub matrix_diff_max: f64,
    pub checker_interval: CheckerInterval,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            tpe_threshold: 20.0,
            epps_threshold: 30.0,
            matrix_diff_max: 0.15,
            checker_interval: CheckerInterval::EveryIteration,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("tpe_threshold", self.tpe_threshold),
            ("epps_threshold", self.epps_threshold),
            ("matrix_diff_max", self.matrix_diff_max),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        self.checker_interval.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Accept,
    ReplaceWithOracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckDecision {
    pub decision: Decision,
    pub report: EvaluationReport,
}

/// Accept iff TPE and the largest present-state EPPS are both strictly
/// below their thresholds. States without an EPPS do not take part.
pub fn decide(report: &EvaluationReport, thresholds: &Thresholds) -> Decision {
    let tpe_ok = report.tpe < thresholds.tpe_threshold;
    let epps_ok = report
        .max_epps()
        .is_none_or(|worst| worst < thresholds.epps_threshold);
    if tpe_ok && epps_ok {
        Decision::Accept
    } else {
        Decision::ReplaceWithOracle
    }
}

/// Compares a predicted sequence with the labels diarization produced for
/// the same span.
pub fn check_iteration(
    predicted: &[usize],
    oracle_labels: &[usize],
    thresholds: &Thresholds,
    states: usize,
) -> Result<CheckDecision> {
    let report = evaluate(predicted, oracle_labels, states)?;
    Ok(CheckDecision {
        decision: decide(&report, thresholds),
        report,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatrixDiff {
    pub max_abs: f64,
    pub pass: bool,
}

/// Largest elementwise `|full - windowed|` and whether it is within `max`.
pub fn matrix_diff(full: &TransitionModel, windowed: &TransitionModel, max: f64) -> Result<MatrixDiff> {
    if full.states() != windowed.states() {
        return Err(Error::invalid(format!(
            "cannot compare a {0}x{0} model with a {1}x{1} model",
            full.states(),
            windowed.states()
        )));
    }
    let s = full.states();
    let mut max_abs: f64 = 0.0;
    for i in 0..s {
        for (a, b) in full.row(i).iter().zip(windowed.row(i)) {
            max_abs = max_abs.max((a - b).abs());
        }
    }
    Ok(MatrixDiff {
        max_abs,
        pass: max_abs <= max,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowDiff {
    pub rows: Vec<bool>,
    pub all_pass: bool,
}

/// A row passes when its most likely successor beats every other successor
/// by more than `1/s`. A tie for the maximum is a failure.
pub fn row_diff_check(model: &TransitionModel) -> RowDiff {
    let s = model.states();
    let bound = 1.0 / s as f64;
    let rows: Vec<bool> = (0..s).map(|i| row_passes(model.row(i), bound)).collect();
    let all_pass = rows.iter().all(|&r| r);
    RowDiff { rows, all_pass }
}

fn row_passes(row: &[f64], bound: f64) -> bool {
    let best = argmax(row);
    row.iter()
        .enumerate()
        .filter(|&(j, _)| j != best)
        .all(|(_, &p)| row[best] - p > bound)
}

#[derive(Debug, Clone, PartialEq)]
pub enum EvaluatorOutcome {
    ProceedNextWindow,
    /// Model re-estimated from the window preceding the one that failed.
    FallbackPreviousWindow(TransitionModel),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluatorStep {
    pub window: usize,
    pub offset: usize,
    pub matrix_diff: MatrixDiff,
    pub row_diff: RowDiff,
    pub outcome: EvaluatorOutcome,
}

/// Checks the window `offset .. offset + k` of `seq` against `full_model`.
///
/// When the windowed model drifts from the full one by more than
/// `matrix_diff_max`, or one of its rows has no clear successor, the
/// prediction basis falls back to the `k` states before `offset` (the start
/// clamps at 0).
pub fn evaluator_step(
    seq: &StateSequence,
    k: usize,
    offset: usize,
    full_model: &TransitionModel,
    thresholds: &Thresholds,
) -> Result<EvaluatorStep> {
    if k >= seq.len() {
        return Err(Error::invalid(format!(
            "window of {k} states must be shorter than the sequence ({})",
            seq.len()
        )));
    }
    let policy = full_model.policy();
    let windowed = TransitionModel::estimate_window(seq, k, offset, policy)?;
    let matrix = matrix_diff(full_model, &windowed, thresholds.matrix_diff_max)?;
    let rows = row_diff_check(&windowed);
    let outcome = if matrix.pass && rows.all_pass {
        EvaluatorOutcome::ProceedNextWindow
    } else {
        let previous = offset.saturating_sub(k);
        EvaluatorOutcome::FallbackPreviousWindow(TransitionModel::estimate_window(
            seq, k, previous, policy,
        )?)
    };
    Ok(EvaluatorStep {
        window: k,
        offset,
        matrix_diff: matrix,
        row_diff: rows,
        outcome,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::UnseenRowPolicy;

    fn report(tpe: f64, epps: &[(usize, f64)]) -> EvaluationReport {
        EvaluationReport::from_percentages(tpe, epps.iter().copied()).unwrap()
    }

    fn model(rows: &[Vec<f64>]) -> TransitionModel {
        TransitionModel::from_probabilities(rows).unwrap()
    }

    #[test]
    fn decisions() {
        let t = Thresholds::default();
        assert_eq!(decide(&report(9.58, &[(0, 8.57), (1, 7.14), (2, 20.0)]), &t), Decision::Accept);
        assert_eq!(
            decide(&report(12.0, &[(0, 33.33), (1, 0.0), (2, 10.0)]), &t),
            Decision::ReplaceWithOracle
        );
        assert_eq!(
            decide(&report(25.0, &[(0, 0.0), (1, 0.0)]), &t),
            Decision::ReplaceWithOracle
        );
    }

    #[test]
    fn thresholds_are_strict() {
        let t = Thresholds::default();
        assert_eq!(decide(&report(20.0, &[(0, 0.0)]), &t), Decision::ReplaceWithOracle);
        assert_eq!(decide(&report(5.0, &[(0, 30.0)]), &t), Decision::ReplaceWithOracle);
        assert_eq!(decide(&report(19.999, &[(0, 29.999)]), &t), Decision::Accept);
    }

    #[test]
    fn check_from_sequences() {
        let d = check_iteration(&[0, 1, 2, 0], &[0, 1, 2, 0], &Thresholds::default(), 3).unwrap();
        assert_eq!(d.decision, Decision::Accept);
        assert!(check_iteration(&[0, 1], &[0], &Thresholds::default(), 2).is_err());
    }

    #[test]
    fn matrix_diff_examples() {
        let a = model(&[vec![1.0, 0.0], vec![0.5, 0.5]]);
        let d = matrix_diff(&a, &a, 0.15).unwrap();
        assert_eq!((d.max_abs, d.pass), (0.0, true));

        let b = model(&[vec![0.8, 0.2], vec![0.5, 0.5]]);
        let d = matrix_diff(&a, &b, 0.15).unwrap();
        assert!((d.max_abs - 0.2).abs() < 1e-12);
        assert!(!d.pass);

        let c = model(&[vec![0.6, 0.4], vec![0.5, 0.5]]);
        let e = model(&[vec![0.5, 0.5], vec![0.5, 0.5]]);
        let d = matrix_diff(&c, &e, 0.15).unwrap();
        assert!((d.max_abs - 0.1).abs() < 1e-12);
        assert!(d.pass);

        let three = model(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]);
        assert!(matrix_diff(&a, &three, 0.15).is_err());
    }

    #[test]
    fn row_diff_examples() {
        let r = row_diff_check(&model(&[vec![0.5, 0.5], vec![1.0, 0.0]]));
        assert_eq!(r.rows, vec![false, true]);
        assert!(!r.all_pass);

        let r = row_diff_check(&model(&[
            vec![0.7, 0.2, 0.1],
            vec![0.7, 0.2, 0.1],
            vec![0.1, 0.2, 0.7],
        ]));
        assert!(r.all_pass);
    }

    #[test]
    fn interval_parsing() {
        assert_eq!("every".parse::<CheckerInterval>().unwrap(), CheckerInterval::EveryIteration);
        assert_eq!(
            "fixed:3".parse::<CheckerInterval>().unwrap(),
            CheckerInterval::FixedEvery { every: 3 }
        );
        assert_eq!(
            "bernoulli:0.25".parse::<CheckerInterval>().unwrap(),
            CheckerInterval::RandomBernoulli { p: 0.25, seed: 0 }
        );
        for bad in ["", "fixed:0", "fixed:x", "bernoulli:0", "bernoulli:1.5", "sometimes"] {
            assert!(bad.parse::<CheckerInterval>().is_err(), "{bad}");
        }
    }

    fn alternating(pairs: usize) -> Vec<usize> {
        (0..pairs).flat_map(|_| [0, 1]).collect()
    }

    #[test]
    fn evaluator_proceeds_on_stable_alternation() {
        let seq = StateSequence::new(alternating(20), 2).unwrap();
        let full = TransitionModel::estimate(&seq, UnseenRowPolicy::Uniform);
        let step = evaluator_step(&seq, 8, 16, &full, &Thresholds::default()).unwrap();
        assert_eq!(step.outcome, EvaluatorOutcome::ProceedNextWindow);
        assert_eq!(step.matrix_diff.max_abs, 0.0);
    }

    #[test]
    fn evaluator_falls_back_on_drift() {
        let mut labels = alternating(10);
        labels.extend([0; 8]);
        let seq = StateSequence::new(labels, 2).unwrap();
        let full = TransitionModel::estimate(&seq, UnseenRowPolicy::Uniform);
        let step = evaluator_step(&seq, 8, 20, &full, &Thresholds::default()).unwrap();
        assert!(!step.matrix_diff.pass);
        assert!(step.matrix_diff.max_abs > 0.15);
        match step.outcome {
            EvaluatorOutcome::FallbackPreviousWindow(m) => {
                assert_eq!(m.prob_rows(), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
            }
            other => panic!("expected fallback, got {other:?}"),
        }
    }

    #[test]
    fn evaluator_fallback_clamps_at_start() {
        let seq = StateSequence::new(vec![0, 0, 0, 1, 1, 0, 1, 1, 1, 0], 2).unwrap();
        let full = TransitionModel::estimate(&seq, UnseenRowPolicy::Uniform);
        let step = evaluator_step(&seq, 4, 0, &full, &Thresholds::default()).unwrap();
        let expected = TransitionModel::estimate_window(&seq, 4, 0, UnseenRowPolicy::Uniform).unwrap();
        assert_eq!(step.outcome, EvaluatorOutcome::FallbackPreviousWindow(expected));
    }

    #[test]
    fn evaluator_requires_window_shorter_than_sequence() {
        let seq = StateSequence::new(alternating(3), 2).unwrap();
        let full = TransitionModel::estimate(&seq, UnseenRowPolicy::Uniform);
        assert!(evaluator_step(&seq, 6, 0, &full, &Thresholds::default()).is_err());
        assert!(evaluator_step(&seq, 4, 3, &full, &Thresholds::default()).is_err());
    }
}
