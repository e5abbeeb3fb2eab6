use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::check::{
    check_iteration, evaluator_step, CheckDecision, CheckerInterval, Decision, EvaluatorOutcome,
    MatrixDiff, Thresholds,
};
use crate::error::{Error, Result};
use crate::markov::{PredictionMode, Predictor, StateSequence, TransitionModel, UnseenRowPolicy};
use crate::metrics::evaluate;

/// Source of the labels diarization assigns to each successive stretch of
/// the conversation. `None` means the conversation has ended.
pub trait LabelOracle {
    fn next_sequence(&mut self) -> Option<StateSequence>;
}

/// Oracle replaying a fixed list of label sequences.
#[derive(Debug, Clone)]
pub struct SequenceOracle {
    queue: VecDeque<StateSequence>,
}

impl SequenceOracle {
    pub fn new(sequences: impl IntoIterator<Item = StateSequence>) -> Self {
        Self {
            queue: sequences.into_iter().collect(),
        }
    }
}

impl LabelOracle for SequenceOracle {
    fn next_sequence(&mut self) -> Option<StateSequence> {
        self.queue.pop_front()
    }
}

/// What each predicted label is conditioned on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Horizon {
    /// Every position is predicted from the observed state before it.
    #[default]
    OneStep,
    /// The chain runs on its own predictions for the whole sequence.
    FreeRunning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    pub states: usize,
    /// Total iterations, including the bootstrap iteration 0.
    pub iterations: usize,
    pub thresholds: Thresholds,
    /// Window length for the drift evaluator; `None` disables it.
    pub window_k: Option<usize>,
    pub mode: PredictionMode,
    pub horizon: Horizon,
    /// Candidate sequences generated per early iteration in sampled mode.
    pub candidate_count: usize,
    /// Number of iterations after the bootstrap that pick the best of
    /// `candidate_count` candidates.
    pub candidate_iterations: usize,
    pub policy: UnseenRowPolicy,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            states: 2,
            iterations: 8,
            thresholds: Thresholds::default(),
            window_k: None,
            mode: PredictionMode::Argmax,
            horizon: Horizon::OneStep,
            candidate_count: 5,
            candidate_iterations: 1,
            policy: UnseenRowPolicy::Uniform,
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.states == 0 {
            return Err(Error::invalid("session needs at least one state"));
        }
        if self.iterations == 0 {
            return Err(Error::invalid("session needs at least the bootstrap iteration"));
        }
        if self.candidate_count == 0 {
            return Err(Error::invalid("candidate_count must be at least 1"));
        }
        if self.window_k == Some(0) {
            return Err(Error::invalid("window_k must be at least 1"));
        }
        self.thresholds.validate()
    }

    /// Candidates generated at `iteration`; always one in argmax mode.
    pub fn candidates_at(&self, iteration: usize) -> usize {
        match self.mode {
            PredictionMode::Sampled { .. } if iteration <= self.candidate_iterations => {
                self.candidate_count
            }
            _ => 1,
        }
    }
}

/// Drift-evaluator result recorded in a session trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluatorRecord {
    pub window: usize,
    pub offset: usize,
    pub matrix_diff: MatrixDiff,
    pub rows_pass: Vec<bool>,
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub predicted_id: String,
    pub predicted: Vec<usize>,
    pub candidates: usize,
    /// Present only on iterations the checker ran.
    pub check: Option<CheckDecision>,
    pub evaluator: Option<EvaluatorRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionReport {
    pub bootstrap_length: usize,
    pub iterations: Vec<IterationRecord>,
    /// True when the oracle ran out before the configured iteration count.
    pub terminated_early: bool,
    pub final_model: TransitionModel,
}

impl SessionReport {
    pub fn checked(&self) -> impl Iterator<Item = (&IterationRecord, &CheckDecision)> {
        self.iterations
            .iter()
            .filter_map(|r| r.check.as_ref().map(|c| (r, c)))
    }

    /// Mean TPE over the checked iterations.
    pub fn mean_tpe(&self) -> Option<f64> {
        let tpes: Vec<f64> = self.checked().map(|(_, c)| c.report.tpe).collect();
        (!tpes.is_empty()).then(|| tpes.iter().sum::<f64>() / tpes.len() as f64)
    }
}

/// SplitMix64 finalizer, used to derive independent per-candidate seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn candidate_seed(seed: u64, iteration: usize, candidate: usize) -> u64 {
    mix(seed ^ mix(iteration as u64) ^ mix(mix(candidate as u64)))
}

struct CheckSchedule {
    interval: CheckerInterval,
    rng: Option<ChaCha8Rng>,
}

impl CheckSchedule {
    fn new(interval: CheckerInterval) -> Self {
        let rng = match interval {
            CheckerInterval::RandomBernoulli { seed, .. } => Some(ChaCha8Rng::seed_from_u64(seed)),
            _ => None,
        };
        Self { interval, rng }
    }

    fn due(&mut self, iteration: usize) -> bool {
        match self.interval {
            CheckerInterval::EveryIteration => true,
            CheckerInterval::FixedEvery { every } => iteration.is_multiple_of(every),
            CheckerInterval::RandomBernoulli { p, .. } => {
                self.rng.as_mut().expect("bernoulli schedule has a generator").random::<f64>() < p
            }
        }
    }
}

fn predict_against(
    model: &TransitionModel,
    anchor: usize,
    actual: &StateSequence,
    mode: PredictionMode,
    horizon: Horizon,
) -> Result<Vec<usize>> {
    let mut predictor = Predictor::new(model, mode);
    let mut out = Vec::with_capacity(actual.len());
    let mut previous = anchor;
    for &observed in actual.labels() {
        let next = predictor.next(previous)?;
        out.push(next);
        previous = match horizon {
            Horizon::OneStep => observed,
            Horizon::FreeRunning => next,
        };
    }
    Ok(out)
}

/// Runs the prediction/checker loop.
///
/// Iteration 0 estimates the model from the oracle's first sequence. Each
/// later iteration predicts a sequence as long as the oracle's next one
/// and, when the checker is due, scores it: an accepted prediction feeds its
/// predicted transitions (conditioning state to predicted state) to the
/// model online, a rejected one makes the model be re-estimated from scratch
/// on the oracle labels. Iterations the checker skips are treated as
/// accepted.
pub fn run_session<O: LabelOracle + ?Sized>(oracle: &mut O, config: &SessionConfig) -> Result<SessionReport> {
    config.validate()?;
    let states = config.states;
    let bootstrap = oracle
        .next_sequence()
        .ok_or_else(|| Error::invalid("oracle produced no bootstrap sequence"))?
        .widen(states)?;
    if bootstrap.is_empty() {
        return Err(Error::invalid("bootstrap sequence is empty"));
    }
    let mut model = TransitionModel::estimate(&bootstrap, config.policy);
    let mut anchor = bootstrap.last().unwrap();
    let mut schedule = CheckSchedule::new(config.thresholds.checker_interval);
    let mut records = Vec::new();
    let mut terminated_early = false;

    for iteration in 1..config.iterations {
        let Some(actual) = oracle.next_sequence() else {
            terminated_early = true;
            break;
        };
        let actual = actual.widen(states)?;
        if actual.is_empty() {
            return Err(Error::invalid(format!("oracle sequence {iteration} is empty")));
        }

        let candidates = config.candidates_at(iteration);
        let scheduled = schedule.due(iteration);
        let predicted = if candidates > 1 {
            best_candidate(&model, anchor, &actual, config, iteration, candidates)?
        } else {
            let mode = match config.mode {
                PredictionMode::Argmax => PredictionMode::Argmax,
                PredictionMode::Sampled { seed } => PredictionMode::Sampled {
                    seed: candidate_seed(seed, iteration, 0),
                },
            };
            predict_against(&model, anchor, &actual, mode, config.horizon)?
        };

        // picking a best candidate needs the oracle labels, so it is a check
        let check = if scheduled || candidates > 1 {
            Some(check_iteration(&predicted, actual.labels(), &config.thresholds, states)?)
        } else {
            None
        };

        let accepted_labels = match check.as_ref().map(|c| c.decision) {
            Some(Decision::ReplaceWithOracle) => {
                model = TransitionModel::estimate(&actual, config.policy);
                actual.labels().to_vec()
            }
            _ => {
                // feed back exactly the transitions that were predicted
                let sources = std::iter::once(anchor).chain(match config.horizon {
                    Horizon::OneStep => actual.labels()[..actual.len() - 1].to_vec(),
                    Horizon::FreeRunning => predicted[..predicted.len() - 1].to_vec(),
                });
                for (from, &to) in sources.zip(&predicted) {
                    model.update_online(from, to)?;
                }
                predicted.clone()
            }
        };
        anchor = match config.horizon {
            Horizon::OneStep => actual.last().unwrap(),
            Horizon::FreeRunning => *accepted_labels.last().unwrap(),
        };

        let evaluator = match config.window_k {
            Some(k) if k < accepted_labels.len() => {
                let basis = StateSequence::new(accepted_labels, states)?;
                let offset = basis.len() - k;
                let step = evaluator_step(&basis, k, offset, &model, &config.thresholds)?;
                let fallback = match step.outcome {
                    EvaluatorOutcome::FallbackPreviousWindow(m) => {
                        model = m;
                        true
                    }
                    EvaluatorOutcome::ProceedNextWindow => false,
                };
                Some(EvaluatorRecord {
                    window: k,
                    offset,
                    matrix_diff: step.matrix_diff,
                    rows_pass: step.row_diff.rows,
                    fallback,
                })
            }
            _ => None,
        };

        records.push(IterationRecord {
            iteration,
            predicted_id: format!("iter-{iteration}"),
            predicted,
            candidates,
            check,
            evaluator,
        });
    }

    Ok(SessionReport {
        bootstrap_length: bootstrap.len(),
        iterations: records,
        terminated_early,
        final_model: model,
    })
}

/// Best of several sampled candidates, ranked by (TPE, worst EPPS, index).
fn best_candidate(
    model: &TransitionModel,
    anchor: usize,
    actual: &StateSequence,
    config: &SessionConfig,
    iteration: usize,
    candidates: usize,
) -> Result<Vec<usize>> {
    let PredictionMode::Sampled { seed } = config.mode else {
        unreachable!("several candidates are only drawn in sampled mode")
    };
    let mut best: Option<((f64, f64), Vec<usize>)> = None;
    for c in 0..candidates {
        let mode = PredictionMode::Sampled {
            seed: candidate_seed(seed, iteration, c),
        };
        let labels = predict_against(model, anchor, actual, mode, config.horizon)?;
        let report = evaluate(&labels, actual.labels(), config.states)?;
        let score = (report.tpe, report.max_epps().unwrap_or(0.0));
        // strict comparison keeps the lowest candidate index on ties
        if best.as_ref().is_none_or(|(b, _)| score < *b) {
            best = Some((score, labels));
        }
    }
    Ok(best.expect("at least one candidate").1)
}
