use convstate::controller::{
    check_iteration, evaluator_step, matrix_diff, row_diff_check, run_session, CheckerInterval, Decision,
    EvaluatorOutcome, Horizon, SequenceOracle, SessionConfig, Thresholds,
};
use convstate::harness::synthetic::ChainOracle;
use convstate::markov::{PredictionMode, StateSequence, TransitionModel, UnseenRowPolicy};
use convstate::metrics::EvaluationReport;
use convstate::controller::decide;

fn chain(rows: &[&[f64]]) -> TransitionModel {
    TransitionModel::from_probabilities(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
}

fn cycle() -> TransitionModel {
    chain(&[&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0]])
}

fn reverse_cycle() -> TransitionModel {
    chain(&[&[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]])
}

#[test]
fn published_table_decisions() {
    let rows: [(f64, [f64; 3]); 7] = [
        (9.58, [8.57, 7.14, 20.0]),
        (7.27, [0.0, 11.54, 25.0]),
        (11.11, [0.0, 25.0, 12.5]),
        (2.79, [3.49, 1.09, 4.11]),
        (3.67, [0.0, 10.0, 6.0]),
        (12.0, [33.33, 0.0, 10.0]),
        (7.69, [11.11, 0.0, 13.64]),
    ];
    let t = Thresholds::default();
    for (file, (tpe, epps)) in rows.iter().enumerate() {
        let r = EvaluationReport::from_percentages(*tpe, epps.iter().copied().enumerate()).unwrap();
        let expected = if file == 5 { Decision::ReplaceWithOracle } else { Decision::Accept };
        assert_eq!(decide(&r, &t), expected, "file {}", file + 1);
    }
    let r = EvaluationReport::from_percentages(25.0, [(0, 0.0), (1, 0.0)]).unwrap();
    assert_eq!(decide(&r, &t), Decision::ReplaceWithOracle);
}

#[test]
fn boundaries_are_strict() {
    let t = Thresholds::default();
    let at = EvaluationReport::from_percentages(20.0, [(0, 0.0)]).unwrap();
    assert_eq!(decide(&at, &t), Decision::ReplaceWithOracle);
    let at = EvaluationReport::from_percentages(0.0, [(0, 30.0)]).unwrap();
    assert_eq!(decide(&at, &t), Decision::ReplaceWithOracle);
}

#[test]
fn difference_thresholds() {
    let a = chain(&[&[1.0, 0.0], &[0.5, 0.5]]);
    let b = chain(&[&[0.8, 0.2], &[0.5, 0.5]]);
    let d = matrix_diff(&a, &b, 0.15).unwrap();
    assert!((d.max_abs - 0.2).abs() < 1e-12 && !d.pass);
    let a = chain(&[&[0.6, 0.4], &[0.5, 0.5]]);
    let b = chain(&[&[0.5, 0.5], &[0.5, 0.5]]);
    let d = matrix_diff(&a, &b, 0.15).unwrap();
    assert!((d.max_abs - 0.1).abs() < 1e-12 && d.pass);
    assert_eq!(matrix_diff(&a, &a, 0.15).unwrap().max_abs, 0.0);

    assert_eq!(row_diff_check(&chain(&[&[0.5, 0.5], &[1.0, 0.0]])).rows, vec![false, true]);
    let r = row_diff_check(&chain(&[&[0.7, 0.2, 0.1], &[0.7, 0.2, 0.1], &[0.7, 0.2, 0.1]]));
    assert!(r.all_pass);
}

#[test]
fn evaluator_cases() {
    let t = Thresholds::default();
    let alt = StateSequence::new([0, 1].repeat(20), 2).unwrap();
    let full = TransitionModel::estimate(&alt, UnseenRowPolicy::Uniform);
    let step = evaluator_step(&alt, 8, 32, &full, &t).unwrap();
    assert_eq!(step.outcome, EvaluatorOutcome::ProceedNextWindow);

    let mut l = [0, 1].repeat(10);
    l.extend([0; 8]);
    let drift = StateSequence::new(l, 2).unwrap();
    let full = TransitionModel::estimate(&drift, UnseenRowPolicy::Uniform);
    let step = evaluator_step(&drift, 8, 20, &full, &t).unwrap();
    assert!(!step.matrix_diff.pass);
    let expected = TransitionModel::estimate_window(&drift, 8, 12, UnseenRowPolicy::Uniform).unwrap();
    assert_eq!(step.outcome, EvaluatorOutcome::FallbackPreviousWindow(expected));

    let step = evaluator_step(&drift, 8, 0, &chain(&[&[1.0, 0.0], &[1.0, 0.0]]), &t).unwrap();
    let expected = TransitionModel::estimate_window(&drift, 8, 0, UnseenRowPolicy::Uniform).unwrap();
    assert_eq!(step.outcome, EvaluatorOutcome::FallbackPreviousWindow(expected));
    assert!(evaluator_step(&drift, drift.len(), 0, &full, &t).is_err());
}

#[test]
fn cycle_session_is_exact() {
    let mut oracle = ChainOracle::new(cycle(), 30, 0, 1).unwrap();
    let config = SessionConfig {
        states: 3,
        iterations: 5,
        ..SessionConfig::default()
    };
    let report = run_session(&mut oracle, &config).unwrap();
    assert_eq!(report.iterations.len(), 4);
    for (_, c) in report.checked() {
        assert_eq!(c.decision, Decision::Accept);
        assert_eq!(c.report.tpe, 0.0);
    }
}

#[test]
fn switched_chain_triggers_replacement() {
    for horizon in [Horizon::OneStep, Horizon::FreeRunning] {
        let mut oracle = ChainOracle::new(cycle(), 30, 0, 1).unwrap().switch_at(3, reverse_cycle()).unwrap();
        let config = SessionConfig {
            states: 3,
            iterations: 6,
            horizon,
            ..SessionConfig::default()
        };
        let report = run_session(&mut oracle, &config).unwrap();
        let decisions: Vec<Decision> = report.checked().map(|(_, c)| c.decision).collect();
        assert!(decisions[..2].iter().all(|d| *d == Decision::Accept));
        assert!(decisions[2..].contains(&Decision::ReplaceWithOracle), "{horizon:?}: {decisions:?}");
    }
}

#[test]
fn fixed_interval_checks_even_iterations() {
    let mut oracle = ChainOracle::new(cycle(), 10, 0, 1).unwrap();
    let mut config = SessionConfig {
        states: 3,
        iterations: 7,
        ..SessionConfig::default()
    };
    config.thresholds.checker_interval = CheckerInterval::FixedEvery { every: 2 };
    let report = run_session(&mut oracle, &config).unwrap();
    for r in &report.iterations {
        assert_eq!(r.check.is_some(), r.iteration % 2 == 0, "iteration {}", r.iteration);
    }
}

#[test]
fn replay_oracle_runs_out() {
    let seqs = vec![
        StateSequence::new(vec![0, 1, 0, 1], 2).unwrap(),
        StateSequence::new(vec![0, 1], 2).unwrap(),
    ];
    let config = SessionConfig {
        states: 2,
        iterations: 5,
        ..SessionConfig::default()
    };
    let report = run_session(&mut SequenceOracle::new(seqs), &config).unwrap();
    assert!(report.terminated_early);
    assert_eq!(report.iterations.len(), 1);
}

#[test]
fn sampled_sessions_repeat_per_seed() {
    let noisy = chain(&[&[0.8, 0.1, 0.1], &[0.1, 0.8, 0.1], &[0.1, 0.1, 0.8]]);
    let config = SessionConfig {
        states: 3,
        iterations: 5,
        mode: PredictionMode::Sampled { seed: 4 },
        window_k: Some(20),
        ..SessionConfig::default()
    };
    let run = || {
        let mut oracle = ChainOracle::new(noisy.clone(), 100, 0, 8).unwrap();
        serde_json::to_string(&run_session(&mut oracle, &config).unwrap()).unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn check_iteration_scores_labels() {
    let c = check_iteration(&[0, 1, 1, 1, 2, 0], &[0, 0, 1, 1, 2, 2], &Thresholds::default(), 3).unwrap();
    assert_eq!(c.decision, Decision::ReplaceWithOracle);
}
