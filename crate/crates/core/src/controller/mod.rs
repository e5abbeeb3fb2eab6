//! The checker loop and the window drift evaluator.

mod check;
mod session;

pub use check::{
    check_iteration, decide, evaluator_step, matrix_diff, row_diff_check, CheckDecision,
    CheckerInterval, Decision, EvaluatorOutcome, EvaluatorStep, MatrixDiff, RowDiff, Thresholds,
};
pub use session::{
    run_session, EvaluatorRecord, Horizon, IterationRecord, LabelOracle, SequenceOracle,
    SessionConfig, SessionReport,
};
