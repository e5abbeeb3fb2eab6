use serde::{Deserialize, Serialize};

use super::sequence::{check_labels, StateSequence};
use crate::error::{Error, Result};

/// What a row with no observed outgoing transitions means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnseenRowPolicy {
    /// The row becomes the uniform distribution over all states.
    #[default]
    Uniform,
    /// The row stays unset and querying it is an error.
    #[serde(rename = "error")]
    ErrorOnQuery,
}

/// Square matrix of observed `i -> j` bigram counts, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionCounts {
    states: usize,
    cells: Vec<u64>,
}

impl TransitionCounts {
    pub fn zeros(states: usize) -> Self {
        Self {
            states,
            cells: vec![0; states * states],
        }
    }

    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self> {
        let states = rows.len();
        if states == 0 {
            return Err(Error::invalid("count matrix must have at least one row"));
        }
        let mut cells = Vec::with_capacity(states * states);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != states {
                return Err(Error::invalid(format!(
                    "count row {i} has {} entries, expected {states}",
                    row.len()
                )));
            }
            cells.extend_from_slice(row);
        }
        Ok(Self { states, cells })
    }

    pub fn from_flat(states: usize, cells: Vec<u64>) -> Result<Self> {
        if states == 0 || cells.len() != states * states {
            return Err(Error::invalid(format!(
                "{} count cells cannot form a {states}x{states} matrix",
                cells.len()
            )));
        }
        Ok(Self { states, cells })
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn get(&self, from: usize, to: usize) -> u64 {
        self.cells[from * self.states + to]
    }

    pub fn row(&self, from: usize) -> &[u64] {
        &self.cells[from * self.states..(from + 1) * self.states]
    }

    pub fn row_total(&self, from: usize) -> u64 {
        self.row(from).iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.cells.iter().sum()
    }

    pub fn as_flat(&self) -> &[u64] {
        &self.cells
    }

    pub fn to_rows(&self) -> Vec<Vec<u64>> {
        self.cells.chunks(self.states).map(<[u64]>::to_vec).collect()
    }

    fn increment(&mut self, from: usize, to: usize) {
        self.cells[from * self.states + to] += 1;
    }
}

/// Counts every adjacent `(labels[t], labels[t + 1])` pair.
pub fn count_transitions(labels: &[usize], states: usize) -> Result<TransitionCounts> {
    if states == 0 {
        return Err(Error::invalid("state count must be at least 1"));
    }
    check_labels(labels, states)?;
    let mut counts = TransitionCounts::zeros(states);
    for pair in labels.windows(2) {
        counts.increment(pair[0], pair[1]);
    }
    Ok(counts)
}

/// First-order speaker-state transition model: bigram counts plus the
/// row-stochastic maximum-likelihood probabilities derived from them.
///
/// Probabilities are always a function of the counts, so a model can be
/// rebuilt bit-for-bit from `(counts, policy)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionModel {
    counts: TransitionCounts,
    probs: Vec<f64>,
    policy: UnseenRowPolicy,
}

impl TransitionModel {
    /// Normalizes each count row into a probability row.
    pub fn from_counts(counts: TransitionCounts, policy: UnseenRowPolicy) -> Self {
        let s = counts.states();
        let mut probs = vec![0.0; s * s];
        for i in 0..s {
            normalize_row(counts.row(i), &mut probs[i * s..(i + 1) * s], policy);
        }
        Self {
            counts,
            probs,
            policy,
        }
    }

    /// Maximum-likelihood estimate from one label sequence.
    pub fn estimate(seq: &StateSequence, policy: UnseenRowPolicy) -> Self {
        // labels were validated against `states` when the sequence was built
        let counts = count_transitions(seq.labels(), seq.states())
            .expect("StateSequence labels are always in range");
        Self::from_counts(counts, policy)
    }

    /// Estimate from the window `offset .. offset + window` of `seq`.
    pub fn estimate_window(
        seq: &StateSequence,
        window: usize,
        offset: usize,
        policy: UnseenRowPolicy,
    ) -> Result<Self> {
        Ok(Self::estimate(&seq.window(offset, window)?, policy))
    }

    /// Builds a model directly from a row-stochastic probability matrix.
    ///
    /// The counts are left at zero; such a model is used as a generator or
    /// as ground truth, never updated online.
    pub fn from_probabilities(rows: &[Vec<f64>]) -> Result<Self> {
        let s = rows.len();
        if s == 0 {
            return Err(Error::invalid("probability matrix must have at least one row"));
        }
        let mut probs = Vec::with_capacity(s * s);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != s {
                return Err(Error::invalid(format!(
                    "probability row {i} has {} entries, expected {s}",
                    row.len()
                )));
            }
            if let Some(j) = row.iter().position(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::invalid(format!("probability [{i}][{j}] is not a valid probability")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::invalid(format!("probability row {i} sums to {sum}")));
            }
            probs.extend_from_slice(row);
        }
        Ok(Self {
            counts: TransitionCounts::zeros(s),
            probs,
            policy: UnseenRowPolicy::Uniform,
        })
    }

    pub fn states(&self) -> usize {
        self.counts.states()
    }

    pub fn counts(&self) -> &TransitionCounts {
        &self.counts
    }

    pub fn policy(&self) -> UnseenRowPolicy {
        self.policy
    }

    pub fn prob(&self, from: usize, to: usize) -> f64 {
        self.probs[from * self.states() + to]
    }

    /// Probability row for `from`, regardless of policy.
    pub fn row(&self, from: usize) -> &[f64] {
        let s = self.states();
        &self.probs[from * s..(from + 1) * s]
    }

    pub fn prob_rows(&self) -> Vec<Vec<f64>> {
        self.probs.chunks(self.states()).map(<[f64]>::to_vec).collect()
    }

    /// Whether row `from` carries a distribution that may be predicted from.
    pub fn is_row_defined(&self, from: usize) -> bool {
        self.policy == UnseenRowPolicy::Uniform
            || self.counts.row_total(from) > 0
            || self.row(from).iter().any(|&p| p > 0.0)
    }

    /// Row `from`, or an error if the policy forbids querying it.
    pub fn query_row(&self, from: usize) -> Result<&[f64]> {
        self.check_state(from)?;
        if self.is_row_defined(from) {
            Ok(self.row(from))
        } else {
            Err(Error::UnseenState(from))
        }
    }

    /// Records one more observed `from -> to` transition and renormalizes
    /// that row. Other rows are untouched.
    pub fn update_online(&mut self, from: usize, to: usize) -> Result<()> {
        self.check_state(from)?;
        self.check_state(to)?;
        self.counts.increment(from, to);
        let s = self.states();
        normalize_row(
            self.counts.row(from),
            &mut self.probs[from * s..(from + 1) * s],
            self.policy,
        );
        Ok(())
    }

    /// Applies [`update_online`](Self::update_online) for every adjacent pair.
    pub fn update_from_sequence(&mut self, labels: &[usize]) -> Result<()> {
        check_labels(labels, self.states())?;
        for pair in labels.windows(2) {
            self.update_online(pair[0], pair[1])?;
        }
        Ok(())
    }

    pub(crate) fn check_state(&self, state: usize) -> Result<()> {
        if state < self.states() {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "state {state} is outside 0..{}",
                self.states()
            )))
        }
    }
}

impl Serialize for TransitionModel {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = serializer.serialize_struct("TransitionModel", 4)?;
        st.serialize_field("states", &self.states())?;
        st.serialize_field("counts", &self.counts.to_rows())?;
        st.serialize_field("probs", &self.prob_rows())?;
        st.serialize_field("policy", &self.policy)?;
        st.end()
    }
}

fn normalize_row(counts: &[u64], out: &mut [f64], policy: UnseenRowPolicy) {
    let total: u64 = counts.iter().sum();
    if total > 0 {
        let total = total as f64;
        for (p, &c) in out.iter_mut().zip(counts) {
            *p = c as f64 / total;
        }
    } else {
        let fill = match policy {
            UnseenRowPolicy::Uniform => 1.0 / out.len() as f64,
            UnseenRowPolicy::ErrorOnQuery => 0.0,
        };
        out.fill(fill);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(labels: &[usize], s: usize) -> StateSequence {
        StateSequence::new(labels.to_vec(), s).unwrap()
    }

    #[test]
    fn counts_adjacent_pairs() {
        let c = count_transitions(&[0, 1, 0, 1], 2).unwrap();
        assert_eq!(c.to_rows(), vec![vec![0, 2], vec![1, 0]]);
        let c = count_transitions(&[0, 0, 0], 2).unwrap();
        assert_eq!(c.to_rows(), vec![vec![2, 0], vec![0, 0]]);
        let c = count_transitions(&[0], 3).unwrap();
        assert_eq!(c.total(), 0);
        assert_eq!(c.states(), 3);
    }

    #[test]
    fn out_of_range_label_names_index() {
        match count_transitions(&[0, 1, 2, 5], 3) {
            Err(Error::LabelOutOfRange { index, label, .. }) => {
                assert_eq!((index, label), (3, 5));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn normalizes_rows() {
        let m = TransitionModel::from_counts(
            TransitionCounts::from_rows(&[vec![0, 2], vec![1, 0]]).unwrap(),
            UnseenRowPolicy::Uniform,
        );
        assert_eq!(m.prob_rows(), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);

        let m = TransitionModel::from_counts(
            TransitionCounts::from_rows(&[vec![2, 0], vec![0, 0]]).unwrap(),
            UnseenRowPolicy::Uniform,
        );
        assert_eq!(m.prob_rows(), vec![vec![1.0, 0.0], vec![0.5, 0.5]]);

        let m = TransitionModel::from_counts(
            TransitionCounts::from_rows(&[vec![1, 1], vec![3, 1]]).unwrap(),
            UnseenRowPolicy::Uniform,
        );
        assert_eq!(m.prob_rows(), vec![vec![0.5, 0.5], vec![0.75, 0.25]]);
    }

    #[test]
    fn error_policy_defers_to_query() {
        let m = TransitionModel::from_counts(
            TransitionCounts::from_rows(&[vec![2, 0], vec![0, 0]]).unwrap(),
            UnseenRowPolicy::ErrorOnQuery,
        );
        assert!(m.query_row(0).is_ok());
        assert!(matches!(m.query_row(1), Err(Error::UnseenState(1))));
    }

    #[test]
    fn estimates_from_sequences() {
        let m = TransitionModel::estimate(&seq(&[0, 1, 0, 1, 0, 1], 2), UnseenRowPolicy::Uniform);
        assert_eq!(m.prob_rows(), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);

        let m = TransitionModel::estimate(&seq(&[0, 0, 1], 2), UnseenRowPolicy::Uniform);
        assert_eq!(m.counts().to_rows(), vec![vec![1, 1], vec![0, 0]]);
        assert_eq!(m.prob_rows(), vec![vec![0.5, 0.5], vec![0.5, 0.5]]);

        let m = TransitionModel::estimate(&seq(&[0, 1, 2, 0, 1, 2, 0], 3), UnseenRowPolicy::Uniform);
        assert_eq!(
            m.prob_rows(),
            vec![vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]]
        );
    }

    #[test]
    fn online_update_renormalizes_only_its_row() {
        let mut m = TransitionModel::from_counts(
            TransitionCounts::from_rows(&[vec![1, 0], vec![0, 0]]).unwrap(),
            UnseenRowPolicy::Uniform,
        );
        let before_row1 = m.row(1).to_vec();
        m.update_online(0, 1).unwrap();
        assert_eq!(m.counts().row(0), &[1, 1]);
        assert_eq!(m.row(0), &[0.5, 0.5]);
        assert_eq!(m.row(1), before_row1.as_slice());
        assert!(m.update_online(2, 0).is_err());
        assert!(m.update_online(0, 2).is_err());
    }

    #[test]
    fn windowed_estimate() {
        let s = seq(&[0, 1, 0, 1, 1, 1], 2);
        let w = TransitionModel::estimate_window(&s, 4, 0, UnseenRowPolicy::Uniform).unwrap();
        assert_eq!(w.counts().to_rows(), vec![vec![0, 2], vec![1, 0]]);
        assert_eq!(w.prob_rows(), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);

        let full = TransitionModel::estimate(&s, UnseenRowPolicy::Uniform);
        let whole = TransitionModel::estimate_window(&s, 6, 0, UnseenRowPolicy::Uniform).unwrap();
        assert_eq!(full, whole);

        assert!(matches!(
            TransitionModel::estimate_window(&s, 2, 7, UnseenRowPolicy::Uniform),
            Err(Error::WindowOutOfRange { .. })
        ));
    }

    #[test]
    fn rejects_non_stochastic_probabilities() {
        assert!(TransitionModel::from_probabilities(&[vec![0.5, 0.4], vec![0.5, 0.5]]).is_err());
        assert!(TransitionModel::from_probabilities(&[vec![1.5, -0.5], vec![0.5, 0.5]]).is_err());
        assert!(TransitionModel::from_probabilities(&[vec![1.0, 0.0]]).is_err());
    }
}
