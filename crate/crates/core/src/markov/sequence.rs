use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Start and end of the audio span a label was recognized in, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeSpan {
    pub start_s: f64,
    pub end_s: f64,
}

/// An ordered run of speaker-state labels drawn from `0..states`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSequence {
    labels: Vec<usize>,
    states: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    times: Option<Vec<TimeSpan>>,
}

impl StateSequence {
    pub fn new(labels: Vec<usize>, states: usize) -> Result<Self> {
        if states == 0 {
            return Err(Error::invalid("state count must be at least 1"));
        }
        check_labels(&labels, states)?;
        Ok(Self {
            labels,
            states,
            times: None,
        })
    }

    /// Builds a sequence whose state count is one past the largest label.
    pub fn infer_states(labels: Vec<usize>) -> Result<Self> {
        let states = labels.iter().max().map_or(1, |m| m + 1);
        Self::new(labels, states)
    }

    pub fn with_times(labels: Vec<usize>, states: usize, times: Vec<TimeSpan>) -> Result<Self> {
        let mut seq = Self::new(labels, states)?;
        if times.len() != seq.labels.len() {
            return Err(Error::invalid(format!(
                "{} time spans given for {} labels",
                times.len(),
                seq.labels.len()
            )));
        }
        let mut prev_end = f64::NEG_INFINITY;
        for (i, span) in times.iter().enumerate() {
            if !span.start_s.is_finite() || !span.end_s.is_finite() || span.end_s < span.start_s {
                return Err(Error::invalid(format!("time span {i} is malformed")));
            }
            if span.start_s < prev_end {
                return Err(Error::invalid(format!(
                    "time span {i} starts before the previous one ends"
                )));
            }
            prev_end = span.end_s;
        }
        seq.times = Some(times);
        Ok(seq)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn times(&self) -> Option<&[TimeSpan]> {
        self.times.as_deref()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn first(&self) -> Option<usize> {
        self.labels.first().copied()
    }

    pub fn last(&self) -> Option<usize> {
        self.labels.last().copied()
    }

    /// Same labels viewed over a larger state alphabet.
    pub fn widen(mut self, states: usize) -> Result<Self> {
        if states < self.states {
            check_labels(&self.labels, states)?;
        }
        if states == 0 {
            return Err(Error::invalid("state count must be at least 1"));
        }
        self.states = states;
        Ok(self)
    }

    /// Labels `offset .. offset + len` as a new sequence over the same states.
    pub fn window(&self, offset: usize, len: usize) -> Result<Self> {
        let end = offset
            .checked_add(len)
            .filter(|&end| end <= self.labels.len() && len >= 1)
            .ok_or(Error::WindowOutOfRange {
                offset,
                window: len,
                len: self.labels.len(),
            })?;
        Ok(Self {
            labels: self.labels[offset..end].to_vec(),
            states: self.states,
            times: self.times.as_ref().map(|t| t[offset..end].to_vec()),
        })
    }

    /// Number of occurrences of each state, indexed by state.
    pub fn occurrences(&self) -> Vec<usize> {
        let mut occ = vec![0; self.states];
        for &l in &self.labels {
            occ[l] += 1;
        }
        occ
    }
}

pub(crate) fn check_labels(labels: &[usize], states: usize) -> Result<()> {
    match labels.iter().position(|&l| l >= states) {
        Some(index) => Err(Error::LabelOutOfRange {
            index,
            label: labels[index],
            states,
        }),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_label_outside_alphabet() {
        let err = StateSequence::new(vec![0, 1, 3], 3).unwrap_err();
        assert!(matches!(err, Error::LabelOutOfRange { index: 2, label: 3, .. }));
    }

    #[test]
    fn infers_state_count() {
        let seq = StateSequence::infer_states(vec![2, 0, 1]).unwrap();
        assert_eq!(seq.states(), 3);
    }

    #[test]
    fn time_spans_must_be_ordered() {
        let spans = vec![
            TimeSpan { start_s: 0.0, end_s: 0.4 },
            TimeSpan { start_s: 0.3, end_s: 0.8 },
        ];
        assert!(StateSequence::with_times(vec![0, 1], 2, spans).is_err());
        let spans = vec![
            TimeSpan { start_s: 0.0, end_s: 0.4 },
            TimeSpan { start_s: 0.4, end_s: 0.8 },
        ];
        assert!(StateSequence::with_times(vec![0, 1], 2, spans).is_ok());
    }

    #[test]
    fn window_bounds() {
        let seq = StateSequence::new(vec![0, 1, 0, 1], 2).unwrap();
        assert_eq!(seq.window(1, 3).unwrap().labels(), &[1, 0, 1]);
        assert!(seq.window(2, 3).is_err());
        assert!(seq.window(5, 1).is_err());
        assert!(seq.window(0, 0).is_err());
    }
}
