use super::model::TransitionModel;
use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 200_000;
const TOLERANCE: f64 = 1e-13;

/// Long-run state frequencies of a chain.
#[derive(Debug, Clone, PartialEq)]
pub struct Stationary {
    pub distribution: Vec<f64>,
    /// False when the chain has more than one closed class; the
    /// distribution is then the uniform vector.
    pub unique: bool,
    pub iterations: usize,
}

impl TransitionModel {
    /// Stationary distribution by power iteration on the lazy chain
    /// `(I + P) / 2`, which shares its fixed points with `P` but is aperiodic.
    pub fn stationary_distribution(&self) -> Result<Stationary> {
        let s = self.states();
        for i in 0..s {
            let sum: f64 = self.row(i).iter().sum();
            if !self.is_row_defined(i) || (sum - 1.0).abs() > 1e-9 {
                return Err(Error::invalid(format!(
                    "row {i} is not a probability distribution"
                )));
            }
        }

        if closed_classes(self) > 1 {
            return Ok(Stationary {
                distribution: vec![1.0 / s as f64; s],
                unique: false,
                iterations: 0,
            });
        }

        let mut pi = vec![1.0 / s as f64; s];
        let mut next = vec![0.0; s];
        let mut residual = f64::INFINITY;
        for iteration in 1..=MAX_ITERATIONS {
            step(self, &pi, &mut next);
            // next currently holds pi * P
            residual = pi.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
            for (n, p) in next.iter_mut().zip(&pi) {
                *n = 0.5 * (*n + p);
            }
            let total: f64 = next.iter().sum();
            for n in next.iter_mut() {
                *n /= total;
            }
            std::mem::swap(&mut pi, &mut next);
            if residual < TOLERANCE {
                return Ok(Stationary {
                    distribution: pi,
                    unique: true,
                    iterations: iteration,
                });
            }
        }
        Err(Error::NonConvergence {
            what: "stationary distribution power iteration",
            residual,
        })
    }
}

fn step(model: &TransitionModel, pi: &[f64], out: &mut [f64]) {
    out.fill(0.0);
    for (i, &mass) in pi.iter().enumerate() {
        for (o, &p) in out.iter_mut().zip(model.row(i)) {
            *o += mass * p;
        }
    }
}

/// Number of closed communicating classes in the transition graph.
fn closed_classes(model: &TransitionModel) -> usize {
    let s = model.states();
    let mut reach = vec![false; s * s];
    for i in 0..s {
        reach[i * s + i] = true;
        for j in 0..s {
            if model.prob(i, j) > 0.0 {
                reach[i * s + j] = true;
            }
        }
    }
    for k in 0..s {
        for i in 0..s {
            if reach[i * s + k] {
                for j in 0..s {
                    if reach[k * s + j] {
                        reach[i * s + j] = true;
                    }
                }
            }
        }
    }
    // a state is recurrent iff everything it reaches reaches it back
    let recurrent: Vec<bool> = (0..s)
        .map(|i| (0..s).all(|j| !reach[i * s + j] || reach[j * s + i]))
        .collect();
    let mut seen = vec![false; s];
    let mut classes = 0;
    for i in 0..s {
        if recurrent[i] && !seen[i] {
            classes += 1;
            for j in 0..s {
                if reach[i * s + j] {
                    seen[j] = true;
                }
            }
        }
    }
    classes
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(rows: &[Vec<f64>]) -> TransitionModel {
        TransitionModel::from_probabilities(rows).unwrap()
    }

    #[test]
    fn periodic_two_cycle() {
        let st = model(&[vec![0.0, 1.0], vec![1.0, 0.0]])
            .stationary_distribution()
            .unwrap();
        assert!(st.unique);
        assert!((st.distribution[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn identity_is_not_unique() {
        let st = model(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]])
            .stationary_distribution()
            .unwrap();
        assert!(!st.unique);
        assert_eq!(st.distribution, vec![1.0 / 3.0; 3]);
    }

    #[test]
    fn doubly_stochastic() {
        let st = model(&[vec![0.5, 0.5], vec![0.5, 0.5]])
            .stationary_distribution()
            .unwrap();
        assert!((st.distribution[0] - 0.5).abs() < 1e-12);
        assert!((st.distribution[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn two_state_closed_form() {
        // pi_0 = b / (a + b) for P = [[1-a, a], [b, 1-b]]
        let (a, b) = (0.3, 0.1);
        let st = model(&[vec![1.0 - a, a], vec![b, 1.0 - b]])
            .stationary_distribution()
            .unwrap();
        assert!((st.distribution[0] - b / (a + b)).abs() < 1e-10);
    }

    #[test]
    fn transient_states_get_no_mass() {
        let st = model(&[vec![0.5, 0.5, 0.0], vec![0.0, 0.2, 0.8], vec![0.0, 0.6, 0.4]])
            .stationary_distribution()
            .unwrap();
        assert!(st.unique);
        assert!(st.distribution[0] < 1e-10);
        let m = model(&[vec![0.5, 0.5, 0.0], vec![0.0, 0.2, 0.8], vec![0.0, 0.6, 0.4]]);
        for j in 0..3 {
            let pj: f64 = (0..3).map(|i| st.distribution[i] * m.prob(i, j)).sum();
            assert!((pj - st.distribution[j]).abs() < 1e-8);
        }
    }
}
