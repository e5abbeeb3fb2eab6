use serde::{Deserialize, Serialize};

use super::affinity::{AffinityMatrix, Refinement};
use super::eigen::{eigen_gap_from_values, symmetric_eigen};
use super::embeddings::EmbeddingSet;
use super::kmeans::{kmeans, KMeansConfig};
use crate::error::{Error, Result};
use crate::markov::StateSequence;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectralConfig {
    /// `None` skips the blur. Blurring mixes entries of neighbouring
    /// segment indices, so it assumes segments are in time order.
    pub blur_sigma: Option<f64>,
    pub percentile: f64,
    pub soft_multiplier: f64,
    pub max_k: usize,
    /// Fixed cluster count; chosen by eigengap when absent.
    pub k: Option<usize>,
    pub seed: u64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            blur_sigma: Some(1.0),
            percentile: 80.0,
            soft_multiplier: 0.01,
            max_k: 8,
            k: None,
            seed: 0,
            max_iter: 100,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralResult {
    pub labels: StateSequence,
    pub k: usize,
    pub eigenvalues: Vec<f64>,
    /// Set when `k` came from a flat spectrum.
    pub degenerate: bool,
    pub stages: Vec<Refinement>,
}

/// Runs the refinement chain on the embeddings' affinity matrix and
/// returns the refined matrix.
pub fn refine(embeddings: &EmbeddingSet, config: &SpectralConfig) -> Result<AffinityMatrix> {
    let affinity = AffinityMatrix::from_embeddings(embeddings)?;
    let blurred = match config.blur_sigma {
        Some(sigma) => affinity.gaussian_blur(sigma)?,
        None => affinity,
    };
    blurred
        .row_threshold(config.percentile, config.soft_multiplier)?
        .symmetrize()
        .diffuse()
        .row_normalize()
}

pub fn spectral_cluster(embeddings: &EmbeddingSet, config: &SpectralConfig) -> Result<SpectralResult> {
    let n = embeddings.len();
    if n < 2 {
        return Err(Error::invalid(format!("clustering needs at least 2 embeddings, got {n}")));
    }
    if config.max_k < 1 {
        return Err(Error::invalid("max_k must be at least 1"));
    }
    let refined = refine(embeddings, config)?;
    // row normalization breaks exact symmetry; the eigensolver sees the
    // symmetric part
    let eig = symmetric_eigen(&refined.symmetric_part(), n)?;
    let (k, degenerate) = match config.k {
        Some(k) => {
            if k == 0 || k > n {
                return Err(Error::invalid(format!("k = {k} is outside 1..={n}")));
            }
            (k, false)
        }
        None => {
            let gap = eigen_gap_from_values(&eig.values, config.max_k);
            (gap.k, gap.degenerate)
        }
    };
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| eig.vectors[..k].iter().map(|v| v[i]).collect())
        .collect();
    let km = kmeans(
        &rows,
        k,
        config.seed,
        KMeansConfig {
            max_iter: config.max_iter,
            tol: config.tol,
        },
    )?;
    let labels = match embeddings.spans() {
        Some(spans) => StateSequence::with_times(km.labels, k, spans.to_vec())?,
        None => StateSequence::new(km.labels, k)?,
    };
    Ok(SpectralResult {
        labels,
        k,
        eigenvalues: eig.values,
        degenerate,
        stages: refined.stages().to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_embeddings_form_one_state() {
        let e = EmbeddingSet::new(vec![vec![0.3, -1.0, 2.0]; 10]).unwrap();
        let r = spectral_cluster(&e, &SpectralConfig::default()).unwrap();
        assert_eq!(r.k, 1);
        assert_eq!(r.labels.labels(), &[0; 10]);
        assert_eq!(r.labels.states(), 1);
        assert_eq!(
            r.stages,
            vec![
                Refinement::GaussianBlur,
                Refinement::RowThreshold,
                Refinement::Symmetrize,
                Refinement::Diffuse,
                Refinement::RowNormalize
            ]
        );
    }

    #[test]
    fn needs_two_embeddings() {
        let e = EmbeddingSet::new(vec![vec![1.0]]).unwrap();
        assert!(spectral_cluster(&e, &SpectralConfig::default()).is_err());
    }

    #[test]
    fn forced_k_is_used() {
        let mut v = vec![vec![1.0, 0.0]; 5];
        v.extend(vec![vec![0.0, 1.0]; 5]);
        let e = EmbeddingSet::new(v).unwrap();
        let config = SpectralConfig {
            k: Some(2),
            ..SpectralConfig::default()
        };
        let r = spectral_cluster(&e, &config).unwrap();
        assert_eq!(r.labels.labels(), &[0, 0, 0, 0, 0, 1, 1, 1, 1, 1]);
    }
}
