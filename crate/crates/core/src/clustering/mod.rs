//! Spectral clustering of segment embeddings into speaker-state labels.

mod affinity;
mod eigen;
mod embeddings;
mod kmeans;
mod spectral;

pub use affinity::{AffinityMatrix, Refinement};
pub use eigen::{
    eigen_gap_from_values, eigen_gap_k, symmetric_eigen, EigenGap, SymmetricEigen, EIGEN_GAP_EPS,
    MAX_SWEEPS, OFF_DIAGONAL_TOL,
};
pub use embeddings::EmbeddingSet;
pub use kmeans::{canonicalize_labels, kmeans, KMeansConfig, KMeansResult};
pub use spectral::{refine, spectral_cluster, SpectralConfig, SpectralResult};
