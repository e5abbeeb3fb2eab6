use crate::error::{Error, Result};
use crate::markov::TimeSpan;

/// Fixed-dimension vectors, one per audio segment.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    vectors: Vec<Vec<f64>>,
    dim: usize,
    spans: Option<Vec<TimeSpan>>,
}

impl EmbeddingSet {
    pub fn new(vectors: Vec<Vec<f64>>) -> Result<Self> {
        let dim = vectors.first().map_or(0, Vec::len);
        if dim == 0 {
            return Err(Error::invalid("embeddings must be non-empty vectors"));
        }
        for (i, v) in vectors.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::invalid(format!(
                    "embedding {i} has dimension {}, expected {dim}",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid(format!("embedding {i} has a non-finite value")));
            }
        }
        Ok(Self {
            vectors,
            dim,
            spans: None,
        })
    }

    pub fn with_spans(vectors: Vec<Vec<f64>>, spans: Vec<TimeSpan>) -> Result<Self> {
        let mut set = Self::new(vectors)?;
        if spans.len() != set.vectors.len() {
            return Err(Error::invalid(format!(
                "{} time spans for {} embeddings",
                spans.len(),
                set.vectors.len()
            )));
        }
        set.spans = Some(spans);
        Ok(set)
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn spans(&self) -> Option<&[TimeSpan]> {
        self.spans.as_deref()
    }
}
