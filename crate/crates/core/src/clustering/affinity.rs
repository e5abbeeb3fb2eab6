use serde::{Deserialize, Serialize};

use super::embeddings::EmbeddingSet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Refinement {
    GaussianBlur,
    RowThreshold,
    Symmetrize,
    Diffuse,
    RowNormalize,
}

/// Square pairwise-similarity matrix, row-major, with the refinements
/// applied to it so far.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    n: usize,
    data: Vec<f64>,
    stages: Vec<Refinement>,
}

impl AffinityMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::invalid(format!("row {i} has {} entries, expected {n}", row.len())));
            }
            if row.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid(format!("row {i} has a non-finite entry")));
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            n,
            data,
            stages: Vec::new(),
        })
    }

    /// `A[i][j] = (1 + cos(v_i, v_j)) / 2`, with ones on the diagonal.
    pub fn from_embeddings(embeddings: &EmbeddingSet) -> Result<Self> {
        let vectors = embeddings.vectors();
        let norms: Vec<f64> = vectors
            .iter()
            .map(|v| v.iter().map(|x| x * x).sum::<f64>())
            .collect();
        if let Some(i) = norms.iter().position(|&n| n == 0.0) {
            return Err(Error::invalid(format!("embedding {i} has zero norm")));
        }
        let n = vectors.len();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
            for j in i + 1..n {
                let dot: f64 = vectors[i].iter().zip(&vectors[j]).map(|(a, b)| a * b).sum();
                let cos = (dot / (norms[i] * norms[j]).sqrt()).clamp(-1.0, 1.0);
                let a = 0.5 * (1.0 + cos);
                data[i * n + j] = a;
                data[j * n + i] = a;
            }
        }
        Ok(Self {
            n,
            data,
            stages: Vec::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn stages(&self) -> &[Refinement] {
        &self.stages
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (i + 1..self.n).all(|j| self.get(i, j) == self.get(j, i)))
    }

    fn with(&self, data: Vec<f64>, stage: Refinement) -> Self {
        let mut stages = self.stages.clone();
        stages.push(stage);
        Self {
            n: self.n,
            data,
            stages,
        }
    }

    /// 2-D convolution with a Gaussian kernel truncated at radius
    /// `ceil(2 sigma)`. Near the borders the kernel is renormalized over
    /// the taps that fall inside the matrix.
    pub fn gaussian_blur(&self, sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::invalid("blur sigma must be positive"));
        }
        let radius = (2.0 * sigma).ceil() as isize;
        let kernel: Vec<f64> = (-radius..=radius)
            .map(|d| (-((d * d) as f64) / (2.0 * sigma * sigma)).exp())
            .collect();
        let n = self.n as isize;
        // in-bounds taps form a rectangle, so the 2-D normalization splits
        // into one per axis
        let pass = |src: &[f64], horizontal: bool| -> Vec<f64> {
            let mut out = vec![0.0; src.len()];
            for i in 0..n {
                for j in 0..n {
                    let (mut acc, mut weight) = (0.0, 0.0);
                    for (t, &g) in kernel.iter().enumerate() {
                        let d = t as isize - radius;
                        let (r, c) = if horizontal { (i, j + d) } else { (i + d, j) };
                        if (0..n).contains(&r) && (0..n).contains(&c) {
                            acc += g * src[(r * n + c) as usize];
                            weight += g;
                        }
                    }
                    out[(i * n + j) as usize] = acc / weight;
                }
            }
            out
        };
        let blurred = pass(&pass(&self.data, true), false);
        Ok(self.with(blurred, Refinement::GaussianBlur))
    }

    /// Per row, entries strictly below the row's `percentile`-th value are
    /// scaled by `soft_multiplier`. The percentile is the nearest-rank
    /// value of rank `floor(p n / 100) + 1` in ascending order.
    pub fn row_threshold(&self, percentile: f64, soft_multiplier: f64) -> Result<Self> {
        if !(percentile > 0.0 && percentile < 100.0) {
            return Err(Error::invalid(format!("percentile {percentile} is outside (0, 100)")));
        }
        let n = self.n;
        let rank = (((percentile * n as f64) / 100.0).floor() as usize + 1).min(n);
        let mut data = self.data.clone();
        for row in data.chunks_mut(n.max(1)) {
            let mut sorted = row.to_vec();
            sorted.sort_by(f64::total_cmp);
            let cut = sorted[rank - 1];
            for x in row.iter_mut() {
                if *x < cut {
                    *x *= soft_multiplier;
                }
            }
        }
        Ok(self.with(data, Refinement::RowThreshold))
    }

    /// `Y[i][j] = max(A[i][j], A[j][i])`.
    pub fn symmetrize(&self) -> Self {
        let n = self.n;
        let mut data = self.data.clone();
        for i in 0..n {
            for j in i + 1..n {
                let m = self.get(i, j).max(self.get(j, i));
                data[i * n + j] = m;
                data[j * n + i] = m;
            }
        }
        self.with(data, Refinement::Symmetrize)
    }

    /// `Y = A A^T`.
    pub fn diffuse(&self) -> Self {
        let n = self.n;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v: f64 = self.row(i).iter().zip(self.row(j)).map(|(a, b)| a * b).sum();
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        self.with(data, Refinement::Diffuse)
    }

    /// Divides each row by its maximum.
    pub fn row_normalize(&self) -> Result<Self> {
        let n = self.n;
        let mut data = self.data.clone();
        for (i, row) in data.chunks_mut(n.max(1)).enumerate() {
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if max.is_nan() || max <= 0.0 {
                return Err(Error::invalid(format!("row {i} has no positive entry")));
            }
            for x in row.iter_mut() {
                *x /= max;
            }
        }
        Ok(self.with(data, Refinement::RowNormalize))
    }

    /// `(A + A^T) / 2` as a flat row-major buffer.
    pub fn symmetric_part(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = self.data.clone();
        for i in 0..n {
            for j in i + 1..n {
                let m = 0.5 * (self.get(i, j) + self.get(j, i));
                out[i * n + j] = m;
                out[j * n + i] = m;
            }
        }
        out
    }
}
