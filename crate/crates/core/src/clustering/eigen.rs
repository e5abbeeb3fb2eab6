use crate::error::{Error, Result};

pub const MAX_SWEEPS: usize = 100;
pub const OFF_DIAGONAL_TOL: f64 = 1e-10;

/// Eigenpairs of a symmetric matrix, sorted by descending eigenvalue.
/// `vectors[j]` is the unit eigenvector for `values[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub sweeps: usize,
}

fn off_diagonal_norm(a: &[f64], n: usize) -> f64 {
    let mut sum = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            sum += 2.0 * a[i * n + j] * a[i * n + j];
        }
    }
    sum.sqrt()
}

/// Cyclic Jacobi rotations on a row-major symmetric `n x n` buffer. Stops
/// once the off-diagonal Frobenius norm drops below `1e-10` times the
/// matrix norm.
pub fn symmetric_eigen(matrix: &[f64], n: usize) -> Result<SymmetricEigen> {
    if matrix.len() != n * n {
        return Err(Error::invalid(format!("{} entries for a {n}x{n} matrix", matrix.len())));
    }
    if matrix.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("matrix has a non-finite entry"));
    }
    for i in 0..n {
        for j in i + 1..n {
            if matrix[i * n + j] != matrix[j * n + i] {
                return Err(Error::invalid(format!("matrix is not symmetric at ({i}, {j})")));
            }
        }
    }

    let mut a = matrix.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let target = OFF_DIAGONAL_TOL * scale.max(f64::MIN_POSITIVE);

    let mut sweeps = 0;
    let mut off = off_diagonal_norm(&a, n);
    while off > target {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NonConvergence {
                what: "jacobi eigendecomposition",
                residual: off / scale,
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
        off = off_diagonal_norm(&a, n);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]).then(i.cmp(&j)));
    Ok(SymmetricEigen {
        values: order.iter().map(|&i| a[i * n + i]).collect(),
        vectors: order
            .iter()
            .map(|&j| (0..n).map(|k| v[k * n + j]).collect())
            .collect(),
        sweeps,
    })
}

pub const EIGEN_GAP_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenGap {
    pub k: usize,
    /// `ratios[i - 1] = lambda_i / max(lambda_{i+1}, eps)`.
    pub ratios: Vec<f64>,
    /// No eigenvalue drops below its predecessor, so the spectrum carries
    /// no cluster-count signal and `k` falls back to 1.
    pub degenerate: bool,
}

/// Picks `k` in `1..max_k` maximizing the ratio of consecutive eigenvalues
/// (descending order). Ties go to the smaller `k`.
pub fn eigen_gap_from_values(values: &[f64], max_k: usize) -> EigenGap {
    let limit = max_k.min(values.len());
    let ratios: Vec<f64> = (1..limit)
        .map(|i| values[i - 1] / values[i].max(EIGEN_GAP_EPS))
        .collect();
    let mut k = 1;
    for (i, &r) in ratios.iter().enumerate() {
        if r > ratios[k - 1] {
            k = i + 1;
        }
    }
    let degenerate = ratios.iter().all(|&r| r <= 1.0 + 1e-9);
    if degenerate {
        k = 1;
    }
    EigenGap { k, ratios, degenerate }
}

pub fn eigen_gap_k(matrix: &[f64], n: usize, max_k: usize) -> Result<EigenGap> {
    let eig = symmetric_eigen(matrix, n)?;
    Ok(eigen_gap_from_values(&eig.values, max_k))
}
