use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansConfig {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            max_iter: 100,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    /// Cluster ids in `0..k`, numbered by first occurrence.
    pub labels: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub iterations: usize,
    pub converged: bool,
    pub inertia: f64,
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = dist2(point, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn plus_plus_init(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(p, &points[chosen[0]])).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if w > 0.0 && target < acc {
                    pick = Some(i);
                    break;
                }
            }
            // rounding can leave target at the very end of the walk
            pick.unwrap_or_else(|| d2.iter().rposition(|&w| w > 0.0).expect("total > 0"))
        } else {
            (0..n).find(|i| !chosen.contains(i)).expect("k <= n")
        };
        chosen.push(next);
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(dist2(p, &points[next]));
        }
    }
    chosen.into_iter().map(|i| points[i].clone()).collect()
}

/// Renumbers ids so they appear in increasing order along the sequence.
pub fn canonicalize_labels(labels: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect()
}

/// Lloyd's algorithm from a seeded k-means++ start. A cluster that empties
/// is re-seeded at the point farthest from its current centroid.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64, config: KMeansConfig) -> Result<KMeansResult> {
    let n = points.len();
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if k > n {
        return Err(Error::invalid(format!("k = {k} exceeds the {n} points")));
    }
    let dim = points[0].len();
    if let Some(i) = points.iter().position(|p| p.len() != dim) {
        return Err(Error::invalid(format!("point {i} has dimension {}, expected {dim}", points[i].len())));
    }
    if points.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::invalid("points contain a non-finite value"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus_init(points, k, &mut rng);
    let mut assign = vec![0; n];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iter {
        iterations += 1;
        for (i, p) in points.iter().enumerate() {
            assign[i] = nearest(p, &centroids).0;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut sizes = vec![0usize; k];
        for (p, &c) in points.iter().zip(&assign) {
            sizes[c] += 1;
            for (s, x) in sums[c].iter_mut().zip(p) {
                *s += x;
            }
        }
        let mut taken = Vec::new();
        for c in 0..k {
            if sizes[c] == 0 {
                let far = (0..n)
                    .filter(|i| !taken.contains(i))
                    .map(|i| (i, dist2(&points[i], &centroids[assign[i]])))
                    .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
                    .0;
                taken.push(far);
                sums[c] = points[far].clone();
                sizes[c] = 1;
            }
        }
        let mut shift: f64 = 0.0;
        for c in 0..k {
            let updated: Vec<f64> = sums[c].iter().map(|s| s / sizes[c] as f64).collect();
            shift = shift.max(dist2(&updated, &centroids[c]).sqrt());
            centroids[c] = updated;
        }
        if shift < config.tol {
            converged = true;
            break;
        }
    }

    let mut inertia = 0.0;
    for (i, p) in points.iter().enumerate() {
        let (c, d) = nearest(p, &centroids);
        assign[i] = c;
        inertia += d;
    }
    let labels = canonicalize_labels(&assign);
    let mut ordered = vec![Vec::new(); k];
    let mut seen = vec![false; k];
    for (&raw, &canon) in assign.iter().zip(&labels) {
        if !seen[raw] {
            seen[raw] = true;
            ordered[canon] = centroids[raw].clone();
        }
    }
    let mut next = labels.iter().max().map_or(0, |m| m + 1);
    for (raw, centroid) in centroids.into_iter().enumerate() {
        if !seen[raw] {
            ordered[next] = centroid;
            next += 1;
        }
    }
    Ok(KMeansResult {
        labels,
        centroids: ordered,
        iterations,
        converged,
        inertia,
    })
}
