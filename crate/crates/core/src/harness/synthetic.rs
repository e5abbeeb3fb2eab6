//! Seeded generators for sequences, embeddings and audio with known truth.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::clustering::EmbeddingSet;
use crate::controller::LabelOracle;
use crate::error::{Error, Result};
use crate::frontend::{AudioBuffer, FrameLayout, FrontendConfig};
use crate::markov::{StateSequence, TransitionModel};

/// Samples `length` states from `chain`, starting at `initial`.
pub fn generate_synthetic_sequence(
    chain: &TransitionModel,
    length: usize,
    initial: usize,
    seed: u64,
) -> Result<StateSequence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = walk(chain, initial, length, &mut rng)?;
    StateSequence::new(labels, chain.states())
}

fn walk(chain: &TransitionModel, initial: usize, length: usize, rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
    let mut labels = Vec::with_capacity(length);
    if length == 0 {
        chain.check_state(initial)?;
        return Ok(labels);
    }
    labels.push(initial);
    let mut current = initial;
    for _ in 1..length {
        current = chain.sample_next(current, rng)?;
        labels.push(current);
    }
    Ok(labels)
}

/// `clusters * per_cluster` points in `dim` dimensions. Cluster `c` is
/// centred at `e_c * separation / sqrt(2)`, so every pair of means is
/// `separation` apart. Truth labels are `[0; per_cluster] ++ [1; ...]`.
pub fn generate_synthetic_embeddings(
    clusters: usize,
    per_cluster: usize,
    dim: usize,
    separation: f64,
    noise_sigma: f64,
    seed: u64,
) -> Result<(EmbeddingSet, Vec<usize>)> {
    if clusters == 0 || per_cluster == 0 {
        return Err(Error::invalid("need at least one cluster with one point"));
    }
    if dim < clusters {
        return Err(Error::invalid(format!("dimension {dim} is below the cluster count {clusters}")));
    }
    if !(separation.is_finite() && separation > 0.0) {
        return Err(Error::invalid("separation must be positive"));
    }
    if !(noise_sigma.is_finite() && noise_sigma >= 0.0) {
        return Err(Error::invalid("noise sigma must be non-negative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, noise_sigma).expect("sigma validated");
    let offset = separation / 2f64.sqrt();
    let mut vectors = Vec::with_capacity(clusters * per_cluster);
    let mut truth = Vec::with_capacity(clusters * per_cluster);
    for c in 0..clusters {
        for _ in 0..per_cluster {
            let v: Vec<f64> = (0..dim)
                .map(|d| {
                    let mean = if d == c { offset } else { 0.0 };
                    mean + noise.sample(&mut rng)
                })
                .collect();
            vectors.push(v);
            truth.push(c);
        }
    }
    Ok((EmbeddingSet::new(vectors)?, truth))
}

/// Oracle that keeps walking a Markov chain, handing out `length` labels
/// per call. Each sequence continues from the last state of the previous
/// one. A later chain can take over from a given call index on.
#[derive(Debug, Clone)]
pub struct ChainOracle {
    chains: Vec<(usize, TransitionModel)>,
    length: usize,
    state: usize,
    calls: usize,
    limit: Option<usize>,
    rng: ChaCha8Rng,
}

impl ChainOracle {
    pub fn new(chain: TransitionModel, length: usize, initial: usize, seed: u64) -> Result<Self> {
        if length == 0 {
            return Err(Error::invalid("oracle sequence length must be at least 1"));
        }
        chain.check_state(initial)?;
        Ok(Self {
            chains: vec![(0, chain)],
            length,
            state: initial,
            calls: 0,
            limit: None,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    /// Uses `chain` for call `from_call` (0 is the bootstrap) onwards.
    pub fn switch_at(mut self, from_call: usize, chain: TransitionModel) -> Result<Self> {
        if chain.states() != self.chains[0].1.states() {
            return Err(Error::invalid("switched chain has a different state count"));
        }
        self.chains.push((from_call, chain));
        self.chains.sort_by_key(|(from, _)| *from);
        Ok(self)
    }

    /// Stops after `calls` sequences.
    pub fn limit(mut self, calls: usize) -> Self {
        self.limit = Some(calls);
        self
    }

    fn chain_for(&self, call: usize) -> &TransitionModel {
        &self
            .chains
            .iter()
            .rev()
            .find(|(from, _)| *from <= call)
            .expect("first chain starts at call 0")
            .1
    }

    fn generate(&mut self) -> Result<StateSequence> {
        let chain = self.chain_for(self.calls).clone();
        let labels = if self.calls == 0 {
            walk(&chain, self.state, self.length, &mut self.rng)?
        } else {
            let mut w = walk(&chain, self.state, self.length + 1, &mut self.rng)?;
            w.remove(0);
            w
        };
        self.state = *labels.last().expect("length >= 1");
        self.calls += 1;
        StateSequence::new(labels, chain.states())
    }
}

impl LabelOracle for ChainOracle {
    fn next_sequence(&mut self) -> Option<StateSequence> {
        if self.limit.is_some_and(|l| self.calls >= l) {
            return None;
        }
        // chains and states were validated on construction
        Some(self.generate().expect("oracle chain is valid"))
    }
}

/// Alternating tone and near-silence segments of `segment_s` seconds each.
/// Tones have a random frequency in 150..1500 Hz and amplitude in
/// 0.2..0.8; silence is Gaussian noise with sigma 1e-4.
///
/// Returns one label per frame of the default frame layout: `Some(true)`
/// for frames inside a tone, `Some(false)` inside silence, `None` for
/// frames straddling a boundary.
pub fn tone_silence_corpus(
    sample_rate: u32,
    segments: usize,
    segment_s: f64,
    seed: u64,
) -> (AudioBuffer, Vec<Option<bool>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hiss = Normal::new(0.0, 1e-4).expect("constant sigma");
    let seg_len = (segment_s * sample_rate as f64).round() as usize;
    let first_is_tone = rng.random::<bool>();
    let mut samples = Vec::with_capacity(seg_len * segments);
    let mut is_tone = Vec::with_capacity(segments);
    for s in 0..segments {
        let tone = (s % 2 == 0) == first_is_tone;
        is_tone.push(tone);
        if tone {
            let freq = rng.random_range(150.0..1500.0);
            let amp = rng.random_range(0.2..0.8);
            let phase = rng.random_range(0.0..2.0 * PI);
            samples.extend(
                (0..seg_len).map(|n| amp * (2.0 * PI * freq * n as f64 / sample_rate as f64 + phase).sin()),
            );
        } else {
            samples.extend((0..seg_len).map(|_| hiss.sample(&mut rng)));
        }
    }

    let config = FrontendConfig::default();
    let layout =
        FrameLayout::from_seconds(sample_rate, config.window_s, config.hop_s).expect("default layout is valid");
    let labels = (0..layout.count(samples.len()))
        .map(|f| {
            let start = f * layout.hop;
            let end = start + layout.window - 1;
            let (a, b) = (start / seg_len, end / seg_len);
            (a == b).then(|| is_tone[a])
        })
        .collect();
    let audio = AudioBuffer::new(samples, sample_rate).expect("callers pass an accepted rate");
    (audio, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle() -> TransitionModel {
        TransitionModel::from_probabilities(&[
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![1.0, 0.0, 0.0],
        ])
        .unwrap()
    }

    #[test]
    fn cycle_sequence() {
        let s = generate_synthetic_sequence(&cycle(), 6, 0, 1).unwrap();
        assert_eq!(s.labels(), &[0, 1, 2, 0, 1, 2]);
    }

    #[test]
    fn oracle_continues_and_switches() {
        let reverse = TransitionModel::from_probabilities(&[
            vec![0.0, 0.0, 1.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
        ])
        .unwrap();
        let mut o = ChainOracle::new(cycle(), 4, 0, 0).unwrap().switch_at(2, reverse).unwrap().limit(3);
        assert_eq!(o.next_sequence().unwrap().labels(), &[0, 1, 2, 0]);
        assert_eq!(o.next_sequence().unwrap().labels(), &[1, 2, 0, 1]);
        assert_eq!(o.next_sequence().unwrap().labels(), &[0, 2, 1, 0]);
        assert!(o.next_sequence().is_none());
    }

    #[test]
    fn embeddings_layout() {
        let (e, truth) = generate_synthetic_embeddings(3, 20, 16, 5.0, 0.0, 1).unwrap();
        assert_eq!(e.len(), 60);
        assert_eq!(truth, [vec![0; 20], vec![1; 20], vec![2; 20]].concat());
        assert_eq!(e.vectors()[0], e.vectors()[19]);
        let d: f64 = e.vectors()[0]
            .iter()
            .zip(&e.vectors()[20])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!((d - 5.0).abs() < 1e-12);
    }

    #[test]
    fn corpus_labels_match_frames() {
        let (audio, labels) = tone_silence_corpus(16_000, 4, 0.2, 3);
        assert_eq!(audio.samples().len(), 4 * 3200);
        assert_eq!(labels.len(), 1 + (4 * 3200 - 400) / 160);
        assert!(labels.iter().any(|l| l.is_none()));
        assert!(labels.contains(&Some(true)) && labels.contains(&Some(false)));
    }
}
