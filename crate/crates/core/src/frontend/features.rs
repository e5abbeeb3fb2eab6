use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::audio::{frames_with, AudioBuffer, FrameLayout};
use crate::error::{Error, Result};

pub const ENERGY_FLOOR: f64 = 1e-10;
pub const MFCC_COEFFS: usize = 13;

/// `ln(max(sum x^2, 1e-10))`.
pub fn log_energy(frame: &[f64]) -> f64 {
    let energy: f64 = frame.iter().map(|x| x * x).sum();
    energy.max(ENERGY_FLOOR).ln()
}

/// Fraction of adjacent sample pairs whose signs differ; zero counts as
/// positive.
pub fn zcr(frame: &[f64]) -> Result<f64> {
    if frame.len() < 2 {
        return Err(Error::invalid(format!(
            "zero-crossing rate needs at least two samples, got {}",
            frame.len()
        )));
    }
    let crossings = frame
        .windows(2)
        .filter(|w| (w[0] >= 0.0) != (w[1] >= 0.0))
        .count();
    Ok(crossings as f64 / (frame.len() - 1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MfccConfig {
    pub n_filters: usize,
    pub n_coeffs: usize,
    pub pre_emphasis: f64,
}

impl Default for MfccConfig {
    fn default() -> Self {
        Self {
            n_filters: 40,
            n_coeffs: MFCC_COEFFS,
            pre_emphasis: 0.97,
        }
    }
}

fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Precomputed MFCC pipeline for one frame length and sample rate:
/// pre-emphasis, Hann window, zero-padded FFT, power spectrum through a
/// triangular mel filterbank spanning 0..rate/2, floored log, orthonormal
/// DCT-II.
pub struct MfccExtractor {
    config: MfccConfig,
    frame_len: usize,
    nfft: usize,
    window: Vec<f64>,
    /// `n_filters` rows of `nfft / 2 + 1` weights.
    filterbank: Vec<Vec<f64>>,
    /// `n_coeffs` rows of `n_filters` DCT-II basis values.
    dct: Vec<Vec<f64>>,
    fft: Arc<dyn Fft<f64>>,
}

impl MfccExtractor {
    pub fn new(sample_rate: u32, frame_len: usize, config: MfccConfig) -> Result<Self> {
        if frame_len < 2 {
            return Err(Error::invalid(format!(
                "frame of {frame_len} samples is too short for an FFT"
            )));
        }
        if config.n_filters == 0 || config.n_coeffs == 0 || config.n_coeffs > config.n_filters {
            return Err(Error::invalid(format!(
                "cannot take {} coefficients from {} filters",
                config.n_coeffs, config.n_filters
            )));
        }
        let nfft = frame_len.next_power_of_two();
        let bins = nfft / 2 + 1;
        let rate = sample_rate as f64;

        let window = (0..frame_len)
            .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / (frame_len - 1) as f64).cos())
            .collect();

        let mel_max = hz_to_mel(rate / 2.0);
        let edges: Vec<f64> = (0..config.n_filters + 2)
            .map(|i| mel_to_hz(mel_max * i as f64 / (config.n_filters + 1) as f64))
            .collect();
        let filterbank = (0..config.n_filters)
            .map(|m| {
                let (lo, mid, hi) = (edges[m], edges[m + 1], edges[m + 2]);
                (0..bins)
                    .map(|k| {
                        let f = k as f64 * rate / nfft as f64;
                        let rising = (f - lo) / (mid - lo);
                        let falling = (hi - f) / (hi - mid);
                        rising.min(falling).max(0.0)
                    })
                    .collect()
            })
            .collect();

        let n = config.n_filters as f64;
        let dct = (0..config.n_coeffs)
            .map(|k| {
                let scale = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
                (0..config.n_filters)
                    .map(|i| scale * (PI * k as f64 * (2 * i + 1) as f64 / (2.0 * n)).cos())
                    .collect()
            })
            .collect();

        let fft = FftPlanner::new().plan_fft_forward(nfft);
        Ok(Self {
            config,
            frame_len,
            nfft,
            window,
            filterbank,
            dct,
            fft,
        })
    }

    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    /// Log mel filterbank energies of one frame.
    pub fn log_mel(&self, frame: &[f64]) -> Result<Vec<f64>> {
        if frame.len() != self.frame_len {
            return Err(Error::invalid(format!(
                "frame has {} samples, extractor expects {}",
                frame.len(),
                self.frame_len
            )));
        }
        let mut buf = vec![Complex::new(0.0, 0.0); self.nfft];
        let mut prev = 0.0;
        for (n, (&x, &w)) in frame.iter().zip(&self.window).enumerate() {
            let emphasized = if n == 0 { x } else { x - self.config.pre_emphasis * prev };
            prev = x;
            buf[n] = Complex::new(emphasized * w, 0.0);
        }
        self.fft.process(&mut buf);
        let power: Vec<f64> = buf[..self.nfft / 2 + 1].iter().map(|c| c.norm_sqr()).collect();
        Ok(self
            .filterbank
            .iter()
            .map(|weights| {
                let e: f64 = weights.iter().zip(&power).map(|(w, p)| w * p).sum();
                e.max(ENERGY_FLOOR).ln()
            })
            .collect())
    }

    pub fn compute(&self, frame: &[f64]) -> Result<Vec<f64>> {
        let log_mel = self.log_mel(frame)?;
        Ok(self
            .dct
            .iter()
            .map(|basis| basis.iter().zip(&log_mel).map(|(b, e)| b * e).sum())
            .collect())
    }
}

/// One-off MFCC of a single frame.
pub fn mfcc(frame: &[f64], sample_rate: u32, n_filters: usize, n_coeffs: usize) -> Result<Vec<f64>> {
    let config = MfccConfig {
        n_filters,
        n_coeffs,
        ..MfccConfig::default()
    };
    MfccExtractor::new(sample_rate, frame.len(), config)?.compute(frame)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameFeatures {
    pub frame_index: usize,
    pub time_s: f64,
    pub log_energy: f64,
    pub zcr: f64,
    pub mfcc: Vec<f64>,
}

impl FrameFeatures {
    /// `[log_energy, zcr] ++ mfcc`, the classifier input.
    pub fn vector(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(2 + self.mfcc.len());
        v.push(self.log_energy);
        v.push(self.zcr);
        v.extend_from_slice(&self.mfcc);
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrontendConfig {
    pub window_s: f64,
    pub hop_s: f64,
    pub mfcc: MfccConfig,
}

impl Default for FrontendConfig {
    fn default() -> Self {
        Self {
            window_s: 0.025,
            hop_s: 0.010,
            mfcc: MfccConfig::default(),
        }
    }
}

/// Features for every whole frame of `audio`, in frame order.
pub fn extract_features(audio: &AudioBuffer, config: &FrontendConfig) -> Result<Vec<FrameFeatures>> {
    let layout = FrameLayout::from_seconds(audio.sample_rate(), config.window_s, config.hop_s)?;
    let extractor = MfccExtractor::new(audio.sample_rate(), layout.window, config.mfcc)?;
    let rate = audio.sample_rate() as f64;
    frames_with(audio.samples(), layout)
        .into_iter()
        .enumerate()
        .map(|(t, frame)| {
            Ok(FrameFeatures {
                frame_index: t,
                time_s: (t * layout.hop) as f64 / rate,
                log_energy: log_energy(frame),
                zcr: zcr(frame)?,
                mfcc: extractor.compute(frame)?,
            })
        })
        .collect()
}

/// CSV with columns `frame_index,time_s,log_energy,zcr,mfcc_0..mfcc_{n-1}`.
pub fn write_features_csv<W: Write>(out: W, features: &[FrameFeatures]) -> Result<()> {
    let n_coeffs = features.first().map_or(MFCC_COEFFS, |f| f.mfcc.len());
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![
        "frame_index".to_string(),
        "time_s".to_string(),
        "log_energy".to_string(),
        "zcr".to_string(),
    ];
    header.extend((0..n_coeffs).map(|i| format!("mfcc_{i}")));
    w.write_record(&header)?;
    for f in features {
        let mut row = vec![
            f.frame_index.to_string(),
            f.time_s.to_string(),
            f.log_energy.to_string(),
            f.zcr.to_string(),
        ];
        row.extend(f.mfcc.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_energy_examples() {
        assert!((log_energy(&[0.0; 400]) - (1e-10f64).ln()).abs() < 1e-12);
        assert_eq!(log_energy(&[1.0]), 0.0);
        assert!((log_energy(&[0.5, 0.5]) - 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn zcr_examples() {
        assert_eq!(zcr(&[0.3; 10]).unwrap(), 0.0);
        assert_eq!(zcr(&[1.0, -1.0, 1.0, -1.0]).unwrap(), 1.0);
        // zero is positive
        assert_eq!(zcr(&[0.0, 1.0, 0.0]).unwrap(), 0.0);
        assert!(zcr(&[1.0]).is_err());
    }

    fn tone(freq: f64, phase: f64) -> Vec<f64> {
        (0..400)
            .map(|n| (2.0 * PI * freq * n as f64 / 16_000.0 + phase).sin())
            .collect()
    }

    fn scan_crossings(frame: &[f64]) -> usize {
        (1..frame.len())
            .filter(|&n| (frame[n] < 0.0) != (frame[n - 1] < 0.0))
            .count()
    }

    #[test]
    fn tone_zcr_matches_sample_scan() {
        // 2.5 periods of 100 Hz in 25 ms at 16 kHz
        let shifted = tone(100.0, PI / 2.0);
        assert_eq!(scan_crossings(&shifted), 5);
        assert_eq!(zcr(&shifted).unwrap(), 5.0 / 399.0);

        // starting exactly on a zero sample loses the crossing at n = 0
        let zero_phase = tone(100.0, 0.0);
        assert_eq!(zcr(&zero_phase).unwrap(), scan_crossings(&zero_phase) as f64 / 399.0);
    }

    #[test]
    fn zero_frame_mfcc_is_constant_dct() {
        let c = mfcc(&[0.0; 400], 16_000, 40, 13).unwrap();
        assert_eq!(c.len(), 13);
        let expected_c0 = (1e-10f64).ln() * 40f64.sqrt();
        assert!((c[0] - expected_c0).abs() < 1e-9);
        assert!(c[1..].iter().all(|x| x.abs() < 1e-9));
    }

    #[test]
    fn filters_cover_nyquist_band() {
        let ex = MfccExtractor::new(16_000, 400, MfccConfig::default()).unwrap();
        assert_eq!(ex.filterbank.len(), 40);
        // every filter picks up at least one bin
        assert!(ex.filterbank.iter().all(|f| f.iter().any(|&w| w > 0.0)));
    }

    #[test]
    fn short_frames_rejected() {
        assert!(mfcc(&[0.1], 16_000, 40, 13).is_err());
        assert!(mfcc(&[0.1; 10], 16_000, 10, 13).is_err());
    }

    #[test]
    fn features_csv_layout() {
        let audio = AudioBuffer::new(vec![0.1; 800], 16_000).unwrap();
        let feats = extract_features(&audio, &FrontendConfig::default()).unwrap();
        let mut out = Vec::new();
        write_features_csv(&mut out, &feats).unwrap();
        let text = String::from_utf8(out).unwrap();
        let header = text.lines().next().unwrap();
        assert!(header.starts_with("frame_index,time_s,log_energy,zcr,mfcc_0,"));
        assert!(header.ends_with("mfcc_12"));
        assert_eq!(text.lines().count(), 1 + feats.len());
    }
}
