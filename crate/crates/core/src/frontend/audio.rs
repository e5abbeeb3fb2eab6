use std::io::Cursor;
use std::path::Path;

use crate::error::{Error, Result};

pub const ACCEPTED_RATES: [u32; 2] = [16_000, 44_100];

/// Mono audio with samples in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("audio buffer is empty"));
        }
        if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::invalid(format!("sample {i} is not finite")));
        }
        if !ACCEPTED_RATES.contains(&sample_rate) {
            return Err(Error::Unsupported(format!(
                "sample rate {sample_rate} Hz (accepted: 16000, 44100)"
            )));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// Decodes a RIFF/WAVE file holding 16-bit integer PCM. Channels are
/// averaged into one.
pub fn decode_wav(bytes: &[u8]) -> Result<AudioBuffer> {
    let reader = hound::WavReader::new(Cursor::new(bytes)).map_err(wav_error)?;
    let spec = reader.spec();
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(Error::Unsupported(format!(
            "{}-bit {:?} WAV (only 16-bit PCM is read)",
            spec.bits_per_sample, spec.sample_format
        )));
    }
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(Error::parse("wav.fmt.channels", "zero channels"));
    }
    // the declared length is untrusted; never reserve beyond what the bytes can hold
    let declared = (reader.len() as usize).min(bytes.len() / 2);
    let mut samples = Vec::with_capacity(declared / channels);
    let mut acc = 0.0;
    let mut filled = 0;
    for s in reader.into_samples::<i16>() {
        acc += f64::from(s.map_err(wav_error)?) / 32768.0;
        filled += 1;
        if filled == channels {
            samples.push(acc / channels as f64);
            acc = 0.0;
            filled = 0;
        }
    }
    AudioBuffer::new(samples, spec.sample_rate)
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioBuffer> {
    let path = path.as_ref();
    decode_wav(&std::fs::read(path).map_err(|e| Error::io_at(path, e))?)
}

/// 16-bit PCM mono WAV bytes for `audio`; samples are clipped to `[-1, 1]`.
pub fn encode_wav(audio: &AudioBuffer) -> Result<Vec<u8>> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: audio.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut out = Cursor::new(Vec::new());
    {
        let mut writer = hound::WavWriter::new(&mut out, spec).map_err(wav_error)?;
        for &x in &audio.samples {
            let q = (x.clamp(-1.0, 1.0) * 32767.0).round() as i16;
            writer.write_sample(q).map_err(wav_error)?;
        }
        writer.finalize().map_err(wav_error)?;
    }
    Ok(out.into_inner())
}

fn wav_error(e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(io) => Error::Io(io),
        other => Error::parse("wav", other),
    }
}

/// Frame geometry in samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameLayout {
    pub window: usize,
    pub hop: usize,
}

impl FrameLayout {
    pub fn from_seconds(sample_rate: u32, window_s: f64, hop_s: f64) -> Result<Self> {
        let window = (window_s * sample_rate as f64).round() as usize;
        let hop = (hop_s * sample_rate as f64).round() as usize;
        if window < 2 {
            return Err(Error::invalid(format!(
                "window of {window_s} s is shorter than two samples"
            )));
        }
        if hop == 0 {
            return Err(Error::invalid(format!("hop of {hop_s} s rounds to zero samples")));
        }
        Ok(Self { window, hop })
    }

    /// Number of whole windows in `len` samples.
    pub fn count(&self, len: usize) -> usize {
        if len < self.window {
            0
        } else {
            (len - self.window) / self.hop + 1
        }
    }
}

/// Splits `audio` into windows of `window_s` seconds every `hop_s` seconds.
/// A trailing partial window is dropped.
pub fn frame(audio: &AudioBuffer, window_s: f64, hop_s: f64) -> Result<Vec<&[f64]>> {
    let layout = FrameLayout::from_seconds(audio.sample_rate, window_s, hop_s)?;
    Ok(frames_with(audio.samples(), layout))
}

pub fn frames_with(samples: &[f64], layout: FrameLayout) -> Vec<&[f64]> {
    (0..layout.count(samples.len()))
        .map(|t| &samples[t * layout.hop..t * layout.hop + layout.window])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn silence(len: usize, rate: u32) -> AudioBuffer {
        AudioBuffer::new(vec![0.0; len], rate).unwrap()
    }

    #[test]
    fn one_second_has_98_frames() {
        let audio = silence(16_000, 16_000);
        assert_eq!(frame(&audio, 0.025, 0.010).unwrap().len(), 98);
    }

    #[test]
    fn short_audio_has_no_frames() {
        let audio = silence(399, 16_000);
        assert!(frame(&audio, 0.025, 0.010).unwrap().is_empty());
    }

    #[test]
    fn hop_equal_to_window_tiles() {
        let audio = silence(16_000 + 123, 16_000);
        let frames = frame(&audio, 0.025, 0.025).unwrap();
        assert_eq!(frames.len(), (16_000 + 123) / 400);
        assert!(frames.iter().all(|f| f.len() == 400));
    }

    #[test]
    fn frame_positions() {
        let samples: Vec<f64> = (0..1000).map(|i| i as f64 / 1000.0).collect();
        let layout = FrameLayout { window: 400, hop: 160 };
        let frames = frames_with(&samples, layout);
        assert_eq!(frames[2][0], samples[320]);
    }

    #[test]
    fn rejects_bad_buffers() {
        assert!(AudioBuffer::new(vec![], 16_000).is_err());
        assert!(AudioBuffer::new(vec![f64::NAN], 16_000).is_err());
        assert!(matches!(AudioBuffer::new(vec![0.0], 8_000), Err(Error::Unsupported(_))));
    }

    #[test]
    fn wav_round_trip_quantizes() {
        let samples: Vec<f64> = (0..800).map(|i| (i as f64 * 0.01).sin() * 0.5).collect();
        let audio = AudioBuffer::new(samples.clone(), 16_000).unwrap();
        let decoded = decode_wav(&encode_wav(&audio).unwrap()).unwrap();
        assert_eq!(decoded.sample_rate(), 16_000);
        for (a, b) in decoded.samples().iter().zip(&samples) {
            assert!((a - b).abs() < 1.0 / 16_000.0);
        }
    }

    #[test]
    fn stereo_is_downmixed() {
        let spec = hound::WavSpec {
            channels: 2,
            sample_rate: 44_100,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut out = Cursor::new(Vec::new());
        {
            let mut w = hound::WavWriter::new(&mut out, spec).unwrap();
            for _ in 0..10 {
                w.write_sample(16384i16).unwrap();
                w.write_sample(0i16).unwrap();
            }
            w.finalize().unwrap();
        }
        let audio = decode_wav(&out.into_inner()).unwrap();
        assert_eq!(audio.samples().len(), 10);
        assert!(audio.samples().iter().all(|&x| (x - 0.25).abs() < 1e-12));
    }

    #[test]
    fn garbage_is_a_parse_error() {
        assert!(decode_wav(b"RIFF\x00\x00").is_err());
        assert!(decode_wav(&[]).is_err());
    }
}
