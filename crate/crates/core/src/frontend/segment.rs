use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeakerSegment {
    pub start_s: f64,
    pub end_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<usize>,
}

impl SpeakerSegment {
    pub fn duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }
}

/// Cuts every maximal run of speech frames into consecutive chunks of
/// `seg_len_s`. A leftover of at most half a chunk is folded into the chunk
/// before it; a longer leftover becomes its own segment. Runs shorter than
/// half a chunk are dropped.
pub fn segment(speech_mask: &[bool], hop_s: f64, seg_len_s: f64) -> Result<Vec<SpeakerSegment>> {
    if !(hop_s.is_finite() && hop_s > 0.0) {
        return Err(Error::invalid("hop must be positive"));
    }
    let chunk = (seg_len_s / hop_s).round() as usize;
    if !(seg_len_s.is_finite() && chunk >= 1) {
        return Err(Error::invalid(format!(
            "segment length {seg_len_s} s is shorter than one hop"
        )));
    }

    let mut segments = Vec::new();
    let mut t = 0;
    while t < speech_mask.len() {
        if !speech_mask[t] {
            t += 1;
            continue;
        }
        let start = t;
        while t < speech_mask.len() && speech_mask[t] {
            t += 1;
        }
        let run = t - start;
        let (mut whole, rest) = (run / chunk, run % chunk);
        let mut bounds: Vec<(usize, usize)> = (0..whole)
            .map(|i| (start + i * chunk, start + (i + 1) * chunk))
            .collect();
        if rest > 0 {
            if 2 * rest <= chunk && whole > 0 {
                bounds.last_mut().unwrap().1 = t;
            } else if 2 * rest >= chunk {
                bounds.push((start + whole * chunk, t));
                whole += 1;
            }
        }
        debug_assert!(bounds.len() <= whole.max(1));
        segments.extend(bounds.into_iter().map(|(a, b)| SpeakerSegment {
            start_s: a as f64 * hop_s,
            end_s: b as f64 * hop_s,
            label: None,
        }));
    }
    Ok(segments)
}
