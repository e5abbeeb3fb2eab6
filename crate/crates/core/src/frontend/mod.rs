//! Audio front end: framing, frame features, speech detection and
//! fixed-length segmentation.

mod audio;
mod features;
mod segment;
mod vad;

pub use audio::{decode_wav, encode_wav, frame, frames_with, read_wav, AudioBuffer, FrameLayout};
pub use features::{
    extract_features, log_energy, mfcc, write_features_csv, zcr, FrameFeatures, FrontendConfig,
    MfccConfig, MfccExtractor, ENERGY_FLOOR, MFCC_COEFFS,
};
pub use segment::{segment, SpeakerSegment};
pub use vad::{train_vad, TrainedVad, VadDecision, VadWeights};
