use std::path::Path;

use serde::{Deserialize, Serialize};

use super::io::{read_text, write_atomic};
use crate::error::{Error, Result};
use crate::markov::{PredictionMode, TransitionCounts, TransitionModel, UnseenRowPolicy};

pub const MODEL_VERSION: u64 = 1;

/// A transition model together with the prediction mode it is run in.
#[derive(Debug, Clone, PartialEq)]
pub struct SavedModel {
    pub model: TransitionModel,
    pub mode: PredictionMode,
}

#[derive(Serialize)]
struct ModelOut<'a> {
    version: u64,
    s: usize,
    counts: Vec<Vec<u64>>,
    policy: UnseenRowPolicy,
    mode: &'a PredictionMode,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelIn {
    #[allow(dead_code)]
    version: u64,
    s: usize,
    counts: Vec<Vec<i128>>,
    #[serde(default)]
    policy: UnseenRowPolicy,
    #[serde(default)]
    mode: PredictionMode,
}

pub fn model_to_json(model: &TransitionModel, mode: PredictionMode) -> String {
    let doc = ModelOut {
        version: MODEL_VERSION,
        s: model.states(),
        counts: model.counts().to_rows(),
        policy: model.policy(),
        mode: &mode,
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("model document always serializes");
    text.push('\n');
    text
}

/// Parses a model document. The version is checked before anything else;
/// probabilities are rebuilt from the counts.
pub fn model_from_json(text: &str) -> Result<SavedModel> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::parse("model", e))?;
    match value.get("version") {
        None => return Err(Error::parse("version", "missing field")),
        Some(v) => match v.as_u64() {
            Some(MODEL_VERSION) => {}
            Some(found) => {
                return Err(Error::Version {
                    found,
                    expected: MODEL_VERSION,
                })
            }
            None => return Err(Error::parse("version", format!("expected an unsigned integer, got {v}"))),
        },
    }
    let doc: ModelIn = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        Error::parse(path, e.into_inner())
    })?;

    if doc.s == 0 {
        return Err(Error::parse("s", "state count must be at least 1"));
    }
    if doc.counts.len() != doc.s {
        return Err(Error::parse("counts", format!("{} rows for s = {}", doc.counts.len(), doc.s)));
    }
    let mut cells = Vec::with_capacity(doc.s * doc.s);
    for (i, row) in doc.counts.iter().enumerate() {
        if row.len() != doc.s {
            return Err(Error::parse(format!("counts[{i}]"), format!("{} entries for s = {}", row.len(), doc.s)));
        }
        for (j, &c) in row.iter().enumerate() {
            let c = u64::try_from(c)
                .map_err(|_| Error::invalid(format!("counts[{i}][{j}] = {c} is not a valid count")))?;
            cells.push(c);
        }
    }
    let counts = TransitionCounts::from_flat(doc.s, cells)?;
    Ok(SavedModel {
        model: TransitionModel::from_counts(counts, doc.policy),
        mode: doc.mode,
    })
}

pub fn save_model(path: impl AsRef<Path>, model: &TransitionModel, mode: PredictionMode) -> Result<()> {
    write_atomic(path, model_to_json(model, mode).as_bytes())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SavedModel> {
    model_from_json(&read_text(path)?)
}
