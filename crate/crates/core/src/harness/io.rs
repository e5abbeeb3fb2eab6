//! Text formats for labels and embeddings, plus atomic file output.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::clustering::EmbeddingSet;
use crate::error::{Error, Result};
use crate::markov::{StateSequence, TimeSpan};

pub fn read_text(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    fs::read_to_string(path).map_err(|e| Error::io_at(path, e))
}

/// Writes through a temporary file in the target directory, then renames
/// it into place.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let at = |e| Error::io_at(path, e);
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(at)?;
    tmp.write_all(bytes).map_err(at)?;
    tmp.as_file().sync_all().map_err(at)?;
    tmp.persist(path).map_err(|e| at(e.error))?;
    Ok(())
}

/// Labels as read from disk, with spans when the file was timed.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelFile {
    pub labels: Vec<usize>,
    pub times: Option<Vec<TimeSpan>>,
}

impl LabelFile {
    /// Builds a sequence over `states` states, or one past the largest
    /// label when `states` is `None`.
    pub fn into_sequence(self, states: Option<usize>) -> Result<StateSequence> {
        let states = states.unwrap_or_else(|| self.labels.iter().max().map_or(1, |m| m + 1));
        match self.times {
            Some(times) => StateSequence::with_times(self.labels, states, times),
            None => StateSequence::new(self.labels, states),
        }
    }
}

/// Integers separated by newlines and/or commas. Blank entries are skipped.
pub fn parse_labels_text(text: &str) -> Result<Vec<usize>> {
    let mut labels = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        for token in line.split(',') {
            let token = token.trim();
            if token.is_empty() {
                continue;
            }
            let label = token.parse::<usize>().map_err(|_| {
                Error::parse(
                    format!("line {}", line_no + 1),
                    format!("{token:?} is not a non-negative integer label"),
                )
            })?;
            labels.push(label);
        }
    }
    Ok(labels)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TimedLabel {
    start_s: f64,
    end_s: f64,
    state: usize,
}

fn jsonl_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_json_line<T: serde::de::DeserializeOwned>(line_no: usize, line: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(line);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let path = if field == "." {
            format!("line {line_no}")
        } else {
            format!("line {line_no}: {field}")
        };
        Error::parse(path, e.into_inner())
    })
}

/// JSONL records `{"start_s", "end_s", "state"}`, one per line.
pub fn parse_timed_labels(text: &str) -> Result<LabelFile> {
    let mut labels = Vec::new();
    let mut times = Vec::new();
    for (line_no, line) in jsonl_lines(text) {
        let rec: TimedLabel = parse_json_line(line_no, line)?;
        labels.push(rec.state);
        times.push(TimeSpan {
            start_s: rec.start_s,
            end_s: rec.end_s,
        });
    }
    Ok(LabelFile {
        labels,
        times: Some(times),
    })
}

/// Timed JSONL when the first non-blank character is `{`, plain text
/// otherwise.
pub fn parse_labels(text: &str) -> Result<LabelFile> {
    if text.trim_start().starts_with('{') {
        parse_timed_labels(text)
    } else {
        Ok(LabelFile {
            labels: parse_labels_text(text)?,
            times: None,
        })
    }
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<LabelFile> {
    parse_labels(&read_text(path)?)
}

/// One label per line, or timed JSONL when the sequence carries spans.
pub fn format_labels(seq: &StateSequence) -> String {
    let mut out = String::new();
    match seq.times() {
        Some(times) => {
            for (&state, t) in seq.labels().iter().zip(times) {
                let rec = TimedLabel {
                    start_s: t.start_s,
                    end_s: t.end_s,
                    state,
                };
                out.push_str(&serde_json::to_string(&rec).expect("plain record"));
                out.push('\n');
            }
        }
        None => {
            for l in seq.labels() {
                out.push_str(&l.to_string());
                out.push('\n');
            }
        }
    }
    out
}

/// Headerless CSV, one row of floats per segment.
pub fn parse_embeddings_csv(text: &str) -> Result<EmbeddingSet> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut vectors = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let v = record
            .iter()
            .enumerate()
            .map(|(c, field)| {
                field.parse::<f64>().map_err(|_| {
                    Error::parse(format!("csv line {line}, column {}", c + 1), format!("{field:?} is not a number"))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        vectors.push(v);
    }
    if vectors.is_empty() {
        return Err(Error::invalid("embeddings file has no rows"));
    }
    EmbeddingSet::new(vectors)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingRecord {
    pub start_s: f64,
    pub end_s: f64,
    pub vector: Vec<f64>,
}

/// JSONL records `{"start_s", "end_s", "vector"}`, one per line.
pub fn parse_embeddings_jsonl(text: &str) -> Result<EmbeddingSet> {
    let mut vectors = Vec::new();
    let mut spans = Vec::new();
    for (line_no, line) in jsonl_lines(text) {
        let rec: EmbeddingRecord = parse_json_line(line_no, line)?;
        vectors.push(rec.vector);
        spans.push(TimeSpan {
            start_s: rec.start_s,
            end_s: rec.end_s,
        });
    }
    if vectors.is_empty() {
        return Err(Error::invalid("embeddings file has no records"));
    }
    EmbeddingSet::with_spans(vectors, spans)
}

/// Chooses the parser by extension: `.jsonl` or `.json` for records,
/// anything else for CSV.
pub fn read_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingSet> {
    let path = path.as_ref();
    let text = read_text(path)?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("jsonl" | "json") => parse_embeddings_jsonl(&text),
        _ => parse_embeddings_csv(&text),
    }
}

pub fn format_embeddings_csv(set: &EmbeddingSet) -> String {
    let mut out = String::new();
    for v in set.vectors() {
        let row: Vec<String> = v.iter().map(|x| x.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
