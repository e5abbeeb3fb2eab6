//! Session description files for the `session` command.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::io::{read_labels, read_text};
use super::synthetic::ChainOracle;
use crate::controller::{LabelOracle, SequenceOracle, SessionConfig};
use crate::error::{Error, Result};
use crate::markov::TransitionModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSwitch {
    /// Oracle call index (0 is the bootstrap) from which `rows` apply.
    pub at: usize,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    pub rows: Vec<Vec<f64>>,
    pub length: usize,
    #[serde(default)]
    pub initial: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub switches: Vec<ChainSwitch>,
}

/// Where the session's ground-truth label sequences come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum OracleSpec {
    /// Label files in order; the first one bootstraps the model.
    Files(Vec<PathBuf>),
    /// A synthetic Markov chain.
    Chain(ChainSpec),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionOutputs {
    pub report_json: Option<PathBuf>,
    pub table_csv: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionFile {
    #[serde(default)]
    pub session: SessionConfig,
    pub oracle: OracleSpec,
    #[serde(default)]
    pub outputs: SessionOutputs,
}

impl SessionFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::parse(path, e.into_inner())
        })
    }

    /// Reads the file; relative paths inside it are resolved against the
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut file = Self::from_json(&read_text(path)?)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let OracleSpec::Files(files) = &mut file.oracle {
            files.iter_mut().for_each(resolve);
        }
        file.outputs.report_json.as_mut().map(resolve);
        file.outputs.table_csv.as_mut().map(resolve);
        Ok(file)
    }

    pub fn build_oracle(&self) -> Result<Box<dyn LabelOracle>> {
        let states = self.session.states;
        match &self.oracle {
            OracleSpec::Files(files) => {
                let seqs = files
                    .iter()
                    .map(|p| read_labels(p)?.into_sequence(Some(states)))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Box::new(SequenceOracle::new(seqs)))
            }
            OracleSpec::Chain(spec) => {
                let chain = TransitionModel::from_probabilities(&spec.rows)?;
                if chain.states() != states {
                    return Err(Error::invalid(format!(
                        "oracle chain has {} states, session has {states}",
                        chain.states()
                    )));
                }
                let mut oracle = ChainOracle::new(chain, spec.length, spec.initial, spec.seed)?;
                for switch in &spec.switches {
                    oracle = oracle.switch_at(switch.at, TransitionModel::from_probabilities(&switch.rows)?)?;
                }
                Ok(Box::new(oracle))
            }
        }
    }
}
