//! Fixture generation, label alignment, persistence and reporting around
//! the core pipeline.

mod align;
mod config;
mod io;
mod persist;
mod report;
pub mod synthetic;

pub use align::{align_labels, Alignment, MAX_ALIGN_STATES};
pub use config::{ChainSpec, ChainSwitch, OracleSpec, SessionFile, SessionOutputs};
pub use io::{
    format_embeddings_csv, format_labels, parse_embeddings_csv, parse_embeddings_jsonl, parse_labels,
    parse_labels_text, parse_timed_labels, read_embeddings, read_labels, read_text, write_atomic,
    EmbeddingRecord, LabelFile,
};
pub use persist::{load_model, model_from_json, model_to_json, save_model, SavedModel, MODEL_VERSION};
pub use report::{report_table, table_json, write_table_csv, TableRow, TABLE_HEADER};
