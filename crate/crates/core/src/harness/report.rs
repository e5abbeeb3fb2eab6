use std::io::Write;

use serde::Serialize;

use crate::controller::SessionReport;
use crate::error::{Error, Result};
use crate::metrics::EvaluationReport;

pub const TABLE_HEADER: [&str; 4] = ["Audio File", "Speaker State", "EPPS (in %)", "TPE (in %)"];

/// One row group of the results table: a file's TPE and the EPPS of each
/// state, `None` where the state never occurs in the actual labels.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub file_id: String,
    pub epps: Vec<Option<f64>>,
    pub tpe: f64,
}

impl TableRow {
    pub fn from_report(file_id: impl Into<String>, report: &EvaluationReport, states: usize) -> Self {
        Self {
            file_id: file_id.into(),
            epps: (0..states).map(|x| report.epps.get(&x).copied()).collect(),
            tpe: report.tpe,
        }
    }
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

fn cell(x: f64) -> String {
    let r = round2(x);
    // avoid "-0"
    if r == 0.0 {
        "0".to_string()
    } else {
        r.to_string()
    }
}

/// One row group per checked iteration, identified by iteration number.
pub fn report_table(session: &SessionReport) -> Result<Vec<TableRow>> {
    let states = session.final_model.states();
    let rows: Vec<TableRow> = session
        .checked()
        .map(|(record, check)| TableRow::from_report(record.iteration.to_string(), &check.report, states))
        .collect();
    if rows.is_empty() {
        return Err(Error::invalid("session has no checked iterations"));
    }
    Ok(rows)
}

/// Results table as CSV, grouped per file: the file id
/// and TPE appear on the first line of each group only.
pub fn write_table_csv<W: Write>(out: W, rows: &[TableRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TABLE_HEADER)?;
    for row in rows {
        for (state, epps) in row.epps.iter().enumerate() {
            let first = state == 0;
            w.write_record([
                if first { row.file_id.clone() } else { String::new() },
                state.to_string(),
                epps.map(cell).unwrap_or_default(),
                if first { cell(row.tpe) } else { String::new() },
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct RowOut<'a> {
    file_id: &'a str,
    epps: Vec<Option<f64>>,
    tpe: f64,
}

pub fn table_json(rows: &[TableRow]) -> String {
    let out: Vec<RowOut> = rows
        .iter()
        .map(|r| RowOut {
            file_id: &r.file_id,
            epps: r.epps.iter().map(|e| e.map(round2)).collect(),
            tpe: round2(r.tpe),
        })
        .collect();
    serde_json::to_string_pretty(&out).expect("table always serializes")
}
