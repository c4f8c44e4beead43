//! Matrix file formats: headerless CSV (one row per Alice setting) or
//! JSON `{"rows": [[...], ...]}`.

use serde::{Deserialize, Serialize};

use crate::bell::BellCoefficients;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Csv,
    Json,
}

#[derive(Debug, Serialize, Deserialize)]
struct MatrixDoc {
    rows: Vec<Vec<f64>>,
}

pub fn parse_matrix(text: &str, format: MatrixFormat) -> Result<BellCoefficients> {
    match format {
        MatrixFormat::Csv => parse_csv(text),
        MatrixFormat::Json => parse_json(text),
    }
}

pub fn parse_csv(text: &str) -> Result<BellCoefficients> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let row = record
            .iter()
            .map(|field| {
                field
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("row {}: cannot read {field:?} as a number", i + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    BellCoefficients::from_rows(&rows)
}

pub fn parse_json(text: &str) -> Result<BellCoefficients> {
    let doc: MatrixDoc = serde_json::from_str(text)?;
    BellCoefficients::from_rows(&doc.rows)
}

pub fn to_json(g: &BellCoefficients) -> String {
    serde_json::to_string(&MatrixDoc { rows: g.rows() }).expect("finite entries serialize")
}

pub fn to_csv(g: &BellCoefficients) -> String {
    g.rows()
        .iter()
        .map(|r| r.iter().map(f64::to_string).collect::<Vec<_>>().join(","))
        .collect::<Vec<_>>()
        .join("\n")
        + "\n"
}
