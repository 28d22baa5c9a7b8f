//! Loading tables from CSV or JSON, plus selection and preprocessing.
//!
//! Column types are inferred from a full scan: integers become `int64`, other
//! numbers `float64`, `true`/`false` become `int64` 0/1, ISO `YYYY-MM-DD` dates
//! become `int64` days since 1970-01-01, and anything else is categorical.
//! Empty cells are nulls.

mod preprocess;
mod remote;
mod source;

use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use crate::frame::{Column, DataFrame};
use crate::par;

pub use preprocess::{preprocess, DropNa, Encoding, Preprocessing};
pub use remote::{FetchOutcome, Fetcher, RemoteCache, UreqFetcher, DEFAULT_REMOTE_CAP};
pub use source::{LoadedSource, SourceResolver, UploadStore, UPSTREAM};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IngestError {
    #[error("cannot read `{path}`: {message}")]
    Io { path: String, message: String },
    #[error("parse error at row {row}, column {col}: {message}")]
    Parse { row: usize, col: usize, message: String },
    #[error("input has no header row")]
    EmptyInput,
    #[error("network error{}: {message}", status.map(|s| format!(" ({s})")).unwrap_or_default())]
    Network { status: Option<u16>, message: String },
    #[error("remote body exceeds the {limit}-byte cap")]
    SizeLimitExceeded { limit: u64 },
    #[error("cannot encode non-categorical column `{0}`")]
    EncodeNonCategorical(String),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("unknown source token `{0}`")]
    UnknownToken(String),
    #[error("export is not frame-shaped: {0}")]
    ShapeMismatch(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    #[serde(alias = "json")]
    JsonRecords,
}

impl Format {
    /// `.json` files are JSON; everything else is read as CSV.
    pub fn infer(locator: &str) -> Self {
        let path = locator.split(['?', '#']).next().unwrap_or(locator);
        if path.to_ascii_lowercase().ends_with(".json") {
            Format::JsonRecords
        } else {
            Format::Csv
        }
    }
}

pub fn load_table(path: impl AsRef<Path>, format: Format) -> Result<DataFrame, IngestError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| IngestError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_table(&bytes, format)
}

pub fn parse_table(bytes: &[u8], format: Format) -> Result<DataFrame, IngestError> {
    match format {
        Format::Csv => parse_csv(bytes),
        Format::JsonRecords => parse_json(bytes),
    }
}

pub fn parse_csv(bytes: &[u8]) -> Result<DataFrame, IngestError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
    let headers = reader
        .byte_headers()
        .map_err(|e| csv_error(e, 1))?
        .clone();
    if headers.is_empty() {
        return Err(IngestError::EmptyInput);
    }
    let names = headers
        .iter()
        .enumerate()
        .map(|(j, h)| utf8(h, 1, j + 1).map(str::to_string))
        .collect::<Result<Vec<_>, _>>()?;

    let mut cells: Vec<Vec<Option<String>>> = vec![Vec::new(); names.len()];
    for (r, record) in reader.byte_records().enumerate() {
        let row = r + 2;
        let record = record.map_err(|e| csv_error(e, row))?;
        for (j, field) in record.iter().enumerate() {
            let text = utf8(field, row, j + 1)?;
            cells[j].push((!text.is_empty()).then(|| text.to_string()));
        }
    }
    let columns = par::map(&names.into_iter().zip(cells).collect::<Vec<_>>(), |(name, values)| {
        infer_text_column(name, values)
    });
    DataFrame::new(columns).map_err(|e| IngestError::Parse {
        row: 1,
        col: 0,
        message: e.to_string(),
    })
}

fn utf8(bytes: &[u8], row: usize, col: usize) -> Result<&str, IngestError> {
    std::str::from_utf8(bytes).map_err(|_| IngestError::Parse {
        row,
        col,
        message: "invalid UTF-8".into(),
    })
}

fn csv_error(e: csv::Error, row: usize) -> IngestError {
    match e.kind() {
        csv::ErrorKind::UnequalLengths { pos, expected_len, len } => IngestError::Parse {
            row: pos.as_ref().map_or(row, |p| p.line() as usize),
            col: (*len).min(*expected_len) as usize + 1,
            message: format!("expected {expected_len} fields, found {len}"),
        },
        csv::ErrorKind::Io(io) => IngestError::Io {
            path: String::new(),
            message: io.to_string(),
        },
        _ => IngestError::Parse {
            row,
            col: 0,
            message: e.to_string(),
        },
    }
}

pub fn parse_iso_date(s: &str) -> Option<i64> {
    if s.len() != 10 {
        return None;
    }
    let date = NaiveDate::parse_from_str(s, "%Y-%m-%d").ok()?;
    Some((date - NaiveDate::from_ymd_opt(1970, 1, 1).unwrap()).num_days())
}

pub fn format_epoch_days(days: i64) -> Option<String> {
    let date = NaiveDate::from_ymd_opt(1970, 1, 1)?.checked_add_signed(chrono::Duration::try_days(days)?)?;
    Some(date.format("%Y-%m-%d").to_string())
}

fn parse_bool(s: &str) -> Option<i64> {
    if s.eq_ignore_ascii_case("true") {
        Some(1)
    } else if s.eq_ignore_ascii_case("false") {
        Some(0)
    } else {
        None
    }
}

fn infer_text_column(name: &str, values: &[Option<String>]) -> Column {
    let present = || values.iter().flatten().map(|s| s.trim());
    if present().next().is_none() {
        return Column::from_f64_options(name, &vec![None; values.len()]);
    }
    let typed_i64 = |f: fn(&str) -> Option<i64>| -> Option<Vec<Option<i64>>> {
        values
            .iter()
            .map(|v| match v {
                None => Some(None),
                Some(s) => f(s.trim()).map(Some),
            })
            .collect()
    };
    if let Some(v) = typed_i64(|s| s.parse().ok()) {
        return Column::from_i64_options(name, &v);
    }
    let floats: Option<Vec<Option<f64>>> = values
        .iter()
        .map(|v| match v {
            None => Some(None),
            Some(s) => s.trim().parse::<f64>().ok().map(Some),
        })
        .collect();
    if let Some(v) = floats {
        return Column::from_f64_options(name, &v);
    }
    if let Some(v) = typed_i64(parse_bool) {
        return Column::from_i64_options(name, &v);
    }
    if let Some(v) = typed_i64(parse_iso_date) {
        return Column::from_i64_options(name, &v);
    }
    Column::categorical(name, values)
}

/// Accepts either an array of records or a column-oriented object
/// `{name: [values...]}` (the shape produced by result exports).
pub fn parse_json(bytes: &[u8]) -> Result<DataFrame, IngestError> {
    let doc: Json = serde_json::from_slice(bytes).map_err(|e| IngestError::Parse {
        row: e.line(),
        col: e.column(),
        message: e.to_string(),
    })?;
    frame_from_json(&doc)
}

pub fn frame_from_json(doc: &Json) -> Result<DataFrame, IngestError> {
    let (names, cells): (Vec<String>, Vec<Vec<Json>>) = match doc {
        Json::Array(records) => {
            let mut names: Vec<String> = Vec::new();
            for rec in records {
                let obj = rec
                    .as_object()
                    .ok_or_else(|| IngestError::ShapeMismatch("records must be objects".into()))?;
                for key in obj.keys() {
                    if !names.contains(key) {
                        names.push(key.clone());
                    }
                }
            }
            let cells = names
                .iter()
                .map(|n| records.iter().map(|r| r.get(n).cloned().unwrap_or(Json::Null)).collect())
                .collect();
            (names, cells)
        }
        Json::Object(map) => {
            let mut len = None;
            let mut names = Vec::new();
            let mut cells = Vec::new();
            for (k, v) in map {
                let arr = v
                    .as_array()
                    .ok_or_else(|| IngestError::ShapeMismatch(format!("`{k}` is not an array")))?;
                if *len.get_or_insert(arr.len()) != arr.len() {
                    return Err(IngestError::ShapeMismatch(format!("`{k}` has a different length")));
                }
                names.push(k.clone());
                cells.push(arr.clone());
            }
            (names, cells)
        }
        _ => return Err(IngestError::ShapeMismatch("expected an array or an object".into())),
    };
    let columns = names
        .iter()
        .zip(&cells)
        .enumerate()
        .map(|(j, (n, v))| infer_json_column(n, v, j + 1))
        .collect::<Result<Vec<_>, _>>()?;
    let rows = cells.first().map_or(0, Vec::len);
    DataFrame::from_arcs(columns.into_iter().map(std::sync::Arc::new).collect(), Some(rows))
        .map_err(|e| IngestError::ShapeMismatch(e.to_string()))
}

fn infer_json_column(name: &str, values: &[Json], col: usize) -> Result<Column, IngestError> {
    for (i, v) in values.iter().enumerate() {
        if v.is_array() || v.is_object() {
            return Err(IngestError::Parse {
                row: i + 1,
                col,
                message: "nested values are not supported".into(),
            });
        }
    }
    let present = || values.iter().filter(|v| !v.is_null());
    if present().all(|v| v.is_i64()) {
        return Ok(Column::from_i64_options(name, &values.iter().map(Json::as_i64).collect::<Vec<_>>()));
    }
    if present().all(Json::is_number) {
        return Ok(Column::from_f64_options(name, &values.iter().map(Json::as_f64).collect::<Vec<_>>()));
    }
    if present().all(Json::is_boolean) {
        let v: Vec<Option<i64>> = values.iter().map(|v| v.as_bool().map(i64::from)).collect();
        return Ok(Column::from_i64_options(name, &v));
    }
    let text: Vec<Option<String>> = values
        .iter()
        .map(|v| match v {
            Json::Null => None,
            Json::String(s) => Some(s.clone()),
            other => Some(other.to_string()),
        })
        .collect();
    if present().all(|v| v.as_str().and_then(parse_iso_date).is_some()) {
        let v: Vec<Option<i64>> = text.iter().map(|s| s.as_deref().and_then(parse_iso_date)).collect();
        return Ok(Column::from_i64_options(name, &v));
    }
    Ok(Column::categorical(name, &text))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{ColumnData, DType, Scalar};

    #[test]
    fn csv_inference() {
        let f = parse_csv(b"a,b\n1,x\n2,y").unwrap();
        assert_eq!(f.require("a").unwrap().data(), &ColumnData::Int64(vec![1, 2]));
        assert_eq!(f.require("b").unwrap().dtype(), DType::Categorical);
        assert_eq!(f.require("b").unwrap().get(1), Scalar::Str("y"));
    }

    #[test]
    fn empty_quoted_cell_is_null() {
        let f = parse_csv(b"a,b\r\n1.5,\"\"\r\n\"\",2\r\n").unwrap();
        let a = f.require("a").unwrap();
        assert_eq!(a.dtype(), DType::Float64);
        assert_eq!(a.get(1), Scalar::Null);
        assert_eq!(f.require("b").unwrap().get(0), Scalar::Null);
    }

    #[test]
    fn quoting_and_dates() {
        let f = parse_csv(b"name,when,flag\n\"a, \"\"b\"\"\",1970-01-03,true\nc,2020-02-06,FALSE\n").unwrap();
        assert_eq!(f.require("name").unwrap().get(0), Scalar::Str("a, \"b\""));
        assert_eq!(f.require("when").unwrap().get(0), Scalar::Int(2));
        assert_eq!(format_epoch_days(18298).unwrap(), "2020-02-06");
        assert_eq!(f.require("when").unwrap().get(1), Scalar::Int(18298));
        assert_eq!(f.require("flag").unwrap().data(), &ColumnData::Int64(vec![1, 0]));
    }

    #[test]
    fn ragged_row_reports_position() {
        let err = parse_csv(b"a,b\n1,2\n3\n").unwrap_err();
        assert!(matches!(err, IngestError::Parse { row: 3, .. }), "{err:?}");
        assert_eq!(parse_csv(b""), Err(IngestError::EmptyInput));
    }

    #[test]
    fn json_records_and_columns() {
        let rec = parse_json(br#"[{"a":1,"b":"x"},{"a":2.5,"b":null}]"#).unwrap();
        assert_eq!(rec.require("a").unwrap().dtype(), DType::Float64);
        assert_eq!(rec.require("b").unwrap().null_count(), 1);
        let cols = parse_json(br#"{"a":[1,2],"d":["2020-01-01",null]}"#).unwrap();
        assert_eq!(cols.require("a").unwrap().dtype(), DType::Int64);
        assert_eq!(cols.require("d").unwrap().get(0), Scalar::Int(18262));
        assert!(matches!(parse_json(b"3"), Err(IngestError::ShapeMismatch(_))));
    }

    #[test]
    fn deterministic() {
        let bytes = b"x,y\n1,a\n,b\n3,a\n";
        assert_eq!(parse_csv(bytes).unwrap(), parse_csv(bytes).unwrap());
    }
}
