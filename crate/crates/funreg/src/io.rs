//! Long-format CSV and JSON files.
//!
//! Datasets use the header `subject_id,variable_id,role,time,value`, one
//! observation per row, rows in any order. Predictions drop the role column:
//! `subject_id,variable_id,time,value`. Numbers are written in Rust's
//! shortest round-trip form, so reading a written file gives back the same
//! bits.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use funreg_core::pipeline::PredictionSet;
use funreg_core::{CurveSet, FunctionalDataset, Interval, Record, Role, Schema};

use crate::error::{Error, Result};

pub const DATASET_HEADER: &str = "subject_id,variable_id,role,time,value";
pub const PREDICTION_HEADER: &str = "subject_id,variable_id,time,value";

/// Per-side grid sizes declared next to the channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSizes {
    pub covariate: usize,
    pub response: usize,
}

/// The schema file: channel ids, domains and (optionally) grid sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemaFile {
    pub covariates: Vec<String>,
    pub responses: Vec<String>,
    pub covariate_domain: Interval,
    pub response_domain: Interval,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_size: Option<GridSizes>,
}

impl SchemaFile {
    pub fn schema(&self) -> Schema {
        Schema {
            covariates: self.covariates.clone(),
            responses: self.responses.clone(),
            covariate_domain: self.covariate_domain,
            response_domain: self.response_domain,
        }
    }

    pub fn from_schema(schema: &Schema) -> Self {
        Self {
            covariates: schema.covariates.clone(),
            responses: schema.responses.clone(),
            covariate_domain: schema.covariate_domain,
            response_domain: schema.response_domain,
            grid_size: None,
        }
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, &e))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    std::fs::write(path, text).map_err(Error::io(path))
}

pub fn read_schema(path: &Path) -> Result<SchemaFile> {
    read_json(path)
}

fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn reader(path: &Path, expected: &'static str) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(Error::io(path))?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let found = rdr
        .headers()
        .map_err(|e| Error::MalformedRow {
            path: path.into(),
            line: 1,
            message: e.to_string(),
        })?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if found != expected {
        return Err(Error::BadHeader {
            path: path.into(),
            expected,
            found,
        });
    }
    Ok(rdr)
}

fn header_of(path: &Path) -> Result<String> {
    let file = File::open(path).map_err(Error::io(path))?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let h = rdr.headers().map_err(|e| Error::MalformedRow {
        path: path.into(),
        line: 1,
        message: e.to_string(),
    })?;
    Ok(h.iter().collect::<Vec<_>>().join(","))
}

fn parse_number(path: &Path, line: u64, field: &str, what: &str) -> Result<f64> {
    match field.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::MalformedRow {
            path: path.into(),
            line,
            message: format!("{what} {field:?} is not a finite number"),
        }),
    }
}

/// Every row of a dataset file.
pub fn read_records(path: &Path) -> Result<Vec<Record>> {
    let mut rdr = reader(path, DATASET_HEADER)?;
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| Error::MalformedRow {
            path: path.into(),
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let role = row[2].parse::<Role>().map_err(|_| Error::MalformedRow {
            path: path.into(),
            line,
            message: format!("role {:?} is neither covariate nor response", &row[2]),
        })?;
        out.push(Record {
            subject: row[0].to_string(),
            variable: row[1].to_string(),
            role,
            time: parse_number(path, line, &row[3], "time")?,
            value: parse_number(path, line, &row[4], "value")?,
        });
    }
    Ok(out)
}

/// Reads and validates a dataset against `schema`.
pub fn load_dataset(path: &Path, schema: &Schema) -> Result<FunctionalDataset> {
    Ok(FunctionalDataset::from_records(schema, read_records(path)?)?)
}

pub fn write_dataset(path: &Path, data: &FunctionalDataset) -> Result<()> {
    let file = File::create(path).map_err(Error::io(path))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let io = |e: csv::Error| Error::Io {
        path: path.into(),
        source: e.into(),
    };
    w.write_record(DATASET_HEADER.split(',')).map_err(io)?;
    for r in data.records() {
        w.write_record([
            r.subject.as_str(),
            r.variable.as_str(),
            r.role.as_str(),
            &fmt_f64(r.time),
            &fmt_f64(r.value),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(Error::io(path))
}

/// One row per subject, response channel and grid point.
pub fn write_predictions(path: &Path, pred: &PredictionSet) -> Result<()> {
    let file = File::create(path).map_err(Error::io(path))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let io = |e: csv::Error| Error::Io {
        path: path.into(),
        source: e.into(),
    };
    w.write_record(PREDICTION_HEADER.split(',')).map_err(io)?;
    for (id, row) in pred.subject_ids.iter().zip(&pred.values) {
        for (name, curve) in pred.channels.iter().zip(row) {
            for (t, v) in pred.grid.points().iter().zip(curve) {
                w.write_record([id.as_str(), name.as_str(), &fmt_f64(*t), &fmt_f64(*v)])
                    .map_err(io)?;
            }
        }
    }
    w.flush().map_err(Error::io(path))
}

/// Curves from either a predictions file or a dataset file. From a dataset
/// only the response rows are taken, so observed responses can serve as the
/// truth for `evaluate`.
pub fn read_curves(path: &Path) -> Result<CurveSet> {
    let header = header_of(path)?;
    let points: Vec<(String, String, f64, f64)> = if header == PREDICTION_HEADER {
        let mut rdr = reader(path, PREDICTION_HEADER)?;
        let mut pts = Vec::new();
        for row in rdr.records() {
            let row = row.map_err(|e| Error::MalformedRow {
                path: path.into(),
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })?;
            let line = row.position().map_or(0, |p| p.line());
            pts.push((
                row[0].to_string(),
                row[1].to_string(),
                parse_number(path, line, &row[2], "time")?,
                parse_number(path, line, &row[3], "value")?,
            ));
        }
        pts
    } else if header == DATASET_HEADER {
        read_records(path)?
            .into_iter()
            .filter(|r| r.role == Role::Response)
            .map(|r| (r.subject, r.variable, r.time, r.value))
            .collect()
    } else {
        return Err(Error::BadHeader {
            path: path.into(),
            expected: PREDICTION_HEADER,
            found: header,
        });
    };
    if points.is_empty() {
        return Err(Error::Config(format!("{}: no response observations", path.display())));
    }
    Ok(CurveSet::from_points(points)?)
}

/// Writes `text` followed by a newline, creating parent directories.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(Error::io(dir))?;
    }
    let file = File::create(path).map_err(Error::io(path))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{text}").map_err(Error::io(path))?;
    w.flush().map_err(Error::io(path))
}
