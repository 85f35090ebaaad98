//! CSV tables produced by the sweeps.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One `(level, lambda, trial)` cell of a tuning-parameter sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaRow {
    pub level_id: usize,
    pub level_desc: String,
    pub lambda: f64,
    pub trial: usize,
    /// NaN when the cell failed.
    pub rel_error: f64,
    pub status: String,
}

/// One iteration of one `(lambda, trial)` run of an iteration sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterRow {
    pub lambda: f64,
    pub trial: usize,
    pub k: usize,
    pub rel_error: f64,
    pub fidelity: f64,
    pub loss: f64,
    /// 1-based column index; 0 when the run failed before selecting.
    pub selected_index: usize,
    pub support_size: usize,
    pub status: String,
}

pub const LAMBDA_HEADER: &str = "level_id,level_desc,lambda,trial,rel_error,status";
pub const ITER_HEADER: &str =
    "lambda,trial,k,rel_error,fidelity,loss,selected_index,support_size,status";

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::MalformedTable(format!("{other:?}")),
    }
}

pub fn write_rows<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Serializes rows to CSV text; an empty table still gets its header.
pub fn rows_to_csv<T: Serialize>(rows: &[T], header: &str) -> Result<String> {
    if rows.is_empty() {
        return Ok(format!("{header}\n"));
    }
    let mut buf = Vec::new();
    write_rows(rows, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::MalformedTable(e.to_string()))
}

pub fn read_rows<T: for<'de> Deserialize<'de>, R: Read>(input: R) -> Result<Vec<T>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(csv_err))
        .collect()
}

/// The two table layouts, told apart by their header line.
#[derive(Debug, Clone, PartialEq)]
pub enum Table {
    Lambda(Vec<LambdaRow>),
    Iter(Vec<IterRow>),
}

impl Table {
    pub fn parse(text: &str) -> Result<Self> {
        let header = text.lines().next().unwrap_or("").trim();
        match header {
            LAMBDA_HEADER => Ok(Table::Lambda(read_rows(text.as_bytes())?)),
            ITER_HEADER => Ok(Table::Iter(read_rows(text.as_bytes())?)),
            other => Err(Error::MalformedTable(format!("unrecognized header {other:?}"))),
        }
    }

    pub fn to_csv(&self) -> Result<String> {
        match self {
            Table::Lambda(rows) => rows_to_csv(rows, LAMBDA_HEADER),
            Table::Iter(rows) => rows_to_csv(rows, ITER_HEADER),
        }
    }
}
