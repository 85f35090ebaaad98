//! JSON serialization of problem instances.
//!
//! The matrix is stored row-major; floats are written in shortest
//! round-trip form, so a written instance reads back bit-for-bit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{InstanceMeta, MultiIndexSet, NoiseParts, ProblemInstance};
use crate::error::{check_len, Error, Result};
use crate::linalg::DenseMatrix;
use crate::losses::Weights;

pub const INSTANCE_FORMAT: &str = "womp-instance";
const INSTANCE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    format: String,
    version: u32,
    rows: usize,
    cols: usize,
    /// Row-major entries.
    matrix: Vec<f64>,
    y: Vec<f64>,
    weights: Vec<f64>,
    #[serde(default)]
    x_true: Option<Vec<f64>>,
    #[serde(default)]
    noise: Option<NoiseParts>,
    #[serde(default)]
    multi_indices: Option<MultiIndexSet>,
    meta: InstanceMeta,
}

impl ProblemInstance {
    pub fn to_json(&self) -> Result<String> {
        let file = InstanceFile {
            format: INSTANCE_FORMAT.into(),
            version: INSTANCE_VERSION,
            rows: self.a.rows(),
            cols: self.a.cols(),
            matrix: self.a.to_row_major(),
            y: self.y.clone(),
            weights: self.w.as_slice().to_vec(),
            x_true: self.x_true.clone(),
            noise: self.noise.clone(),
            multi_indices: self.multi_indices.clone(),
            meta: self.meta.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text)?;
        if file.format != INSTANCE_FORMAT || file.version != INSTANCE_VERSION {
            return Err(Error::InvalidParameter(format!(
                "unsupported instance format {} v{}",
                file.format, file.version
            )));
        }
        let a = DenseMatrix::from_row_major(file.rows, file.cols, &file.matrix)?;
        check_len("measurements", file.rows, file.y.len())?;
        let w = Weights::new(file.weights)?;
        check_len("weights", file.cols, w.len())?;
        if let Some(x) = &file.x_true {
            check_len("x_true", file.cols, x.len())?;
        }
        if let Some(noise) = &file.noise {
            check_len("bounded noise", file.rows, noise.bounded.len())?;
            check_len("unbounded noise", file.rows, noise.unbounded.len())?;
        }
        if let Some(set) = &file.multi_indices {
            check_len("multi-index set", file.cols, set.len())?;
        }
        if file.y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("measurements"));
        }
        Ok(Self {
            a,
            y: file.y,
            w,
            x_true: file.x_true,
            noise: file.noise,
            multi_indices: file.multi_indices,
            meta: file.meta,
        })
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}
