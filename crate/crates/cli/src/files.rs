/*
Copyright 2026 The graph-deblur Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

use crate::CliError;
use graph_deblur::solvers::SolverConfigRecord;
use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

/// Observation written by `diffuse`. Ground-truth fields are optional so that
/// externally produced measurements can be solved as well.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasurementFile {
    #[serde(default)]
    pub schema: Option<String>,
    pub n: usize,
    /// Vertex-domain observation.
    pub y: Vec<f64>,
    #[serde(default)]
    pub noise_sigma: Option<f64>,
    #[serde(default)]
    pub x_true: Option<Vec<f64>>,
    #[serde(default)]
    pub h_true: Option<Vec<f64>>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruth {
    pub x_true: Vec<f64>,
    pub h_true: Vec<f64>,
    pub support: Vec<usize>,
    pub rmse: f64,
}

/// Output of `solve`. `z_final` is stored row by row and can be fed back
/// through `--init`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveOutput {
    pub schema: String,
    pub method: String,
    pub n: usize,
    pub filter_len: usize,
    pub epsilon: f64,
    pub config: SolverConfigRecord,
    pub x_hat: Vec<f64>,
    pub h_hat: Vec<f64>,
    pub support: Vec<usize>,
    pub z_final: Vec<Vec<f64>>,
    pub fidelity_residual: f64,
    pub consensus_gap: f64,
    pub iterations: usize,
    pub converged: bool,
    pub final_rho: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<GroundTruth>,
}

pub fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>, CliError> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(CliError::usage("z_final rows have unequal lengths"));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

/// Reads a JSON input. A missing or malformed input file is a usage error.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let file = File::open(path)
        .map_err(|e| CliError::usage(format!("cannot open {}: {e}", path.display())))?;
    serde_json::from_reader(BufReader::new(file))
        .map_err(|e| CliError::usage(format!("cannot parse {}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}
