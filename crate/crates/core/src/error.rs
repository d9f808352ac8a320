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

use thiserror::Error;

/// Errors produced by graph construction, operators, solvers and experiments.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("could not generate a connected graph after {attempts} attempts")]
    Disconnected { attempts: usize },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error(
        "infeasible fidelity set: residual orthogonal to range(M) is {residual:e}, radius is {epsilon:e}"
    )]
    Infeasible { residual: f64, epsilon: f64 },

    #[error("cannot factor a zero matrix")]
    ZeroMatrix,

    #[error("leading right singular vector has a vanishing first entry ({0:e}); use the unit-h scale rule")]
    DegenerateScale(f64),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
