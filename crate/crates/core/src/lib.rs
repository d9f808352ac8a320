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

//! Blind deconvolution of sparse sources diffused on graphs.
//!
//! A signal `x` with a few active nodes is diffused by an unknown polynomial
//! graph filter `h`; from the observation we recover both. The bilinear
//! measurement is lifted to the rank-one matrix `Z = x h^T`, which is then
//! estimated either by a convex nuclear-norm / row-sparsity program or by a
//! non-convex ADMM that enforces an exact cap on the number of sources.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` aliases below fix the precision used by the experiment harness and
//! the CLI.
//!
//! ```
//! use graph_deblur::prelude::*;
//!
//! let g: Graph64 = build_random_sensor_graph(32, 6, 1).unwrap();
//! let sd = spectral_decompose(&g, true).unwrap();
//! let h = FilterCoeffs::from_slice(&[1.0, 0.8, 0.3]).unwrap();
//! let x = make_sparse_source::<f64>(32, 2, AmplitudeRule::Fixed, 5).unwrap();
//! let m = diffuse_and_measure(&sd, &h, &x, 0.0, 0).unwrap();
//!
//! let op = LiftedOperator::new(&sd, 3).unwrap();
//! let convex = solve_convex(&op, &m.y_hat, &SolverConfig::default()).unwrap();
//! let cfg = SolverConfig { sparsity: 2, epsilon: 1e-8, ..Default::default() };
//! let sparse = solve_ssparse(&op, &m.y_hat, &cfg, &convex.z_final).unwrap();
//! assert!(graph_deblur::proximal::row_support(&sparse.z_final).len() <= 2);
//! ```

// Parameter checks use `!(x > 0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod graphs;
pub mod lifting;
pub mod linalg;
pub mod proximal;
pub mod scalar;
pub mod solvers;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Schema tag carried by every file the library writes.
pub const SCHEMA: &str = "graph-deblur/v1";

pub type Graph64 = graphs::Graph<f64>;
pub type Graph32 = graphs::Graph<f32>;
pub type SpectralDecomposition64 = graphs::SpectralDecomposition<f64>;
pub type SpectralDecomposition32 = graphs::SpectralDecomposition<f32>;
pub type LiftedOperator64 = lifting::LiftedOperator<f64>;
pub type LiftedOperator32 = lifting::LiftedOperator<f32>;
pub type FilterCoeffs64 = lifting::FilterCoeffs<f64>;
pub type SolverConfig64 = solvers::SolverConfig<f64>;
pub type SolverConfig32 = solvers::SolverConfig<f32>;
pub type DeconvResult64 = solvers::DeconvResult<f64>;
pub type DeconvResult32 = solvers::DeconvResult<f32>;

pub mod prelude {
    pub use crate::experiments::{make_sparse_source, restore_ratio, rmse, AmplitudeRule};
    pub use crate::graphs::{
        build_community_graph, build_random_sensor_graph, spectral_decompose, Graph,
        SpectralDecomposition,
    };
    pub use crate::lifting::{
        apply_graph_filter, diffuse_and_measure, vandermonde, FilterCoeffs, LiftedOperator,
        Measurement,
    };
    pub use crate::proximal::{project_l20, prox_l21, svt, FidelitySet};
    pub use crate::solvers::{
        rank1_factor, solve_convex, solve_convex_multi, solve_ssparse, solve_ssparse_multi,
        DeconvResult, ScaleRule, SolverConfig,
    };
    pub use crate::{Graph32, Graph64, Scalar};
}
