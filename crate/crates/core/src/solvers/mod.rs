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

//! ADMM solvers for the lifted blind deconvolution problem.
//!
//! Both solvers split the problem into a consensus variable `W` constrained
//! to the data-fidelity set and two local copies `Z1`, `Z2` handled by
//! proximal maps:
//!
//! | solver             | `Z1` step          | `Z2` step                   | `W` set          |
//! |--------------------|--------------------|-----------------------------|------------------|
//! | [`solve_convex`]   | SVT, threshold rho | row shrinkage, `tau * rho`  | `M vec(W) = y`   |
//! | [`solve_ssparse`]  | SVT, threshold rho | keep top-`S` rows           | `‖y - M vec(W)‖ <= eps` |
//!
//! Duals are updated last, `Y_k += W - Z_k`, and for the S-sparse solver the
//! penalty decays geometrically, `rho_k = rho0 * eta^k`.
//!
//! The multi-measurement variants stack `P` blocks `Z_p = x_p h^T` that share
//! the filter: the nuclear norm acts on the vertical stack (`nP x L`), the
//! row-sparsity term on the horizontal stack (`n x PL`) for the convex
//! solver, or per block for the S-sparse solver.

mod admm;
mod factor;

pub use admm::{
    solve_convex, solve_convex_multi, solve_ssparse, solve_ssparse_multi, DeconvResult,
    IterationRecord, MultiDeconvResult, SolverState,
};
pub use factor::{rank1_factor, rank1_factor_stacked, ScaleRule};

use crate::error::{invalid, Result};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Initial penalty. Small values keep the S-sparse iteration close to its
/// starting point, which is what makes a convex warm start pay off.
pub const DEFAULT_RHO0: f64 = 0.01;

/// With a small penalty the late iterations behave like alternating
/// projections and need many steps to reach `tol` on noiseless data.
pub const DEFAULT_MAX_ITER: usize = 30_000;

/// Solver parameters. `tau` is only read by the convex solver, `sparsity` and
/// `epsilon` only by the S-sparse solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig<T: Scalar> {
    pub rho0: T,
    pub eta: T,
    pub epsilon: T,
    pub tau: T,
    pub sparsity: usize,
    pub max_iter: usize,
    pub tol: T,
    pub scale_rule: ScaleRule,
}

impl<T: Scalar> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            rho0: T::lit(DEFAULT_RHO0),
            eta: T::lit(0.99),
            epsilon: T::zero(),
            tau: T::one(),
            sparsity: 3,
            max_iter: DEFAULT_MAX_ITER,
            tol: T::lit(1e-6),
            scale_rule: ScaleRule::UnitFirstTap,
        }
    }
}

impl<T: Scalar> SolverConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho0 > T::zero()) {
            return Err(invalid(format!("rho0 must be > 0, got {}", self.rho0)));
        }
        if !(self.eta > T::zero() && self.eta <= T::one()) {
            return Err(invalid(format!("eta must lie in (0, 1], got {}", self.eta)));
        }
        if !(self.epsilon >= T::zero()) || !self.epsilon.is_finite() {
            return Err(invalid(format!(
                "epsilon must be >= 0, got {}",
                self.epsilon
            )));
        }
        if !(self.tau >= T::zero()) || !self.tau.is_finite() {
            return Err(invalid(format!("tau must be >= 0, got {}", self.tau)));
        }
        if self.max_iter == 0 {
            return Err(invalid("max_iter must be >= 1"));
        }
        if !(self.tol > T::zero()) {
            return Err(invalid(format!("tol must be > 0, got {}", self.tol)));
        }
        Ok(())
    }

    /// Penalty in effect during iteration `k` (0-based).
    pub fn rho_at(&self, k: usize) -> T {
        self.rho0 * self.eta.powi(k as i32)
    }

    pub fn to_f64(&self) -> SolverConfigRecord {
        SolverConfigRecord {
            rho0: self.rho0.to_f64_lossy(),
            eta: self.eta.to_f64_lossy(),
            epsilon: self.epsilon.to_f64_lossy(),
            tau: self.tau.to_f64_lossy(),
            sparsity: self.sparsity,
            max_iter: self.max_iter,
            tol: self.tol.to_f64_lossy(),
            scale_rule: self.scale_rule,
        }
    }
}

/// Serializable echo of a [`SolverConfig`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfigRecord {
    pub rho0: f64,
    pub eta: f64,
    pub epsilon: f64,
    pub tau: f64,
    pub sparsity: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub scale_rule: ScaleRule,
}

impl SolverConfigRecord {
    pub fn to_config<T: Scalar>(&self) -> SolverConfig<T> {
        SolverConfig {
            rho0: T::lit(self.rho0),
            eta: T::lit(self.eta),
            epsilon: T::lit(self.epsilon),
            tau: T::lit(self.tau),
            sparsity: self.sparsity,
            max_iter: self.max_iter,
            tol: T::lit(self.tol),
            scale_rule: self.scale_rule,
        }
    }
}

/// Noise-aware fidelity radius: `1.1 * sigma * sqrt(n)`. With an orthogonal
/// graph Fourier basis the frequency-domain noise has the same norm as the
/// vertex-domain noise, whose expectation is about `sigma * sqrt(n)`.
pub fn default_epsilon(noise_sigma: f64, n: usize) -> f64 {
    noise_sigma * (n as f64).sqrt() * 1.1
}

/// Writes a per-iteration trace as CSV.
pub fn write_trace_csv<W: Write>(records: &[IterationRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        SolverConfig::<f64>::default().validate().unwrap();
        SolverConfig::<f32>::default().validate().unwrap();
    }

    #[test]
    fn invalid_configs_rejected() {
        let base = SolverConfig::<f64>::default();
        for bad in [
            SolverConfig { rho0: 0.0, ..base },
            SolverConfig { eta: 0.0, ..base },
            SolverConfig { eta: 1.5, ..base },
            SolverConfig {
                epsilon: -1.0,
                ..base
            },
            SolverConfig { tau: -0.1, ..base },
            SolverConfig {
                max_iter: 0,
                ..base
            },
            SolverConfig { tol: 0.0, ..base },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn record_round_trip() {
        let cfg = SolverConfig::<f64> {
            epsilon: 0.25,
            sparsity: 4,
            ..Default::default()
        };
        assert_eq!(cfg.to_f64().to_config::<f64>(), cfg);
    }

    #[test]
    fn epsilon_rule() {
        assert!((default_epsilon(0.1, 64) - 0.88).abs() < 1e-12);
        assert_eq!(default_epsilon(0.0, 64), 0.0);
    }
}
