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

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Scalar;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Resolves the scale ambiguity `x h^T = (c x)(h / c)^T` of a rank-one factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ScaleRule {
    /// `h_0 = 1`.
    #[default]
    #[serde(rename = "h0=1")]
    UnitFirstTap,
    /// `||h|| = 1` with `h_0 >= 0`.
    UnitH,
}

impl std::str::FromStr for ScaleRule {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "h0=1" | "h0" => Ok(Self::UnitFirstTap),
            "unit-h" => Ok(Self::UnitH),
            other => Err(format!(
                "unknown scale rule '{other}' (expected h0=1 or unit-h)"
            )),
        }
    }
}

const DEGENERATE_FIRST_TAP: f64 = 1e-8;

/// Leading singular triple of `z` split into `(x_hat, h_hat)` with
/// `x_hat h_hat^T` equal to the best rank-one approximation of `z`.
pub fn rank1_factor<T: Scalar>(
    z: &DMatrix<T>,
    rule: ScaleRule,
) -> Result<(DVector<T>, DVector<T>)> {
    let (sigma, u, v) = leading_triple(z)?;
    let v0 = v[0];
    match rule {
        ScaleRule::UnitFirstTap => {
            if v0.abs() < T::lit(DEGENERATE_FIRST_TAP) * v.norm() {
                return Err(Error::DegenerateScale(v0.to_f64_lossy()));
            }
            Ok((u * (sigma * v0), v / v0))
        }
        ScaleRule::UnitH => {
            let sign = if v0 < T::zero() { -T::one() } else { T::one() };
            Ok((u * (sigma * sign), v * sign))
        }
    }
}

/// Factors a vertical stack of `p` blocks `Z_p = x_p h^T` (each `n x L`) with
/// one shared filter. Returns the per-block signals and the filter.
pub fn rank1_factor_stacked<T: Scalar>(
    stacked: &DMatrix<T>,
    blocks: usize,
    rule: ScaleRule,
) -> Result<(Vec<DVector<T>>, DVector<T>)> {
    let n = stacked.nrows() / blocks;
    let (x, h) = rank1_factor(stacked, rule)?;
    let xs = (0..blocks).map(|p| x.rows(p * n, n).into_owned()).collect();
    Ok((xs, h))
}

fn leading_triple<T: Scalar>(z: &DMatrix<T>) -> Result<(T, DVector<T>, DVector<T>)> {
    if z.is_empty() || z.iter().all(|&v| v == T::zero()) {
        return Err(Error::ZeroMatrix);
    }
    let svd = linalg::thin_svd(z)?;
    let sigma = svd.s[0];
    if sigma == T::zero() {
        return Err(Error::ZeroMatrix);
    }
    let v = svd.v.column(0).into_owned();
    // u = Z v / sigma keeps zero rows of Z exactly zero in x_hat
    let u = z * &v / sigma;
    Ok((sigma, u, v))
}
