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

use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;
use nalgebra::DVector;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// How planted source amplitudes are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum AmplitudeRule {
    /// Every source has amplitude 1.
    #[default]
    Fixed,
    /// Amplitudes uniform in `[lo, hi]`.
    Uniform { lo: f64, hi: f64 },
}

/// Signal with exactly `s` nonzero entries at uniformly random distinct nodes.
pub fn make_sparse_source<T: Scalar>(
    n: usize,
    s: usize,
    amplitude: AmplitudeRule,
    seed: u64,
) -> Result<DVector<T>> {
    if s == 0 || s > n {
        return Err(invalid(format!(
            "source count must lie in [1, {n}], got {s}"
        )));
    }
    if let AmplitudeRule::Uniform { lo, hi } = amplitude {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi && (lo > 0.0 || hi < 0.0)) {
            return Err(invalid(format!(
                "amplitude range [{lo}, {hi}] must be finite and exclude zero"
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut support = index::sample(&mut rng, n, s).into_vec();
    support.sort_unstable();
    let mut x = DVector::zeros(n);
    for i in support {
        x[i] = match amplitude {
            AmplitudeRule::Fixed => T::one(),
            AmplitudeRule::Uniform { lo, hi } => T::lit(rng.random_range(lo..=hi)),
        };
    }
    Ok(x)
}

/// Root-mean-square error as used in the evaluation: the plain Euclidean norm
/// of the difference, without a `1/sqrt(n)` factor.
pub fn rmse<T: Scalar>(x_hat: &DVector<T>, x_true: &DVector<T>) -> Result<T> {
    if x_hat.len() != x_true.len() {
        return Err(Error::DimensionMismatch {
            expected: x_true.len(),
            actual: x_hat.len(),
        });
    }
    Ok((x_hat - x_true).norm())
}

/// Nonzero entries of a signal.
pub fn support_of<T: Scalar>(x: &DVector<T>) -> BTreeSet<usize> {
    x.iter()
        .enumerate()
        .filter(|(_, &v)| v != T::zero())
        .map(|(i, _)| i)
        .collect()
}

/// Mean over trials of `|est ∩ true| / |true|`.
pub fn restore_ratio(trials: &[(BTreeSet<usize>, BTreeSet<usize>)]) -> Result<f64> {
    if trials.is_empty() {
        return Err(invalid("restore_ratio needs at least one trial"));
    }
    let mut acc = 0.0;
    for (est, truth) in trials {
        if truth.is_empty() {
            return Err(invalid("true support of a trial is empty"));
        }
        acc += est.intersection(truth).count() as f64 / truth.len() as f64;
    }
    Ok(acc / trials.len() as f64)
}
