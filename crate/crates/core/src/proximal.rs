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

//! Proximal maps and projections used by the ADMM solvers.
//!
//! All operators act on `n x L` lifted matrices and are pure functions of
//! their inputs.

use crate::error::{invalid, Error, Result};
use crate::lifting::{unvec, vec_of, LiftedOperator};
use crate::linalg;
use crate::scalar::Scalar;
use nalgebra::{DMatrix, DVector};

/// Singular value thresholding, the proximal map of `tau * ||.||_*`.
pub fn svt<T: Scalar>(z: &DMatrix<T>, tau: T) -> DMatrix<T> {
    svt_with_norm(z, tau).0
}

/// [`svt`] that also returns the nuclear norm of the result.
pub fn svt_with_norm<T: Scalar>(z: &DMatrix<T>, tau: T) -> (DMatrix<T>, T) {
    assert!(tau >= T::zero(), "svt threshold must be nonnegative");
    if z.is_empty() {
        return (z.clone(), T::zero());
    }
    let svd = linalg::thin_svd(z).expect("SVD of a finite matrix");
    let mut out = DMatrix::zeros(z.nrows(), z.ncols());
    let mut nuclear = T::zero();
    for (k, &s) in svd.s.iter().enumerate() {
        let shrunk = s - tau;
        if shrunk > T::zero() {
            nuclear += shrunk;
            out.ger(shrunk, &svd.u.column(k), &svd.v.column(k), T::one());
        }
    }
    (out, nuclear)
}

pub fn nuclear_norm<T: Scalar>(z: &DMatrix<T>) -> T {
    if z.is_empty() {
        return T::zero();
    }
    linalg::singular_values(z)
        .expect("SVD of a finite matrix")
        .iter()
        .fold(T::zero(), |a, &s| a + s)
}

/// Euclidean norm of each row.
pub fn row_norms<T: Scalar>(z: &DMatrix<T>) -> Vec<T> {
    z.row_iter().map(|r| r.norm()).collect()
}

/// Sum of row norms.
pub fn l21_norm<T: Scalar>(z: &DMatrix<T>) -> T {
    row_norms(z).into_iter().fold(T::zero(), |a, r| a + r)
}

/// Indices of the nonzero rows (`||Z||_{2,0}` is their count).
pub fn row_support<T: Scalar>(z: &DMatrix<T>) -> Vec<usize> {
    z.row_iter()
        .enumerate()
        .filter(|(_, r)| r.iter().any(|&v| v != T::zero()))
        .map(|(i, _)| i)
        .collect()
}

/// Row-wise soft thresholding, the proximal map of `tau * ||.||_{2,1}`.
pub fn prox_l21<T: Scalar>(z: &DMatrix<T>, tau: T) -> DMatrix<T> {
    assert!(tau >= T::zero(), "l21 threshold must be nonnegative");
    let mut out = z.clone();
    for (i, norm) in row_norms(z).into_iter().enumerate() {
        let scale = if norm > tau {
            T::one() - tau / norm
        } else {
            T::zero()
        };
        out.row_mut(i).scale_mut(scale);
    }
    out
}

/// Projection onto `{Z : ||Z||_{2,0} <= s}`: keep the `s` rows with the
/// largest Euclidean norms and zero the rest. Among rows of equal norm the
/// lower index is kept.
pub fn project_l20<T: Scalar>(zbar: &DMatrix<T>, s: usize) -> DMatrix<T> {
    let n = zbar.nrows();
    assert!(s <= n, "sparsity budget {s} exceeds row count {n}");
    if row_support(zbar).len() <= s {
        return zbar.clone();
    }
    let norms: Vec<T> = zbar.row_iter().map(|r| r.norm_squared()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    // stable sort keeps ascending index order inside ties
    order.sort_by(|&a, &b| {
        norms[b]
            .partial_cmp(&norms[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut out = DMatrix::zeros(n, zbar.ncols());
    for &i in &order[..s] {
        out.set_row(i, &zbar.row(i));
    }
    out
}

/// The data-fidelity set `D = {Z : ||y_hat - M vec(Z)||_2 <= epsilon}`.
/// `epsilon = 0` is the affine set `M vec(Z) = y_hat`.
#[derive(Debug, Clone)]
pub struct FidelitySet<'a, T: Scalar> {
    lifted: &'a LiftedOperator<T>,
    y_hat: DVector<T>,
    epsilon: T,
    /// `y_hat` in the left singular basis of `M`.
    y_coords: DVector<T>,
    /// Norm of the component of `y_hat` outside range(M).
    y_perp: T,
}

/// Secular-equation iteration cap.
const SECULAR_MAX_STEPS: usize = 128;
const SECULAR_REL_TOL: f64 = 1e-10;

impl<'a, T: Scalar> FidelitySet<'a, T> {
    pub fn new(lifted: &'a LiftedOperator<T>, y_hat: DVector<T>, epsilon: T) -> Result<Self> {
        if y_hat.len() != lifted.n() {
            return Err(Error::DimensionMismatch {
                expected: lifted.n(),
                actual: y_hat.len(),
            });
        }
        if !(epsilon >= T::zero()) || !epsilon.is_finite() {
            return Err(invalid(format!(
                "fidelity radius must be finite and >= 0, got {epsilon}"
            )));
        }
        let svd = lifted.svd();
        let y_coords = svd.left.tr_mul(&y_hat);
        let y_perp = (&y_hat - &svd.left * &y_coords).norm();
        let slack = T::machine_epsilon().sqrt() * y_hat.norm().max(T::one());
        if y_perp > epsilon + slack {
            return Err(Error::Infeasible {
                residual: y_perp.to_f64_lossy(),
                epsilon: epsilon.to_f64_lossy(),
            });
        }
        Ok(Self {
            lifted,
            y_hat,
            epsilon,
            y_coords,
            y_perp,
        })
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    pub fn y_hat(&self) -> &DVector<T> {
        &self.y_hat
    }

    pub fn lifted(&self) -> &LiftedOperator<T> {
        self.lifted
    }

    /// `||y_hat - M vec(Z)||_2`.
    pub fn residual(&self, z: &DMatrix<T>) -> T {
        (self.lifted.apply(z) - &self.y_hat).norm()
    }

    pub fn contains(&self, z: &DMatrix<T>) -> bool {
        self.residual(z) <= self.epsilon
    }

    /// Euclidean projection of `zbar` onto the set.
    pub fn project(&self, zbar: &DMatrix<T>) -> DMatrix<T> {
        self.project_with_residual(zbar).0
    }

    /// Projection together with the residual norm of the projected point.
    pub fn project_with_residual(&self, zbar: &DMatrix<T>) -> (DMatrix<T>, T) {
        let (n, l) = (self.lifted.n(), self.lifted.filter_len());
        assert_eq!(zbar.shape(), (n, l), "fidelity projection shape mismatch");
        let svd = self.lifted.svd();
        let v = vec_of(zbar);
        let mv = self.lifted.matrix() * &v;
        let resid = (&mv - &self.y_hat).norm();
        if resid <= self.epsilon {
            return (zbar.clone(), resid);
        }
        // residual coordinates in the left singular basis; the part of the
        // residual outside range(M) is -y_perp and cannot be reduced
        let c = svd.left.tr_mul(&mv) - &self.y_coords;

        let step = if self.epsilon == T::zero() {
            // minimum-norm correction onto M z = y_hat
            c.component_div(&svd.sigma)
        } else {
            let lambda = self.solve_secular(&c);
            DVector::from_iterator(
                c.len(),
                c.iter()
                    .zip(svd.sigma.iter())
                    .map(|(&ci, &si)| lambda * si * ci / (T::one() + lambda * si * si)),
            )
        };
        let z = v - &svd.right * &step;
        let mut acc = self.y_perp * self.y_perp;
        for ((&ci, &si), &ti) in c.iter().zip(svd.sigma.iter()).zip(step.iter()) {
            let r = ci - si * ti;
            acc += r * r;
        }
        (unvec(&z, n, l), acc.sqrt())
    }

    /// Residual norm after a correction with multiplier `lambda`.
    fn phi(&self, c: &DVector<T>, lambda: T) -> T {
        let sigma = &self.lifted.svd().sigma;
        let mut acc = self.y_perp * self.y_perp;
        for (&ci, &si) in c.iter().zip(sigma.iter()) {
            let t = ci / (T::one() + lambda * si * si);
            acc += t * t;
        }
        acc.sqrt()
    }

    /// d(phi)/d(lambda).
    fn phi_prime(&self, c: &DVector<T>, lambda: T, phi: T) -> T {
        let sigma = &self.lifted.svd().sigma;
        let mut acc = T::zero();
        for (&ci, &si) in c.iter().zip(sigma.iter()) {
            let d = T::one() + lambda * si * si;
            acc -= ci * ci * si * si / (d * d * d);
        }
        acc / phi
    }

    /// Finds `lambda >= 0` with `phi(lambda) = epsilon` by safeguarded Newton
    /// on a bracket `[lo, hi]` with `phi(hi) <= epsilon`. The returned
    /// multiplier satisfies `phi <= epsilon * (1 + 1e-10)`.
    fn solve_secular(&self, c: &DVector<T>) -> T {
        let eps = self.epsilon;
        let two = T::lit(2.0);
        let tol = T::lit(SECULAR_REL_TOL);

        let mut lo = T::zero();
        let mut hi = T::one();
        // doubling is bounded by the exponent range of the scalar type
        for _ in 0..2048 {
            if self.phi(c, hi) <= eps || !hi.is_finite() {
                break;
            }
            lo = hi;
            hi *= two;
        }

        let mut lambda = hi;
        for _ in 0..SECULAR_MAX_STEPS {
            let phi = self.phi(c, lambda);
            if (phi - eps).abs() <= tol * eps {
                break;
            }
            if phi > eps {
                lo = lambda;
            } else {
                hi = lambda;
            }
            let dphi = self.phi_prime(c, lambda, phi);
            let newton = lambda - (phi - eps) / dphi;
            lambda = if dphi < T::zero() && newton > lo && newton < hi {
                newton
            } else {
                (lo + hi) / two
            };
            if (hi - lo) <= tol * hi {
                lambda = hi;
                break;
            }
        }
        if self.phi(c, lambda) > eps * (T::one() + tol) {
            hi
        } else {
            lambda
        }
    }
}

/// Free-function form of [`FidelitySet::project`].
pub fn project_fidelity<T: Scalar>(set: &FidelitySet<'_, T>, zbar: &DMatrix<T>) -> DMatrix<T> {
    set.project(zbar)
}
