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

//! Polynomial graph filters and the lifted measurement operator.
//!
//! A filtered signal observed in the graph frequency domain is bilinear in the
//! source `x` and the filter taps `h`:
//!
//! ```text
//! y_hat = U y = diag(Psi h) U x
//! ```
//!
//! and becomes linear in the rank-one matrix `Z = x h^T`:
//! `y_hat = M vec(Z)`, where column `j*n + i` of `M` is `Psi[:, j] .* U[:, i]`.
//! `vec` stacks the columns of the `n x L` matrix `Z` (column-major), which is
//! exactly nalgebra's storage order.

use crate::error::{invalid, Error, Result};
use crate::graphs::SpectralDecomposition;
use crate::scalar::Scalar;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Polynomial filter taps `h_0 .. h_{L-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterCoeffs<T: Scalar>(DVector<T>);

impl<T: Scalar> FilterCoeffs<T> {
    pub fn new(taps: DVector<T>) -> Result<Self> {
        if taps.is_empty() {
            return Err(invalid("filter needs at least one coefficient"));
        }
        if taps.iter().any(|t| !t.is_finite()) {
            return Err(invalid("filter coefficients must be finite"));
        }
        Ok(Self(taps))
    }

    pub fn from_slice(taps: &[f64]) -> Result<Self> {
        Self::new(DVector::from_iterator(
            taps.len(),
            taps.iter().map(|&t| T::lit(t)),
        ))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn taps(&self) -> &DVector<T> {
        &self.0
    }

    /// Zero-padded copy of length `len` (a longer model of the same filter).
    pub fn padded(&self, len: usize) -> Self {
        let mut t = DVector::zeros(len.max(self.len()));
        t.rows_mut(0, self.len()).copy_from(&self.0);
        Self(t)
    }
}

/// Column-major vectorization of an `n x L` matrix.
pub fn vec_of<T: Scalar>(z: &DMatrix<T>) -> DVector<T> {
    DVector::from_column_slice(z.as_slice())
}

/// Inverse of [`vec_of`].
pub fn unvec<T: Scalar>(v: &DVector<T>, n: usize, l: usize) -> DMatrix<T> {
    assert_eq!(v.len(), n * l, "unvec length mismatch");
    DMatrix::from_column_slice(n, l, v.as_slice())
}

/// `n x L` matrix of eigenvalue powers: `Psi[i][j] = lambda_i^j`.
pub fn vandermonde<T: Scalar>(eigenvalues: &DVector<T>, l: usize) -> Result<DMatrix<T>> {
    if l == 0 {
        return Err(invalid("filter order L must be >= 1"));
    }
    let n = eigenvalues.len();
    let mut psi = DMatrix::zeros(n, l);
    for i in 0..n {
        let mut p = T::one();
        for j in 0..l {
            psi[(i, j)] = p;
            p *= eigenvalues[i];
        }
    }
    Ok(psi)
}

/// `(sum_l h_l S^l) x`, accumulating `S^l x` one multiplication at a time.
pub fn apply_graph_filter<T: Scalar>(
    sd: &SpectralDecomposition<T>,
    h: &FilterCoeffs<T>,
    x: &DVector<T>,
) -> Result<DVector<T>> {
    if x.len() != sd.n() {
        return Err(Error::DimensionMismatch {
            expected: sd.n(),
            actual: x.len(),
        });
    }
    let taps = h.taps();
    let mut power = x.clone();
    let mut out = x * taps[0];
    for &t in taps.iter().skip(1) {
        power = sd.operator() * &power;
        out.axpy(t, &power, T::one());
    }
    Ok(out)
}

/// Same filter applied in the spectral domain: `V diag(Psi h) V^T x`.
pub fn apply_graph_filter_spectral<T: Scalar>(
    sd: &SpectralDecomposition<T>,
    h: &FilterCoeffs<T>,
    x: &DVector<T>,
) -> Result<DVector<T>> {
    if x.len() != sd.n() {
        return Err(Error::DimensionMismatch {
            expected: sd.n(),
            actual: x.len(),
        });
    }
    let response = vandermonde(sd.eigenvalues(), h.len())? * h.taps();
    let xf = sd.u() * x;
    Ok(sd.v() * xf.component_mul(&response))
}

/// Thin SVD of `M`, truncated to its numerical rank.
#[derive(Debug, Clone)]
pub struct OperatorSvd<T: Scalar> {
    /// `n x r` left singular vectors.
    pub left: DMatrix<T>,
    /// `r` positive singular values, descending.
    pub sigma: DVector<T>,
    /// `nL x r` right singular vectors.
    pub right: DMatrix<T>,
}

impl<T: Scalar> OperatorSvd<T> {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }
}

/// The lifted operator `M` together with the pieces it was built from and its
/// cached SVD. Immutable after construction.
#[derive(Debug, Clone)]
pub struct LiftedOperator<T: Scalar> {
    m: DMatrix<T>,
    psi: DMatrix<T>,
    u: DMatrix<T>,
    svd: OperatorSvd<T>,
}

impl<T: Scalar> LiftedOperator<T> {
    pub fn new(sd: &SpectralDecomposition<T>, l: usize) -> Result<Self> {
        let psi = vandermonde(sd.eigenvalues(), l)?;
        let u = sd.u().clone();
        let n = sd.n();
        let mut m = DMatrix::zeros(n, n * l);
        for j in 0..l {
            for i in 0..n {
                let mut col = m.column_mut(j * n + i);
                col.copy_from(&u.column(i));
                col.component_mul_assign(&psi.column(j));
            }
        }
        let svd = thin_svd(&m)?;
        Ok(Self { m, psi, u, svd })
    }

    /// Wraps an arbitrary `n x nL` matrix, for exercising the projections on
    /// operators that do not come from a graph.
    #[cfg(test)]
    pub(crate) fn from_matrix(m: DMatrix<T>) -> Result<Self> {
        let n = m.nrows();
        let l = m.ncols() / n;
        let svd = thin_svd(&m)?;
        Ok(Self {
            m,
            psi: DMatrix::from_element(n, l, T::one()),
            u: DMatrix::identity(n, n),
            svd,
        })
    }

    pub fn n(&self) -> usize {
        self.m.nrows()
    }

    pub fn filter_len(&self) -> usize {
        self.psi.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.m
    }

    pub fn psi(&self) -> &DMatrix<T> {
        &self.psi
    }

    pub fn u(&self) -> &DMatrix<T> {
        &self.u
    }

    pub fn svd(&self) -> &OperatorSvd<T> {
        &self.svd
    }

    /// `M vec(Z)` for an `n x L` matrix `Z`.
    pub fn apply(&self, z: &DMatrix<T>) -> DVector<T> {
        debug_assert_eq!(z.shape(), (self.n(), self.filter_len()));
        &self.m * vec_of(z)
    }
}

fn thin_svd<T: Scalar>(m: &DMatrix<T>) -> Result<OperatorSvd<T>> {
    let svd = crate::linalg::thin_svd(m)?;
    let smax = if svd.s.is_empty() {
        T::zero()
    } else {
        svd.s[0]
    };
    let cutoff = smax * T::machine_epsilon() * T::lit(m.nrows().max(m.ncols()) as f64);
    let r = svd.s.iter().take_while(|&&s| s > cutoff).count();
    Ok(OperatorSvd {
        left: svd.u.columns(0, r).into_owned(),
        sigma: svd.s.rows(0, r).into_owned(),
        right: svd.v.columns(0, r).into_owned(),
    })
}

/// A vertex-domain observation and its graph Fourier coefficients.
#[derive(Debug, Clone)]
pub struct Measurement<T: Scalar> {
    pub y: DVector<T>,
    pub y_hat: DVector<T>,
}

impl<T: Scalar> Measurement<T> {
    pub fn from_vertex(sd: &SpectralDecomposition<T>, y: DVector<T>) -> Result<Self> {
        if y.len() != sd.n() {
            return Err(Error::DimensionMismatch {
                expected: sd.n(),
                actual: y.len(),
            });
        }
        let y_hat = sd.u() * &y;
        Ok(Self { y, y_hat })
    }
}

/// `n` i.i.d. standard normal draws from a seeded ChaCha stream.
pub fn gaussian_vector<T: Scalar>(n: usize, seed: u64, stream: u64) -> DVector<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    DVector::from_iterator(n, (0..n).map(|_| T::lit(StandardNormal.sample(&mut rng))))
}

/// Filters `x` on the graph, adds white Gaussian noise of standard deviation
/// `noise_sigma` in the vertex domain, and transforms to the frequency domain.
pub fn diffuse_and_measure<T: Scalar>(
    sd: &SpectralDecomposition<T>,
    h: &FilterCoeffs<T>,
    x: &DVector<T>,
    noise_sigma: T,
    seed: u64,
) -> Result<Measurement<T>> {
    if !(noise_sigma >= T::zero()) {
        return Err(invalid("noise_sigma must be >= 0"));
    }
    let mut y = apply_graph_filter(sd, h, x)?;
    if noise_sigma > T::zero() {
        y.axpy(
            noise_sigma,
            &gaussian_vector::<T>(sd.n(), seed, 0),
            T::one(),
        );
    }
    Measurement::from_vertex(sd, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{build_random_sensor_graph, spectral_decompose, Graph};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn path2() -> SpectralDecomposition<f64> {
        let g = Graph::from_weights(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]), None)
            .unwrap();
        spectral_decompose(&g, false).unwrap()
    }

    #[test]
    fn identity_and_shift_filters() {
        let sd =
            spectral_decompose(&build_random_sensor_graph::<f64>(8, 3, 1).unwrap(), true).unwrap();
        let x = gaussian_vector::<f64>(8, 3, 0);
        let id = apply_graph_filter(&sd, &FilterCoeffs::from_slice(&[1.0]).unwrap(), &x).unwrap();
        assert_eq!(id, x);
        let shift =
            apply_graph_filter(&sd, &FilterCoeffs::from_slice(&[0.0, 1.0]).unwrap(), &x).unwrap();
        assert!((shift - sd.operator() * &x).norm() < 1e-14);
    }

    #[test]
    fn path_graph_filter_by_hand() {
        // S = [[0,1],[1,0]], S^2 = I: y = x + 0.8 Sx + 0.3 x = [1.3, 0.8]
        let sd = path2();
        let h = FilterCoeffs::from_slice(&[1.0, 0.8, 0.3]).unwrap();
        let y = apply_graph_filter(&sd, &h, &DVector::from_vec(vec![1.0, 0.0])).unwrap();
        assert_relative_eq!(y[0], 1.3, epsilon = 1e-15);
        assert_relative_eq!(y[1], 0.8, epsilon = 1e-15);
        let ys = apply_graph_filter_spectral(&sd, &h, &DVector::from_vec(vec![1.0, 0.0])).unwrap();
        assert!((ys - y).norm() < 1e-12);
    }

    #[test]
    fn filter_dimension_mismatch() {
        let sd = path2();
        let h = FilterCoeffs::from_slice(&[1.0]).unwrap();
        assert!(matches!(
            apply_graph_filter(&sd, &h, &DVector::zeros(3)),
            Err(Error::DimensionMismatch {
                expected: 2,
                actual: 3
            })
        ));
    }

    #[test]
    fn vandermonde_examples() {
        let psi = vandermonde(&DVector::from_vec(vec![-1.0, 1.0]), 3).unwrap();
        assert_eq!(
            psi,
            DMatrix::from_row_slice(2, 3, &[1.0, -1.0, 1.0, 1.0, 1.0, 1.0])
        );
        let psi = vandermonde(&DVector::from_vec(vec![0.3, -2.0, 7.0]), 1).unwrap();
        assert_eq!(psi, DMatrix::from_element(3, 1, 1.0));
        let psi = vandermonde(&DVector::from_vec(vec![0.5]), 4).unwrap();
        assert_eq!(psi, DMatrix::from_row_slice(1, 4, &[1.0, 0.5, 0.25, 0.125]));
        assert!(vandermonde(&DVector::<f64>::zeros(2), 0).is_err());
    }

    #[test]
    fn lifted_l1_is_fourier_transform() {
        let sd =
            spectral_decompose(&build_random_sensor_graph::<f64>(5, 2, 8).unwrap(), true).unwrap();
        let op = LiftedOperator::new(&sd, 1).unwrap();
        let x = gaussian_vector::<f64>(5, 1, 0);
        let z = DMatrix::from_column_slice(5, 1, x.as_slice());
        assert!((op.apply(&z) - sd.u() * &x).norm() < 1e-14);
    }

    #[test]
    fn lifted_matrix_by_hand() {
        // U = I, eigenvalues (1,2,3), L = 2: columns 0..2 are e_i, columns 3..5 are lambda_i e_i.
        let sd = SpectralDecomposition::from_parts(
            DVector::from_vec(vec![1.0, 2.0, 3.0]),
            DMatrix::identity(3, 3),
        )
        .unwrap();
        let op = LiftedOperator::new(&sd, 2).unwrap();
        #[rustfmt::skip]
        let expected = DMatrix::from_row_slice(3, 6, &[
            1.0, 0.0, 0.0, 1.0, 0.0, 0.0,
            0.0, 1.0, 0.0, 0.0, 2.0, 0.0,
            0.0, 0.0, 1.0, 0.0, 0.0, 3.0,
        ]);
        assert_eq!(op.matrix(), &expected);
        assert_eq!(op.svd().rank(), 3);
    }

    #[test]
    fn lifting_identity_small() {
        let sd =
            spectral_decompose(&build_random_sensor_graph::<f64>(4, 2, 21).unwrap(), true).unwrap();
        let op = LiftedOperator::new(&sd, 3).unwrap();
        for t in 0..100u64 {
            let x = gaussian_vector::<f64>(4, t, 1);
            let h = gaussian_vector::<f64>(3, t, 2);
            let lhs = op.apply(&(&x * h.transpose()));
            let rhs = (op.psi() * &h).component_mul(&(sd.u() * &x));
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn operator_svd_reconstructs() {
        for seed in 0..300u64 {
            let n = 4 + (seed % 9) as usize;
            let l = 1 + (seed % 5) as usize;
            let sd = spectral_decompose(
                &build_random_sensor_graph::<f64>(n, 2.min(n - 1), seed).unwrap(),
                true,
            )
            .unwrap();
            let op = LiftedOperator::new(&sd, l).unwrap();
            let s = op.svd();
            assert_eq!(s.rank(), n);
            let rec = &s.left * DMatrix::from_diagonal(&s.sigma) * s.right.transpose();
            assert!((rec - op.matrix()).norm() < 1e-12, "seed {seed}");
            // rows of M are orthogonal with norms ||Psi_i||, so sigma >= 1
            assert!(s.sigma.iter().all(|&v| v >= 1.0 - 1e-12));
        }
    }

    #[test]
    fn noiseless_measurement_matches_lifted_model() {
        let sd =
            spectral_decompose(&build_random_sensor_graph::<f64>(12, 3, 2).unwrap(), true).unwrap();
        let h = FilterCoeffs::from_slice(&[1.0, 0.8, 0.3]).unwrap();
        let x = gaussian_vector::<f64>(12, 5, 0);
        let m = diffuse_and_measure(&sd, &h, &x, 0.0, 0).unwrap();
        let expected =
            (vandermonde(sd.eigenvalues(), 3).unwrap() * h.taps()).component_mul(&(sd.u() * &x));
        assert!((&m.y_hat - expected).norm() < 1e-9);
        assert!((&m.y_hat - sd.u() * &m.y).norm() < 1e-12);
    }

    #[test]
    fn noise_is_reproducible_and_calibrated() {
        let sd =
            spectral_decompose(&build_random_sensor_graph::<f64>(64, 6, 1).unwrap(), true).unwrap();
        let h = FilterCoeffs::from_slice(&[1.0, 0.8, 0.3]).unwrap();
        let x = DVector::zeros(64);
        let a = diffuse_and_measure(&sd, &h, &x, 0.1, 17).unwrap();
        let b = diffuse_and_measure(&sd, &h, &x, 0.1, 17).unwrap();
        assert_eq!(a.y, b.y);
        let trials = 1000;
        let mean: f64 = (0..trials)
            .map(|s| {
                diffuse_and_measure(&sd, &h, &x, 0.1, s)
                    .unwrap()
                    .y
                    .norm_squared()
                    / 64.0
            })
            .sum::<f64>()
            / trials as f64;
        assert!((mean - 0.01).abs() < 0.001, "mean noise power {mean}");
        assert!(diffuse_and_measure(&sd, &h, &x, -1.0, 0).is_err());
    }

    #[test]
    fn padded_filter() {
        let h = FilterCoeffs::<f64>::from_slice(&[1.0, 0.8, 0.3]).unwrap();
        assert_eq!(h.padded(5).taps().as_slice(), &[1.0, 0.8, 0.3, 0.0, 0.0]);
        assert!(FilterCoeffs::<f64>::from_slice(&[]).is_err());
        assert!(FilterCoeffs::<f64>::from_slice(&[f64::NAN]).is_err());
    }

    proptest! {
        #[test]
        fn vec_unvec_round_trip(n in 1usize..8, l in 1usize..6, seed in any::<u64>()) {
            let v = gaussian_vector::<f64>(n * l, seed, 0);
            let z = unvec(&v, n, l);
            prop_assert_eq!(vec_of(&z), v.clone());
            // column-major: entry (i, j) sits at j*n + i
            for j in 0..l {
                for i in 0..n {
                    prop_assert_eq!(z[(i, j)], v[j * n + i]);
                }
            }
        }

        #[test]
        fn filter_matches_spectral_route(seed in 0u64..200, l in 1usize..6) {
            let sd = spectral_decompose(&build_random_sensor_graph::<f64>(9, 3, seed).unwrap(), true).unwrap();
            let h = FilterCoeffs::new(gaussian_vector::<f64>(l, seed, 3)).unwrap();
            let x = gaussian_vector::<f64>(9, seed, 4);
            let a = apply_graph_filter(&sd, &h, &x).unwrap();
            let b = apply_graph_filter_spectral(&sd, &h, &x).unwrap();
            prop_assert!((a - b).norm() < 1e-9);
        }
    }
}
