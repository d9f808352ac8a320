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

//! Dense decompositions backed by `faer`.
//!
//! nalgebra's built-in SVD loses all accuracy on some exactly rank-deficient
//! inputs (rank-one lifted matrices are the common case here), so every
//! decomposition in the crate goes through this module instead. Inputs are
//! widened to `f64` and results narrowed back to `T`.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use faer::{Mat, Side};
use nalgebra::{DMatrix, DVector};

/// Thin SVD `a = u diag(s) v^T` with `s` sorted in descending order.
#[derive(Debug, Clone)]
pub struct ThinSvd<T: Scalar> {
    pub u: DMatrix<T>,
    pub s: DVector<T>,
    pub v: DMatrix<T>,
}

fn to_faer<T: Scalar>(a: &DMatrix<T>) -> Mat<f64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)].to_f64_lossy())
}

/// Symmetric eigendecomposition; eigenvalues ascending, eigenvectors as columns.
/// Only the lower triangle of `a` is read.
pub fn symmetric_eigen<T: Scalar>(a: &DMatrix<T>) -> Result<(DVector<T>, DMatrix<T>)> {
    assert!(a.is_square(), "symmetric_eigen needs a square matrix");
    let n = a.nrows();
    let eig = to_faer(a)
        .as_ref()
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("symmetric eigensolver failed: {e:?}")))?;
    let (vals, vecs) = (eig.S(), eig.U());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]).then(i.cmp(&j)));
    let values = DVector::from_iterator(n, order.iter().map(|&i| T::lit(vals[i])));
    let vectors = DMatrix::from_fn(n, n, |i, k| T::lit(vecs[(i, order[k])]));
    Ok((values, vectors))
}

/// Thin SVD with `min(m, n)` singular triples.
pub fn thin_svd<T: Scalar>(a: &DMatrix<T>) -> Result<ThinSvd<T>> {
    let (m, n) = a.shape();
    let k = m.min(n);
    if k == 0 {
        return Ok(ThinSvd {
            u: DMatrix::zeros(m, 0),
            s: DVector::zeros(0),
            v: DMatrix::zeros(n, 0),
        });
    }
    let svd = to_faer(a)
        .as_ref()
        .thin_svd()
        .map_err(|e| Error::Numerical(format!("SVD failed: {e:?}")))?;
    let (su, ss, sv) = (svd.U(), svd.S(), svd.V());
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| ss[j].total_cmp(&ss[i]).then(i.cmp(&j)));
    Ok(ThinSvd {
        u: DMatrix::from_fn(m, k, |i, c| T::lit(su[(i, order[c])])),
        s: DVector::from_iterator(k, order.iter().map(|&i| T::lit(ss[i]))),
        v: DMatrix::from_fn(n, k, |i, c| T::lit(sv[(i, order[c])])),
    })
}

/// Singular values in descending order.
pub fn singular_values<T: Scalar>(a: &DMatrix<T>) -> Result<DVector<T>> {
    Ok(thin_svd(a)?.s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn recompose(s: &ThinSvd<f64>) -> DMatrix<f64> {
        &s.u * DMatrix::from_diagonal(&s.s) * s.v.transpose()
    }

    #[test]
    fn exact_rank_one_inputs() {
        // shapes on which nalgebra's bidiagonal SVD fails to reconstruct
        for (n, l) in [(81, 5), (80, 4), (64, 3), (3, 64)] {
            let x = DVector::from_fn(n, |i, _| ((i * 7 + 3) as f64).sin());
            let h = DVector::from_fn(l, |j, _| 1.0 / (j + 1) as f64);
            let z = &x * h.transpose();
            let s = thin_svd(&z).unwrap();
            assert!((recompose(&s) - &z).norm() < 1e-12 * z.norm());
            assert!((s.s[0] - x.norm() * h.norm()).abs() < 1e-12 * s.s[0]);
            assert!(s.s.iter().skip(1).all(|&v| v < 1e-12 * s.s[0]));
        }
    }

    #[test]
    fn eigen_of_path_graph() {
        let a = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
        let (vals, vecs) = symmetric_eigen(&a).unwrap();
        let r2 = 2f64.sqrt();
        for (got, want) in vals.iter().zip([-r2, 0.0, r2]) {
            assert!((got - want).abs() < 1e-14);
        }
        let rec = &vecs * DMatrix::from_diagonal(&vals) * vecs.transpose();
        assert!((rec - a).norm() < 1e-14);
    }

    #[test]
    fn empty_and_f32() {
        let s = thin_svd(&DMatrix::<f64>::zeros(4, 0)).unwrap();
        assert_eq!(s.s.len(), 0);
        let z = DMatrix::<f32>::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 1.0]);
        assert_eq!(singular_values(&z).unwrap().as_slice(), &[3.0, 1.0]);
    }

    proptest! {
        #[test]
        fn svd_reconstructs(m in 1usize..12, n in 1usize..12, seed in any::<u64>()) {
            let z = DMatrix::from_fn(m, n, |i, j| {
                let t = (seed % 1000) as f64 + (i * 31 + j * 17) as f64;
                (t * 0.7).sin() * if (i + j) % 3 == 0 { 0.0 } else { 1.0 }
            });
            let s = thin_svd(&z).unwrap();
            prop_assert!((recompose(&s) - &z).norm() <= 1e-12 * z.norm().max(1.0));
            prop_assert!((s.u.transpose() * &s.u - DMatrix::identity(s.s.len(), s.s.len())).norm() < 1e-12);
            prop_assert!(s.s.as_slice().windows(2).all(|w| w[0] >= w[1]));
        }
    }
}
