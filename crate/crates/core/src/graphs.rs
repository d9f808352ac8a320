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

//! Undirected weighted graphs, the two synthetic generators, and the
//! spectral decomposition of the adjacency (shift) operator.

use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;
use crate::SCHEMA;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::path::Path;

/// Redraw budget for generators that must produce a connected graph.
pub const MAX_GENERATOR_ATTEMPTS: usize = 100;

pub const DEFAULT_SENSOR_NEIGHBORS: usize = 6;
pub const DEFAULT_COMMUNITIES: usize = 4;
pub const DEFAULT_P_IN: f64 = 0.3;
pub const DEFAULT_P_OUT: f64 = 0.01;

/// Undirected graph with a symmetric, nonnegative, zero-diagonal weight matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph<T: Scalar> {
    weights: DMatrix<T>,
    coords: Option<Vec<[T; 2]>>,
}

impl<T: Scalar> Graph<T> {
    /// Validates and wraps a weight matrix. Connectivity is not required here;
    /// see [`Graph::is_connected`].
    pub fn from_weights(weights: DMatrix<T>, coords: Option<Vec<[T; 2]>>) -> Result<Self> {
        let n = weights.nrows();
        if weights.ncols() != n {
            return Err(Error::InvalidGraph(format!(
                "weight matrix must be square, got {}x{}",
                n,
                weights.ncols()
            )));
        }
        if n == 0 {
            return Err(Error::InvalidGraph("graph has no nodes".into()));
        }
        for i in 0..n {
            if weights[(i, i)] != T::zero() {
                return Err(Error::InvalidGraph(format!("nonzero diagonal at node {i}")));
            }
            for j in 0..n {
                let w = weights[(i, j)];
                if !w.is_finite() || w < T::zero() {
                    return Err(Error::InvalidGraph(format!("bad weight {w} at ({i},{j})")));
                }
                if w != weights[(j, i)] {
                    return Err(Error::InvalidGraph(format!(
                        "asymmetric weight at ({i},{j})"
                    )));
                }
            }
        }
        if let Some(c) = &coords {
            if c.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: c.len(),
                });
            }
        }
        Ok(Self { weights, coords })
    }

    pub fn n(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &DMatrix<T> {
        &self.weights
    }

    pub fn coords(&self) -> Option<&[[T; 2]]> {
        self.coords.as_deref()
    }

    /// Undirected edges `(i, j, w)` with `i < j` and `w > 0`, in row-major order.
    pub fn edges(&self) -> Vec<(usize, usize, T)> {
        let n = self.n();
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let w = self.weights[(i, j)];
                if w > T::zero() {
                    out.push((i, j, w));
                }
            }
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        is_connected(&self.weights)
    }

    pub fn cast<U: Scalar>(&self) -> Graph<U> {
        let weights = self.weights.map(|w| U::lit(w.to_f64_lossy()));
        let coords = self.coords.as_ref().map(|c| {
            c.iter()
                .map(|p| [U::lit(p[0].to_f64_lossy()), U::lit(p[1].to_f64_lossy())])
                .collect()
        });
        Graph { weights, coords }
    }

    pub fn to_file(&self) -> GraphFile {
        GraphFile {
            schema: Some(SCHEMA.to_string()),
            n: self.n(),
            coords: self.coords.as_ref().map(|c| {
                c.iter()
                    .map(|p| [p[0].to_f64_lossy(), p[1].to_f64_lossy()])
                    .collect()
            }),
            edges: self
                .edges()
                .into_iter()
                .map(|(i, j, w)| (i, j, w.to_f64_lossy()))
                .collect(),
        }
    }

    pub fn from_file(file: &GraphFile) -> Result<Self> {
        let n = file.n;
        if n == 0 {
            return Err(Error::InvalidGraph("graph has no nodes".into()));
        }
        let mut weights = DMatrix::<T>::zeros(n, n);
        for &(i, j, w) in &file.edges {
            if i >= j || j >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({i},{j}) must satisfy i < j < n"
                )));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidGraph(format!(
                    "edge ({i},{j}) has weight {w}"
                )));
            }
            if weights[(i, j)] != T::zero() {
                return Err(Error::InvalidGraph(format!("duplicate edge ({i},{j})")));
            }
            weights[(i, j)] = T::lit(w);
            weights[(j, i)] = T::lit(w);
        }
        let coords = file
            .coords
            .as_ref()
            .map(|c| c.iter().map(|p| [T::lit(p[0]), T::lit(p[1])]).collect());
        Self::from_weights(weights, coords)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: GraphFile = serde_json::from_str(s)?;
        Self::from_file(&file)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// On-disk graph representation. Weights are written in shortest round-trip
/// decimal form, so reading a written file reproduces every weight bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    pub n: usize,
    pub coords: Option<Vec<[f64; 2]>>,
    pub edges: Vec<(usize, usize, f64)>,
}

fn is_connected<T: Scalar>(w: &DMatrix<T>) -> bool {
    let n = w.nrows();
    if n == 0 {
        return false;
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = queue.pop_front() {
        for v in 0..n {
            if !seen[v] && w[(u, v)] > T::zero() {
                seen[v] = true;
                count += 1;
                queue.push_back(v);
            }
        }
    }
    count == n
}

/// Per-attempt RNG: attempt `a` of a generator reads stream `a` of the seed.
fn attempt_rng(seed: u64, attempt: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(attempt as u64);
    rng
}

/// Random geometric sensor graph: `n` points uniform in the unit square, each
/// joined to its `k` nearest neighbours with Gaussian kernel weights
/// `exp(-d^2 / (2 theta^2))`, where `theta` is the mean k-NN distance.
/// The adjacency is symmetrized by taking the larger of the two directed weights.
pub fn build_random_sensor_graph<T: Scalar>(n: usize, k: usize, seed: u64) -> Result<Graph<T>> {
    if n < 2 {
        return Err(invalid(format!("sensor graph needs n >= 2, got {n}")));
    }
    if k == 0 || k >= n {
        return Err(invalid(format!(
            "sensor graph needs 1 <= k < n, got k={k}, n={n}"
        )));
    }
    for attempt in 0..MAX_GENERATOR_ATTEMPTS {
        let mut rng = attempt_rng(seed, attempt);
        let pts: Vec<[f64; 2]> = (0..n)
            .map(|_| [rng.random::<f64>(), rng.random::<f64>()])
            .collect();
        let dist = |a: usize, b: usize| {
            let dx = pts[a][0] - pts[b][0];
            let dy = pts[a][1] - pts[b][1];
            (dx * dx + dy * dy).sqrt()
        };

        let mut neighbors = Vec::with_capacity(n);
        let mut dsum = 0.0;
        for i in 0..n {
            let mut others: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (dist(i, j), j))
                .collect();
            others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            others.truncate(k);
            dsum += others.iter().map(|p| p.0).sum::<f64>();
            neighbors.push(others);
        }
        let theta = dsum / (n * k) as f64;
        if theta <= 0.0 {
            continue; // coincident points
        }

        let mut w = DMatrix::<f64>::zeros(n, n);
        for (i, nb) in neighbors.iter().enumerate() {
            for &(d, j) in nb {
                let v = (-(d * d) / (2.0 * theta * theta)).exp();
                if v > w[(i, j)] {
                    w[(i, j)] = v;
                    w[(j, i)] = v;
                }
            }
        }
        if is_connected(&w) {
            let weights = w.map(T::lit);
            let coords = pts.iter().map(|p| [T::lit(p[0]), T::lit(p[1])]).collect();
            return Graph::from_weights(weights, Some(coords));
        }
    }
    Err(Error::Disconnected {
        attempts: MAX_GENERATOR_ATTEMPTS,
    })
}

/// Community index of node `i` when `n` nodes are split into `c` contiguous,
/// near-equal blocks.
pub fn community_of(i: usize, n: usize, c: usize) -> usize {
    i * c / n
}

/// Stochastic block model with unit weights: `c` contiguous near-equal
/// communities, intra-community edges with probability `p_in`, inter-community
/// edges with probability `p_out`.
pub fn build_community_graph<T: Scalar>(
    n: usize,
    c: usize,
    p_in: f64,
    p_out: f64,
    seed: u64,
) -> Result<Graph<T>> {
    if c == 0 || n < c {
        return Err(invalid(format!(
            "community graph needs n >= c >= 1, got n={n}, c={c}"
        )));
    }
    if !(p_out > 0.0 && p_out <= p_in && p_in <= 1.0) {
        return Err(invalid(format!(
            "community graph needs 0 < p_out <= p_in <= 1, got p_in={p_in}, p_out={p_out}"
        )));
    }
    for attempt in 0..MAX_GENERATOR_ATTEMPTS {
        let mut rng = attempt_rng(seed, attempt);
        let mut w = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let p = if community_of(i, n, c) == community_of(j, n, c) {
                    p_in
                } else {
                    p_out
                };
                if rng.random::<f64>() < p {
                    w[(i, j)] = 1.0;
                    w[(j, i)] = 1.0;
                }
            }
        }
        if n == 1 || is_connected(&w) {
            return Graph::from_weights(w.map(T::lit), None);
        }
    }
    Err(Error::Disconnected {
        attempts: MAX_GENERATOR_ATTEMPTS,
    })
}

/// Eigendecomposition `S = V diag(eigenvalues) V^T` of the (optionally
/// spectral-radius normalized) adjacency matrix. `U = V^T` is the graph
/// Fourier transform.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition<T: Scalar> {
    operator: DMatrix<T>,
    eigenvalues: DVector<T>,
    v: DMatrix<T>,
    u: DMatrix<T>,
    scale: T,
}

impl<T: Scalar> SpectralDecomposition<T> {
    /// Builds a decomposition from ascending eigenvalues and orthonormal
    /// eigenvectors; the operator is reconstructed as `V diag(lambda) V^T`.
    pub fn from_parts(eigenvalues: DVector<T>, v: DMatrix<T>) -> Result<Self> {
        let n = eigenvalues.len();
        if v.shape() != (n, n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: v.nrows(),
            });
        }
        if eigenvalues.as_slice().windows(2).any(|w| w[0] > w[1]) {
            return Err(invalid("eigenvalues must be ascending"));
        }
        let gram_err = (v.transpose() * &v - DMatrix::identity(n, n)).norm();
        if gram_err > T::lit(1e-8) * T::lit(n as f64) {
            return Err(invalid("eigenvectors must be orthonormal"));
        }
        let u = v.transpose();
        let mut sd = Self {
            operator: DMatrix::zeros(n, n),
            eigenvalues,
            v,
            u,
            scale: T::one(),
        };
        sd.operator = sd.reconstruct();
        Ok(sd)
    }

    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    /// The shift operator `S` (adjacency, divided by `scale` when normalized).
    pub fn operator(&self) -> &DMatrix<T> {
        &self.operator
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> &DVector<T> {
        &self.eigenvalues
    }

    /// Orthonormal eigenvectors as columns.
    pub fn v(&self) -> &DMatrix<T> {
        &self.v
    }

    /// Forward graph Fourier transform, `V^T`.
    pub fn u(&self) -> &DMatrix<T> {
        &self.u
    }

    /// Factor the adjacency matrix was divided by (1 when not normalized).
    pub fn scale(&self) -> T {
        self.scale
    }

    pub fn reconstruct(&self) -> DMatrix<T> {
        let mut vl = self.v.clone();
        for (j, mut col) in vl.column_iter_mut().enumerate() {
            col *= self.eigenvalues[j];
        }
        vl * &self.u
    }
}

/// Symmetric eigendecomposition of the adjacency matrix. With `normalize`,
/// the operator is divided by its largest-magnitude eigenvalue first.
pub fn spectral_decompose<T: Scalar>(
    g: &Graph<T>,
    normalize: bool,
) -> Result<SpectralDecomposition<T>> {
    let a = g.weights().clone();
    let (values, v) = crate::linalg::symmetric_eigen(&a)?;

    let radius = values
        .iter()
        .fold(T::zero(), |m, &l| if l.abs() > m { l.abs() } else { m });
    let scale = if normalize && radius > T::zero() {
        radius
    } else {
        T::one()
    };
    let eigenvalues = values / scale;
    let u = v.transpose();
    let operator = if scale == T::one() { a } else { a / scale };

    Ok(SpectralDecomposition {
        operator,
        eigenvalues,
        v,
        u,
        scale,
    })
}
