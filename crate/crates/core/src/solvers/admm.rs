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

use super::factor::rank1_factor_stacked;
use super::SolverConfig;
use crate::error::{invalid, Error, Result};
use crate::lifting::LiftedOperator;
use crate::proximal::{project_l20, prox_l21, row_support, svt_with_norm, FidelitySet};
use crate::scalar::Scalar;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// One row of the per-iteration diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub rho: f64,
    pub consensus_residual_1: f64,
    pub consensus_residual_2: f64,
    pub fidelity_residual: f64,
    pub nuclear_norm: f64,
    pub row_support_size: usize,
}

/// ADMM iterate. Matrices are vertical stacks of `P` blocks of size `n x L`.
#[derive(Debug, Clone)]
pub struct SolverState<T: Scalar> {
    pub w: DMatrix<T>,
    pub z1: DMatrix<T>,
    pub z2: DMatrix<T>,
    pub y1: DMatrix<T>,
    pub y2: DMatrix<T>,
    pub rho: T,
    pub iter: usize,
}

impl<T: Scalar> SolverState<T> {
    fn new(init: DMatrix<T>, rho: T) -> Self {
        let zeros = DMatrix::zeros(init.nrows(), init.ncols());
        Self {
            w: zeros.clone(),
            z1: init.clone(),
            z2: init,
            y1: zeros.clone(),
            y2: zeros,
            rho,
            iter: 0,
        }
    }
}

/// Result of a single-measurement solve.
#[derive(Debug, Clone)]
pub struct DeconvResult<T: Scalar> {
    /// Recovered lifted matrix: `W` for the convex solver, `Z2` (exactly
    /// S-row-sparse) for the S-sparse solver.
    pub z_final: DMatrix<T>,
    /// Consensus variable at termination.
    pub w: DMatrix<T>,
    pub x_hat: DVector<T>,
    pub h_hat: DVector<T>,
    /// `||y_hat - M vec(z_final)||_2`.
    pub fidelity_residual: T,
    /// `||W - Z2||_F` at termination.
    pub consensus_gap: T,
    pub iterations: usize,
    pub converged: bool,
    pub final_rho: T,
    pub trace: Vec<IterationRecord>,
}

/// Result of a multi-measurement solve: one block per measurement, one filter.
#[derive(Debug, Clone)]
pub struct MultiDeconvResult<T: Scalar> {
    pub z_blocks: Vec<DMatrix<T>>,
    pub w_blocks: Vec<DMatrix<T>>,
    pub x_hats: Vec<DVector<T>>,
    pub h_hat: DVector<T>,
    pub fidelity_residuals: Vec<T>,
    pub consensus_gap: T,
    pub iterations: usize,
    pub converged: bool,
    pub final_rho: T,
    pub trace: Vec<IterationRecord>,
}

impl<T: Scalar> MultiDeconvResult<T> {
    fn into_single(mut self) -> DeconvResult<T> {
        DeconvResult {
            z_final: self.z_blocks.swap_remove(0),
            w: self.w_blocks.swap_remove(0),
            x_hat: self.x_hats.swap_remove(0),
            h_hat: self.h_hat,
            fidelity_residual: self.fidelity_residuals[0],
            consensus_gap: self.consensus_gap,
            iterations: self.iterations,
            converged: self.converged,
            final_rho: self.final_rho,
            trace: self.trace,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Method {
    Convex,
    SSparse,
}

struct Problem<'a, T: Scalar> {
    sets: Vec<FidelitySet<'a, T>>,
    n: usize,
    l: usize,
}

impl<'a, T: Scalar> Problem<'a, T> {
    fn new(lifted: &'a LiftedOperator<T>, y_hats: &[DVector<T>], epsilon: T) -> Result<Self> {
        if y_hats.is_empty() {
            return Err(invalid("at least one measurement is required"));
        }
        let sets = y_hats
            .iter()
            .map(|y| FidelitySet::new(lifted, y.clone(), epsilon))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            sets,
            n: lifted.n(),
            l: lifted.filter_len(),
        })
    }

    fn blocks(&self) -> usize {
        self.sets.len()
    }

    /// Blockwise projection of a vertical stack; returns the stacked residual norm.
    fn project(&self, stacked: &DMatrix<T>) -> (DMatrix<T>, T) {
        let mut out = DMatrix::zeros(stacked.nrows(), stacked.ncols());
        let mut acc = T::zero();
        for (p, set) in self.sets.iter().enumerate() {
            let block = stacked.rows(p * self.n, self.n).into_owned();
            let (proj, r) = set.project_with_residual(&block);
            out.rows_mut(p * self.n, self.n).copy_from(&proj);
            acc += r * r;
        }
        (out, acc.sqrt())
    }

    fn block_residuals(&self, stacked: &DMatrix<T>) -> Vec<T> {
        self.sets
            .iter()
            .enumerate()
            .map(|(p, set)| set.residual(&stacked.rows(p * self.n, self.n).into_owned()))
            .collect()
    }

    fn split(&self, stacked: &DMatrix<T>) -> Vec<DMatrix<T>> {
        (0..self.blocks())
            .map(|p| stacked.rows(p * self.n, self.n).into_owned())
            .collect()
    }

    /// Row shrinkage applied to the horizontal stack `[Z_1 .. Z_P]`: node `i`
    /// is shrunk by the norm of its rows across all blocks.
    fn prox_l21_horizontal(&self, stacked: &DMatrix<T>, tau: T) -> DMatrix<T> {
        let (n, l, p) = (self.n, self.l, self.blocks());
        let mut horizontal = DMatrix::zeros(n, p * l);
        for b in 0..p {
            horizontal
                .columns_mut(b * l, l)
                .copy_from(&stacked.rows(b * n, n));
        }
        let shrunk = prox_l21(&horizontal, tau);
        let mut out = DMatrix::zeros(n * p, l);
        for b in 0..p {
            out.rows_mut(b * n, n).copy_from(&shrunk.columns(b * l, l));
        }
        out
    }

    fn project_l20_blocks(&self, stacked: &DMatrix<T>, s: usize) -> DMatrix<T> {
        let mut out = DMatrix::zeros(stacked.nrows(), stacked.ncols());
        for b in 0..self.blocks() {
            let block = stacked.rows(b * self.n, self.n).into_owned();
            out.rows_mut(b * self.n, self.n)
                .copy_from(&project_l20(&block, s));
        }
        out
    }

    /// Nonzero rows of the horizontal stack, i.e. nodes active in any block.
    fn union_support(&self, stacked: &DMatrix<T>) -> usize {
        let mut active = vec![false; self.n];
        for b in 0..self.blocks() {
            for i in row_support(&stacked.rows(b * self.n, self.n).into_owned()) {
                active[i] = true;
            }
        }
        active.into_iter().filter(|&a| a).count()
    }
}

fn run<T: Scalar>(
    method: Method,
    problem: &Problem<'_, T>,
    cfg: &SolverConfig<T>,
    init: DMatrix<T>,
) -> Result<MultiDeconvResult<T>> {
    let mut st = SolverState::new(init, cfg.rho0);
    let two = T::lit(2.0);
    let mut trace = Vec::with_capacity(cfg.max_iter.min(4096));
    let mut converged = false;

    while st.iter < cfg.max_iter {
        let rho = match method {
            Method::Convex => cfg.rho0,
            Method::SSparse => cfg.rho_at(st.iter),
        };
        st.rho = rho;

        let target = ((&st.z1 - &st.y1) + (&st.z2 - &st.y2)) / two;
        let (w, fidelity) = problem.project(&target);
        if !w.iter().all(|v| v.is_finite()) {
            return Err(Error::Numerical(format!(
                "ADMM iterates diverged at iteration {}",
                st.iter + 1
            )));
        }

        let (z1, nuclear) = svt_with_norm(&(&w + &st.y1), rho);
        let z2 = match method {
            Method::Convex => problem.prox_l21_horizontal(&(&w + &st.y2), cfg.tau * rho),
            Method::SSparse => problem.project_l20_blocks(&(&w + &st.y2), cfg.sparsity),
        };
        st.y1 += &w - &z1;
        st.y2 += &w - &z2;

        let r1 = (&w - &z1).norm();
        let r2 = (&w - &z2).norm();
        let w_change = (&w - &st.w).norm() / st.w.norm().max(T::one());
        let w_scale = w.norm().max(T::one());

        trace.push(IterationRecord {
            iter: st.iter + 1,
            rho: rho.to_f64_lossy(),
            consensus_residual_1: r1.to_f64_lossy(),
            consensus_residual_2: r2.to_f64_lossy(),
            fidelity_residual: fidelity.to_f64_lossy(),
            nuclear_norm: nuclear.to_f64_lossy(),
            row_support_size: problem.union_support(&z2),
        });

        st.w = w;
        st.z1 = z1;
        st.z2 = z2;
        st.iter += 1;

        let done = match method {
            Method::Convex => w_change < cfg.tol,
            Method::SSparse => r1.max(r2) < cfg.tol * w_scale,
        };
        if done {
            converged = true;
            break;
        }
    }

    let final_rho = match method {
        Method::Convex => cfg.rho0,
        Method::SSparse => cfg.rho_at(st.iter),
    };
    let z_final = match method {
        Method::Convex => st.w.clone(),
        Method::SSparse => st.z2.clone(),
    };
    let (x_hats, h_hat) = rank1_factor_stacked(&z_final, problem.blocks(), cfg.scale_rule)?;
    Ok(MultiDeconvResult {
        fidelity_residuals: problem.block_residuals(&z_final),
        z_blocks: problem.split(&z_final),
        w_blocks: problem.split(&st.w),
        x_hats,
        h_hat,
        consensus_gap: (&st.w - &st.z2).norm(),
        iterations: st.iter,
        converged,
        final_rho,
        trace,
    })
}

fn stack_init<T: Scalar>(problem: &Problem<'_, T>, init: &[DMatrix<T>]) -> Result<DMatrix<T>> {
    if init.len() != problem.blocks() {
        return Err(Error::DimensionMismatch {
            expected: problem.blocks(),
            actual: init.len(),
        });
    }
    let (n, l) = (problem.n, problem.l);
    let mut out = DMatrix::zeros(n * init.len(), l);
    for (p, block) in init.iter().enumerate() {
        if block.shape() != (n, l) {
            return Err(invalid(format!(
                "initial block {p} is {}x{}, expected {n}x{l}",
                block.nrows(),
                block.ncols()
            )));
        }
        out.rows_mut(p * n, n).copy_from(block);
    }
    Ok(out)
}

/// Convex baseline: `min ||Z||_* + tau ||Z||_{2,1}` subject to `M vec(Z) = y_hat`,
/// with a fixed penalty `rho0`. Stops when the relative change of `W` drops
/// below `tol`. Non-convergence is reported through `converged`, not an error.
pub fn solve_convex<T: Scalar>(
    lifted: &LiftedOperator<T>,
    y_hat: &DVector<T>,
    cfg: &SolverConfig<T>,
) -> Result<DeconvResult<T>> {
    Ok(solve_convex_multi(lifted, std::slice::from_ref(y_hat), cfg)?.into_single())
}

/// Convex baseline over `P` measurements sharing one filter.
pub fn solve_convex_multi<T: Scalar>(
    lifted: &LiftedOperator<T>,
    y_hats: &[DVector<T>],
    cfg: &SolverConfig<T>,
) -> Result<MultiDeconvResult<T>> {
    cfg.validate()?;
    let problem = Problem::new(lifted, y_hats, T::zero())?;
    let init = DMatrix::zeros(problem.n * problem.blocks(), problem.l);
    run(Method::Convex, &problem, cfg, init)
}

/// S-sparse ADMM: `min ||Z||_*` subject to `||y_hat - M vec(Z)|| <= epsilon`
/// and at most `sparsity` nonzero rows, warm-started from `z_init`.
pub fn solve_ssparse<T: Scalar>(
    lifted: &LiftedOperator<T>,
    y_hat: &DVector<T>,
    cfg: &SolverConfig<T>,
    z_init: &DMatrix<T>,
) -> Result<DeconvResult<T>> {
    Ok(solve_ssparse_multi(
        lifted,
        std::slice::from_ref(y_hat),
        cfg,
        std::slice::from_ref(z_init),
    )?
    .into_single())
}

/// S-sparse ADMM over `P` measurements; each block keeps at most `sparsity` rows.
pub fn solve_ssparse_multi<T: Scalar>(
    lifted: &LiftedOperator<T>,
    y_hats: &[DVector<T>],
    cfg: &SolverConfig<T>,
    z_init: &[DMatrix<T>],
) -> Result<MultiDeconvResult<T>> {
    cfg.validate()?;
    if cfg.sparsity == 0 || cfg.sparsity > lifted.n() {
        return Err(invalid(format!(
            "sparsity must lie in [1, {}], got {}",
            lifted.n(),
            cfg.sparsity
        )));
    }
    let problem = Problem::new(lifted, y_hats, cfg.epsilon)?;
    let init = stack_init(&problem, z_init)?;
    run(Method::SSparse, &problem, cfg, init)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{make_sparse_source, AmplitudeRule};
    use crate::graphs::{build_random_sensor_graph, spectral_decompose, SpectralDecomposition};
    use crate::lifting::{diffuse_and_measure, vec_of, FilterCoeffs};
    use crate::proximal::svt;

    fn sensor(n: usize, seed: u64) -> SpectralDecomposition<f64> {
        spectral_decompose(
            &build_random_sensor_graph(n, 6.min(n - 1), seed).unwrap(),
            true,
        )
        .unwrap()
    }

    fn taps() -> FilterCoeffs<f64> {
        FilterCoeffs::from_slice(&[1.0, 0.8, 0.3]).unwrap()
    }

    fn angle(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        (a.dot(b).abs() / (a.norm() * b.norm())).min(1.0).acos()
    }

    #[test]
    fn ground_truth_is_a_fixed_point() {
        let sd = sensor(20, 3);
        let x = make_sparse_source::<f64>(20, 3, AmplitudeRule::Fixed, 4).unwrap();
        let m = diffuse_and_measure(&sd, &taps(), &x, 0.0, 0).unwrap();
        let op = LiftedOperator::new(&sd, 3).unwrap();
        let z0 = &x * taps().taps().transpose();
        // the nuclear step shrinks by rho, so the truth is only stationary in
        // the limit of a vanishing threshold
        let cfg = SolverConfig {
            sparsity: 3,
            rho0: 1e-12,
            tol: 1e-6,
            ..Default::default()
        };
        let res = solve_ssparse(&op, &m.y_hat, &cfg, &z0).unwrap();
        assert!(res.converged);
        assert!(res.iterations <= 5, "took {} iterations", res.iterations);
        assert!((&res.z_final - &z0).norm() < 1e-6 * z0.norm());
    }

    #[test]
    fn full_budget_matches_nuclear_only_iteration() {
        let sd = sensor(12, 5);
        let x = make_sparse_source::<f64>(12, 2, AmplitudeRule::Fixed, 1).unwrap();
        let m = diffuse_and_measure(&sd, &taps(), &x, 0.0, 0).unwrap();
        let op = LiftedOperator::new(&sd, 3).unwrap();
        let cfg = SolverConfig {
            sparsity: 12,
            max_iter: 40,
            tol: 1e-300,
            ..Default::default()
        };
        let init = DMatrix::from_fn(12, 3, |i, j| ((i + 2 * j) as f64).cos());
        let res = solve_ssparse(&op, &m.y_hat, &cfg, &init).unwrap();

        // reference: the same splitting with the Z2 step replaced by identity
        let set = FidelitySet::new(&op, m.y_hat.clone(), 0.0).unwrap();
        let (mut z1, mut z2) = (init.clone(), init.clone());
        let (mut y1, mut y2) = (DMatrix::zeros(12, 3), DMatrix::zeros(12, 3));
        for (k, rec) in res.trace.iter().enumerate() {
            let rho = cfg.rho_at(k);
            let w = set.project(&(((&z1 - &y1) + (&z2 - &y2)) / 2.0));
            z1 = svt(&(&w + &y1), rho);
            z2 = &w + &y2;
            y1 += &w - &z1;
            y2 += &w - &z2;
            assert!(((&w - &z1).norm() - rec.consensus_residual_1).abs() < 1e-9);
        }
        assert!((&z2 - &res.z_final).norm() < 1e-9);
    }

    #[test]
    fn convex_without_l21_inverts_square_system() {
        let sd = sensor(10, 8);
        let op = LiftedOperator::new(&sd, 1).unwrap();
        let y_hat = DVector::from_fn(10, |i, _| (i as f64 * 0.3).sin() + 0.1);
        let cfg = SolverConfig {
            tau: 0.0,
            tol: 1e-12,
            max_iter: 5000,
            ..Default::default()
        };
        let res = solve_convex(&op, &y_hat, &cfg).unwrap();
        let expected = op.matrix().clone().lu().solve(&y_hat).unwrap();
        assert!((vec_of(&res.z_final) - expected).norm() < 1e-9);
    }

    #[test]
    fn convex_noiseless_is_nearly_rank_one() {
        let sd = sensor(20, 11);
        let x = make_sparse_source::<f64>(20, 2, AmplitudeRule::Fixed, 2).unwrap();
        let m = diffuse_and_measure(&sd, &taps(), &x, 0.0, 0).unwrap();
        let op = LiftedOperator::new(&sd, 3).unwrap();
        let res = solve_convex(&op, &m.y_hat, &SolverConfig::default()).unwrap();
        assert!(res.fidelity_residual < 1e-6 * m.y_hat.norm());
        let s = crate::linalg::singular_values(&res.z_final).unwrap();
        assert!(s[1] / s[0] < 0.2, "sigma ratio {}", s[1] / s[0]);
    }

    #[test]
    fn rho_schedule_and_determinism() {
        let sd = sensor(16, 2);
        let x = make_sparse_source::<f64>(16, 2, AmplitudeRule::Fixed, 3).unwrap();
        let m = diffuse_and_measure(&sd, &taps(), &x, 0.05, 9).unwrap();
        let op = LiftedOperator::new(&sd, 3).unwrap();
        let cfg = SolverConfig {
            sparsity: 2,
            epsilon: crate::solvers::default_epsilon(0.05, 16),
            max_iter: 60,
            ..Default::default()
        };
        let warm = solve_convex(&op, &m.y_hat, &cfg).unwrap();
        let a = solve_ssparse(&op, &m.y_hat, &cfg, &warm.z_final).unwrap();
        let b = solve_ssparse(&op, &m.y_hat, &cfg, &warm.z_final).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.z_final, b.z_final);
        for (k, r) in a.trace.iter().enumerate() {
            assert_eq!(r.rho, 0.01 * 0.99f64.powi(k as i32));
            assert!(r.row_support_size <= 2);
        }
        assert_eq!(a.final_rho, cfg.rho0 * cfg.eta.powi(a.iterations as i32));
        assert!(row_support(&a.z_final).len() <= 2);
        assert!(warm.trace.iter().all(|r| r.rho == 0.01));
    }

    #[test]
    fn infeasible_radius_and_bad_sparsity() {
        let sd = sensor(8, 1);
        let op = LiftedOperator::new(&sd, 2).unwrap();
        let y = DVector::from_element(8, 1.0);
        let init = DMatrix::zeros(8, 2);
        let bad = SolverConfig {
            sparsity: 9,
            ..Default::default()
        };
        assert!(solve_ssparse(&op, &y, &bad, &init).is_err());
        assert!(solve_ssparse(&op, &DVector::zeros(7), &SolverConfig::default(), &init).is_err());
        assert!(solve_ssparse(&op, &y, &SolverConfig::default(), &DMatrix::zeros(7, 2)).is_err());
    }

    #[test]
    fn single_measurement_multi_matches_single() {
        let sd = sensor(14, 6);
        let x = make_sparse_source::<f64>(14, 2, AmplitudeRule::Fixed, 8).unwrap();
        let m = diffuse_and_measure(&sd, &taps(), &x, 0.0, 0).unwrap();
        let op = LiftedOperator::new(&sd, 3).unwrap();
        let cfg = SolverConfig {
            max_iter: 50,
            ..Default::default()
        };
        let single = solve_convex(&op, &m.y_hat, &cfg).unwrap();
        let multi = solve_convex_multi(&op, std::slice::from_ref(&m.y_hat), &cfg).unwrap();
        assert_eq!(single.trace, multi.trace);
        assert_eq!(single.z_final, multi.z_blocks[0]);
    }

    #[test]
    fn multi_measurement_filter_recovery() {
        let sd = sensor(20, 4);
        let op = LiftedOperator::new(&sd, 3).unwrap();
        let xs: Vec<_> = (0..3)
            .map(|p| make_sparse_source::<f64>(20, 2, AmplitudeRule::Fixed, 40 + p).unwrap())
            .collect();
        let y_hats: Vec<_> = xs
            .iter()
            .map(|x| diffuse_and_measure(&sd, &taps(), x, 0.0, 0).unwrap().y_hat)
            .collect();
        let cfg = SolverConfig {
            max_iter: 5000,
            tol: 1e-9,
            rho0: 0.1,
            ..Default::default()
        };
        let convex = solve_convex_multi(&op, &y_hats, &cfg).unwrap();

        // the planted stack is feasible, so it bounds the convex optimum
        let objective = |blocks: &[DMatrix<f64>]| {
            let mut v = DMatrix::zeros(60, 3);
            let mut h = DMatrix::zeros(20, 9);
            for (p, b) in blocks.iter().enumerate() {
                v.rows_mut(p * 20, 20).copy_from(b);
                h.columns_mut(p * 3, 3).copy_from(b);
            }
            crate::proximal::nuclear_norm(&v) + crate::proximal::l21_norm(&h)
        };
        let truth: Vec<_> = xs.iter().map(|x| x * taps().taps().transpose()).collect();
        assert!(objective(&convex.z_blocks) <= objective(&truth) + 1e-6);
        for (r, y) in convex.fidelity_residuals.iter().zip(&y_hats) {
            assert!(*r < 1e-6 * y.norm());
        }

        let sparse_cfg = SolverConfig {
            sparsity: 2,
            epsilon: 1e-8,
            ..Default::default()
        };
        let res = solve_ssparse_multi(&op, &y_hats, &sparse_cfg, &convex.z_blocks).unwrap();
        let a = angle(&res.h_hat, taps().taps());
        assert!(a < 1e-3, "filter angle {a}");
    }

    #[test]
    fn multi_convex_zero_rows_are_union_inactive() {
        // node i active in block 0, node j in block 1: the horizontal shrinkage
        // must keep exactly those two rows in both blocks
        let sd = sensor(10, 2);
        let op = LiftedOperator::new(&sd, 2).unwrap();
        let h = FilterCoeffs::from_slice(&[1.0, 0.5]).unwrap();
        let mut x0 = DVector::zeros(10);
        x0[2] = 1.0;
        let mut x1 = DVector::zeros(10);
        x1[7] = -1.0;
        let y_hats = vec![
            diffuse_and_measure(&sd, &h, &x0, 0.0, 0).unwrap().y_hat,
            diffuse_and_measure(&sd, &h, &x1, 0.0, 0).unwrap().y_hat,
        ];
        let problem = Problem::new(&op, &y_hats, 0.0).unwrap();
        let mut stacked = DMatrix::zeros(20, 2);
        stacked.row_mut(2).copy_from_slice(&[3.0, 0.0]);
        stacked.row_mut(17).copy_from_slice(&[0.0, 4.0]);
        stacked.row_mut(5).copy_from_slice(&[0.1, 0.1]);
        let shrunk = problem.prox_l21_horizontal(&stacked, 1.0);
        let blocks = problem.split(&shrunk);
        assert_eq!(row_support(&blocks[0]), vec![2]);
        assert_eq!(row_support(&blocks[1]), vec![7]);
        assert_eq!(problem.union_support(&shrunk), 2);
        assert!((shrunk[(2, 0)] - 2.0).abs() < 1e-15);
        assert!((shrunk[(17, 1)] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn multi_ssparse_recovers_both_supports() {
        let sd = sensor(30, 12);
        let op = LiftedOperator::new(&sd, 3).unwrap();
        let xs: Vec<_> = (0..2)
            .map(|p| make_sparse_source::<f64>(30, 2, AmplitudeRule::Fixed, 70 + p).unwrap())
            .collect();
        let y_hats: Vec<_> = xs
            .iter()
            .map(|x| diffuse_and_measure(&sd, &taps(), x, 0.0, 0).unwrap().y_hat)
            .collect();
        let convex = solve_convex_multi(&op, &y_hats, &SolverConfig::default()).unwrap();
        let cfg = SolverConfig {
            sparsity: 2,
            epsilon: 1e-8,
            ..Default::default()
        };
        let res = solve_ssparse_multi(&op, &y_hats, &cfg, &convex.z_blocks).unwrap();
        for (zb, x) in res.z_blocks.iter().zip(&xs) {
            let truth: Vec<usize> = (0..30).filter(|&i| x[i] != 0.0).collect();
            assert_eq!(row_support(zb), truth);
        }
    }
}
