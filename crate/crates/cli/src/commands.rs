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

use crate::args::{
    AmplitudeArg, Cli, Command, DiffuseArgs, ExperimentArgs, ExperimentName, GenGraphArgs, KindArg,
    MethodArg, SolveArgs, SynthArgs,
};
use crate::files::{
    matrix_from_rows, matrix_rows, read_json, write_json, GroundTruth, MeasurementFile, SolveOutput,
};
use crate::CliError;
use graph_deblur::experiments::{
    harness_epsilon, make_sparse_source, rmse, role_seed, run_experiment, run_recovery_matrix,
    support_of, AmplitudeRule, ExperimentConfig, ExperimentReport, GraphKind, RecoveryConfig,
};
use graph_deblur::graphs::{
    build_community_graph, build_random_sensor_graph, spectral_decompose, Graph, GraphFile,
};
use graph_deblur::lifting::{diffuse_and_measure, FilterCoeffs, LiftedOperator, Measurement};
use graph_deblur::proximal::row_support;
use graph_deblur::solvers::{
    rank1_factor, solve_convex, solve_ssparse, write_trace_csv, DeconvResult,
};
use graph_deblur::SCHEMA;
use nalgebra::{DMatrix, DVector};
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

// Stream indices of the per-trial role seeds used by the experiment protocols.
const SOURCE_STREAM: u64 = 1;
const NOISE_STREAM: u64 = 2;

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::GenGraph(a) => gen_graph(a),
        Command::Diffuse(a) => diffuse(a),
        Command::Solve(a) => solve(a),
        Command::Experiment(a) => experiment(a),
    }
}

fn gen_graph(a: GenGraphArgs) -> Result<(), CliError> {
    if a.n == 0 {
        return Err(CliError::usage("--n must be at least 1"));
    }
    let g: Graph<f64> = match a.kind {
        KindArg::Sensor => build_random_sensor_graph(a.n, a.k, a.seed)?,
        KindArg::Community => build_community_graph(a.n, a.communities, a.p_in, a.p_out, a.seed)?,
    };
    g.write_json(&a.out)?;
    println!(
        "wrote {}-node graph with {} edges to {}",
        g.n(),
        g.edges().len(),
        a.out.display()
    );
    Ok(())
}

fn load_graph(path: &Path) -> Result<Graph<f64>, CliError> {
    let file: GraphFile = read_json(path)?;
    Ok(Graph::from_file(&file)?)
}

fn amplitude_rule(s: &SynthArgs) -> AmplitudeRule {
    match s.amplitude {
        AmplitudeArg::Fixed => AmplitudeRule::Fixed,
        AmplitudeArg::Uniform => AmplitudeRule::Uniform {
            lo: s.amp_lo,
            hi: s.amp_hi,
        },
    }
}

/// Draws a synthetic instance on `g` with the same seed derivation as one
/// experiment trial.
fn synthesize(g: &Graph<f64>, s: &SynthArgs) -> Result<MeasurementFile, CliError> {
    let sd = spectral_decompose(g, true)?;
    let x = make_sparse_source::<f64>(
        g.n(),
        s.sources,
        amplitude_rule(s),
        role_seed(s.seed, SOURCE_STREAM),
    )?;
    let h = FilterCoeffs::from_slice(&s.h)?;
    let m = diffuse_and_measure(&sd, &h, &x, s.noise_sigma, role_seed(s.seed, NOISE_STREAM))?;
    Ok(MeasurementFile {
        schema: Some(SCHEMA.to_string()),
        n: g.n(),
        y: m.y.iter().copied().collect(),
        noise_sigma: Some(s.noise_sigma),
        x_true: Some(x.iter().copied().collect()),
        h_true: Some(s.h.clone()),
        seed: Some(s.seed),
    })
}

fn diffuse(a: DiffuseArgs) -> Result<(), CliError> {
    let g = load_graph(&a.graph)?;
    let m = synthesize(&g, &a.synth)?;
    write_json(&a.out, &m)?;
    println!("wrote measurement of {} nodes to {}", m.n, a.out.display());
    Ok(())
}

fn solve(a: SolveArgs) -> Result<(), CliError> {
    let g = load_graph(&a.graph)?;
    let meas = match &a.measurement {
        Some(path) => read_json::<MeasurementFile>(path)?,
        None => synthesize(&g, &a.synth)?,
    };
    let n = g.n();
    if meas.n != n || meas.y.len() != n {
        return Err(CliError::usage(format!(
            "measurement has {} entries but the graph has {n} nodes",
            meas.y.len()
        )));
    }
    let l = a
        .filter_len
        .or_else(|| meas.h_true.as_ref().map(Vec::len))
        .ok_or_else(|| {
            CliError::usage("--filter-len is required when the true filter is unknown")
        })?;
    let epsilon = match (a.solver.epsilon, meas.noise_sigma) {
        (Some(e), _) => e,
        (None, Some(sigma)) => harness_epsilon(sigma, n),
        (None, None) if a.method == MethodArg::Ssparse => {
            return Err(CliError::usage(
                "--epsilon is required when the noise level is unknown",
            ))
        }
        (None, None) => 0.0,
    };
    let cfg = a.solver.config(epsilon);
    cfg.validate()?;

    let sd = spectral_decompose(&g, true)?;
    let lifted = LiftedOperator::new(&sd, l)?;
    let m = Measurement::from_vertex(&sd, DVector::from_vec(meas.y.clone()))?;

    let result = match a.method {
        MethodArg::Convex => {
            let mut res = solve_convex(&lifted, &m.y_hat, &cfg)?;
            // report the rank-one factor of W, which is what the convex baseline estimates
            let (x, h) = rank1_factor(&res.z_final, cfg.scale_rule)?;
            res.x_hat = x;
            res.h_hat = h;
            res
        }
        MethodArg::Ssparse => {
            let init = match &a.init {
                Some(path) => load_init(path, n, l)?,
                None => solve_convex(&lifted, &m.y_hat, &cfg)?.z_final,
            };
            solve_ssparse(&lifted, &m.y_hat, &cfg, &init)?
        }
    };

    if let Some(path) = &a.trace {
        write_trace_csv(&result.trace, BufWriter::new(File::create(path)?))?;
    }
    let truth = ground_truth(&meas, &result)?;
    let out = solve_output(&a, n, l, epsilon, &cfg.to_f64(), &result, truth.clone());
    write_json(&a.out, &out)?;

    println!(
        "{}: {} iterations, converged={}, fidelity residual {:.3e}",
        out.method, out.iterations, out.converged, out.fidelity_residual
    );
    if let Some(t) = truth {
        println!("rmse {:.6}", t.rmse);
    }
    Ok(())
}

fn load_init(path: &Path, n: usize, l: usize) -> Result<DMatrix<f64>, CliError> {
    let prev: SolveOutput = read_json(path)?;
    let z = matrix_from_rows(&prev.z_final)?;
    if z.shape() != (n, l) {
        return Err(CliError::usage(format!(
            "--init holds a {}x{} matrix, expected {n}x{l}",
            z.nrows(),
            z.ncols()
        )));
    }
    Ok(z)
}

fn ground_truth(
    meas: &MeasurementFile,
    res: &DeconvResult<f64>,
) -> Result<Option<GroundTruth>, CliError> {
    let (Some(x), Some(h)) = (&meas.x_true, &meas.h_true) else {
        return Ok(None);
    };
    let x = DVector::from_vec(x.clone());
    Ok(Some(GroundTruth {
        rmse: rmse(&res.x_hat, &x)?,
        support: support_of(&x).into_iter().collect(),
        x_true: x.iter().copied().collect(),
        h_true: h.clone(),
    }))
}

fn solve_output(
    a: &SolveArgs,
    n: usize,
    l: usize,
    epsilon: f64,
    config: &graph_deblur::solvers::SolverConfigRecord,
    r: &DeconvResult<f64>,
    ground_truth: Option<GroundTruth>,
) -> SolveOutput {
    SolveOutput {
        schema: SCHEMA.to_string(),
        method: match a.method {
            MethodArg::Convex => "convex".into(),
            MethodArg::Ssparse => "ssparse".into(),
        },
        n,
        filter_len: l,
        epsilon,
        config: *config,
        x_hat: r.x_hat.iter().copied().collect(),
        h_hat: r.h_hat.iter().copied().collect(),
        support: row_support(&r.z_final),
        z_final: matrix_rows(&r.z_final),
        fidelity_residual: r.fidelity_residual,
        consensus_gap: r.consensus_gap,
        iterations: r.iterations,
        converged: r.converged,
        final_rho: r.final_rho,
        ground_truth,
    }
}

fn experiment(a: ExperimentArgs) -> Result<(), CliError> {
    std::fs::create_dir_all(&a.out_dir)?;
    let kind: GraphKind = a.graph.into();
    let n = a.n.unwrap_or(kind.default_n());
    match a.name {
        ExperimentName::Matched | ExperimentName::Mismatched => {
            let (name, mut cfg) = match a.name {
                ExperimentName::Matched => {
                    ("matched", ExperimentConfig::matched(kind, a.trials, a.seed))
                }
                _ => (
                    "mismatched",
                    ExperimentConfig::mismatched(kind, a.trials, a.seed),
                ),
            };
            cfg.n = n;
            cfg.noise_sigma = a.noise_sigma;
            cfg.epsilon = a.epsilon;
            cfg.init_rule = a.init.into();
            apply_solver_flags(&a, &mut cfg.solver);
            let report = run_experiment(name, &cfg)?;
            let stem = format!("{name}-{}", kind.label());
            save(&a.out_dir, &stem, |j, c| report.save(j, c))?;
            print_table(&report);
        }
        ExperimentName::RecoveryMatrix => {
            let mut cfg = RecoveryConfig::new(a.init.into(), a.seed);
            cfg.graph_kind = kind;
            cfg.n = n;
            cfg.s_values = a.s_values.clone();
            cfg.l_values = a.l_values.clone();
            cfg.trials_per_cell = a.trials_per_cell;
            cfg.noise_sigma = a.noise_sigma;
            cfg.epsilon = a.epsilon;
            apply_solver_flags(&a, &mut cfg.solver);
            let report = run_recovery_matrix(&cfg)?;
            save(&a.out_dir, &report.experiment, |j, c| report.save(j, c))?;
            print!("{:>4}", "S\\L");
            for l in &cfg.l_values {
                print!(" {l:>6}");
            }
            println!();
            for s in &cfg.s_values {
                print!("{s:>4}");
                for l in &cfg.l_values {
                    print!(" {:>6.3}", report.value(*s, *l).unwrap_or(f64::NAN));
                }
                println!();
            }
            println!("grid mean {:.4}", report.grid_mean);
        }
    }
    Ok(())
}

fn apply_solver_flags(a: &ExperimentArgs, s: &mut graph_deblur::solvers::SolverConfigRecord) {
    s.rho0 = a.rho0;
    s.eta = a.eta;
    s.tau = a.tau;
    s.max_iter = a.max_iter;
    s.tol = a.tol;
}

fn save(
    dir: &Path,
    stem: &str,
    f: impl FnOnce(&Path, &Path) -> graph_deblur::Result<()>,
) -> Result<(), CliError> {
    let json = dir.join(format!("{stem}.json"));
    let csv = dir.join(format!("{stem}.csv"));
    f(&json, &csv)?;
    println!("wrote {} and {}", json.display(), csv.display());
    Ok(())
}

fn print_table(r: &ExperimentReport) {
    let agg = &r.aggregates;
    let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
    println!("Graph | Diffused | Convex relaxation | Proposed");
    println!(
        "{} | {:.4} | {} | {}",
        r.config.graph_kind.label(),
        agg.mean_rmse_diffused,
        fmt(agg.mean_rmse_convex),
        fmt(agg.mean_rmse_proposed)
    );
    if agg.failed_trials > 0 {
        println!("{} of {} trials failed", agg.failed_trials, r.records.len());
    }
}
