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

use clap::{Args, Parser, Subcommand, ValueEnum};
use graph_deblur::experiments::{GraphKind, InitRule};
use graph_deblur::solvers::{ScaleRule, SolverConfig, DEFAULT_MAX_ITER, DEFAULT_RHO0};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(
    name = "graph-deblur",
    version,
    about = "Blind deconvolution of sparse sources diffused on graphs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a random graph and write it as JSON.
    GenGraph(GenGraphArgs),
    /// Plant a sparse source, diffuse it and write the measurement.
    Diffuse(DiffuseArgs),
    /// Recover the source and filter from one measurement.
    Solve(SolveArgs),
    /// Run an evaluation protocol and write JSON and CSV reports.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KindArg {
    Sensor,
    Community,
}

impl From<KindArg> for GraphKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Sensor => GraphKind::Sensor,
            KindArg::Community => GraphKind::Community,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenGraphArgs {
    #[arg(long, value_enum, default_value = "sensor")]
    pub kind: KindArg,
    /// Node count.
    #[arg(long, default_value_t = 64)]
    pub n: usize,
    /// Nearest neighbours per node (sensor graphs).
    #[arg(long, default_value_t = graph_deblur::graphs::DEFAULT_SENSOR_NEIGHBORS)]
    pub k: usize,
    /// Community count (community graphs).
    #[arg(long, default_value_t = graph_deblur::graphs::DEFAULT_COMMUNITIES)]
    pub communities: usize,
    #[arg(long, default_value_t = graph_deblur::graphs::DEFAULT_P_IN)]
    pub p_in: f64,
    #[arg(long, default_value_t = graph_deblur::graphs::DEFAULT_P_OUT)]
    pub p_out: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AmplitudeArg {
    Fixed,
    Uniform,
}

/// Synthetic instance parameters shared by `diffuse` and `solve --synthesize`.
#[derive(Debug, Args, Clone)]
pub struct SynthArgs {
    /// Number of active sources.
    #[arg(long = "sources", default_value_t = 3)]
    pub sources: usize,
    /// True filter taps, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1.0,0.8,0.3")]
    pub h: Vec<f64>,
    #[arg(long, default_value_t = graph_deblur::experiments::DEFAULT_NOISE_SIGMA)]
    pub noise_sigma: f64,
    #[arg(long, value_enum, default_value = "fixed")]
    pub amplitude: AmplitudeArg,
    #[arg(long, default_value_t = 0.5)]
    pub amp_lo: f64,
    #[arg(long, default_value_t = 1.5)]
    pub amp_hi: f64,
    /// Base seed; source and noise draws use derived streams.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct DiffuseArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[command(flatten)]
    pub synth: SynthArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Convex,
    Ssparse,
}

#[derive(Debug, Args, Clone)]
pub struct SolverArgs {
    #[arg(long, default_value_t = DEFAULT_RHO0)]
    pub rho0: f64,
    #[arg(long, default_value_t = 0.99)]
    pub eta: f64,
    /// Fidelity radius of the S-sparse solver. Defaults to 1.1 sigma sqrt(n)
    /// when the noise level is known.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,
    #[arg(long, default_value_t = 3)]
    pub sparsity: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// `h0=1` or `unit-h`.
    #[arg(long, default_value = "h0=1")]
    pub scale_rule: ScaleRule,
}

impl SolverArgs {
    pub fn config(&self, epsilon: f64) -> SolverConfig<f64> {
        SolverConfig {
            rho0: self.rho0,
            eta: self.eta,
            epsilon,
            tau: self.tau,
            sparsity: self.sparsity,
            max_iter: self.max_iter,
            tol: self.tol,
            scale_rule: self.scale_rule,
        }
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// Measurement written by `diffuse`.
    #[arg(
        long,
        conflicts_with = "synthesize",
        required_unless_present = "synthesize"
    )]
    pub measurement: Option<PathBuf>,
    /// Draw a synthetic instance on the graph instead of reading one.
    #[arg(long)]
    pub synthesize: bool,
    #[command(flatten)]
    pub synth: SynthArgs,
    #[arg(long, value_enum, default_value = "ssparse")]
    pub method: MethodArg,
    /// Filter length assumed by the solver; defaults to the true length.
    #[arg(long)]
    pub filter_len: Option<usize>,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Warm start from a previous `solve` output (S-sparse only). Without it
    /// the convex solution is used.
    #[arg(long)]
    pub init: Option<PathBuf>,
    /// Write the per-iteration trace as CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ExperimentName {
    Matched,
    Mismatched,
    RecoveryMatrix,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum InitArg {
    Convex,
    Random,
}

impl From<InitArg> for InitRule {
    fn from(a: InitArg) -> Self {
        match a {
            InitArg::Convex => InitRule::ConvexSolution,
            InitArg::Random => InitRule::Random,
        }
    }
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(value_enum)]
    pub name: ExperimentName,
    #[arg(long, value_enum, default_value = "sensor")]
    pub graph: KindArg,
    /// Node count; defaults to 64 (sensor) or 100 (community).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 30)]
    pub trials: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = graph_deblur::experiments::DEFAULT_NOISE_SIGMA)]
    pub noise_sigma: f64,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_RHO0)]
    pub rho0: f64,
    #[arg(long, default_value_t = 0.99)]
    pub eta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Initialization of the S-sparse solver.
    #[arg(long, value_enum, default_value = "convex")]
    pub init: InitArg,
    /// Sparsity values of the recovery matrix.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    pub s_values: Vec<usize>,
    /// Filter lengths of the recovery matrix.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    pub l_values: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    pub trials_per_cell: usize,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}
