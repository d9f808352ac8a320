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

//! Synthetic trials, the evaluation protocols and their metrics.
//!
//! Every number in a report is a pure function of its configuration. One
//! graph is drawn per experiment from `graph_seed`; trial `t` uses the seed
//! `base_seed + t`, from which the source, noise, filter and random-init draws
//! take independent ChaCha streams (see [`role_seed`]).

mod metrics;
mod protocol;

pub use metrics::{make_sparse_source, restore_ratio, rmse, support_of, AmplitudeRule};
pub use protocol::{
    harness_epsilon, role_seed, run_experiment, run_experiment_matched, run_experiment_mismatched,
    run_recovery_matrix, run_trial, Aggregates, ExperimentConfig, ExperimentReport, FilterSpec,
    GraphKind, InitRule, Method, RecoveryCell, RecoveryConfig, RecoveryReport, Setting,
    TrialRecord, DEFAULT_NOISE_SIGMA, NOISELESS_EPSILON, REFERENCE_FILTER,
};
