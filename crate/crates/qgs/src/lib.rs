//! Sequential quality-group selection over stretched-exponential tails.

// Guards are written `!(x < tol)` on purpose: a NaN from a failed
// computation must take the error branch, and the un-negated `x >= tol`
// would wave it through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Test oracles are pinned with every digit the oracle produced, beyond
// what an f64 literal retains; the surplus digits are documentation.
#![cfg_attr(test, allow(clippy::excessive_precision))]

pub mod asymptotics;
pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod numeric;
pub mod overshoot;
pub mod process;
pub mod rng;
pub mod tail_model;

pub use asymptotics::{
    classify_model, classify_regime, mixture_weights, normalizer, MeanRegime, MixtureLimit,
    MixtureWeights, RegimeClass, TstarRegime,
};
pub use diagnostics::{
    convergence_report, divergence_check, gumbel_reference_moments, ks_critical_value,
    ks_statistic, ConvergenceReport, DivergenceReport, KsOutcome, Reference, SampleMeta, SampleSet,
    Statistic,
};
pub use error::{Error, Result};
pub use harness::{
    run_experiment, simulate_to_files, write_checkpoint_csv, write_grid_csv, write_regime_csv,
    ExperimentConfig, ModelSpec, RunManifest, RunOutput,
};
pub use overshoot::{GFunctional, OvershootFunctional};
pub use process::{run_path, run_path_naive, Checkpoint, PathState, RuleConfig, WarmStart};
pub use tail_model::{HTerm, TailModel};

/// Re-export so downstream snippets can name the exact RNG types this crate
/// is built against without adding their own dependency lines.
pub use rand;
pub use rand_chacha;
