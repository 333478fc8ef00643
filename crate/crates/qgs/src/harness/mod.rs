//! Experiment orchestration: configuration files, seeded parallel
//! execution, and reproducible CSV/JSON outputs.
//!
//! Reproducibility contract: the pair (config, seed) determines every
//! output byte. Paths draw from counter-mode streams keyed by
//! (seed, path_id), so the worker count and scheduling order cannot change
//! any result; outputs are merged by path id. Floats are written with
//! Rust's shortest round-trip formatting, which is platform-independent.

pub mod verify;

use crate::diagnostics::Statistic;
use crate::error::{Error, Result};
use crate::overshoot::{GFunctional, OvershootFunctional};
use crate::process::{run_path, Checkpoint, RuleConfig};
use crate::tail_model::{HTerm, TailModel};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};

/// Header line of every checkpoint CSV.
pub const CSV_HEADER: &str = "path_id,k,ybar,log_T,t_star,normalized_mean";

/// Environment variable consulted for the worker count when neither the
/// command line nor the config file names one.
pub const WORKERS_ENV: &str = "QGS_WORKERS";

/// Tail model selection: a named preset or an explicit exponent recipe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSpec {
    /// One of "exp", "normal", "loglog-sq", or "stretched:`<alpha>`".
    Preset(String),
    /// Full exponent description: H(x) = c x^alpha + terms.
    Explicit {
        c: f64,
        alpha: f64,
        #[serde(default)]
        terms: Vec<HTerm>,
        x0: f64,
    },
}

impl ModelSpec {
    pub fn build(&self) -> Result<TailModel> {
        match self {
            ModelSpec::Preset(name) => match name.as_str() {
                "exp" | "exponential" => Ok(TailModel::exponential()),
                "normal" => Ok(TailModel::normal_tail()),
                "loglog-sq" | "log-squared" => Ok(TailModel::log_squared()),
                other => {
                    if let Some(alpha) = other.strip_prefix("stretched:") {
                        let alpha: f64 = alpha.parse().map_err(|_| {
                            Error::Config(format!("unparseable alpha in preset '{other}'"))
                        })?;
                        TailModel::stretched_pure(alpha)
                    } else {
                        Err(Error::Config(format!(
                            "unknown preset '{other}'; expected exp, normal, loglog-sq, \
                             or stretched:<alpha>"
                        )))
                    }
                }
            },
            ModelSpec::Explicit {
                c,
                alpha,
                terms,
                x0,
            } => TailModel::stretched(*c, *alpha, terms.clone(), *x0),
        }
    }
}

/// One experiment: a model, a selection rule, and output options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub rule: RuleConfig,
    /// Statistics the run is meant to feed; echoed to the manifest so a
    /// reader knows which CSV columns matter downstream.
    #[serde(default = "default_statistics")]
    pub statistics: Vec<Statistic>,
    /// Worker threads; absent or 0 means one per core. The command line
    /// and the QGS_WORKERS variable both override this.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    /// Output prefix: the run writes `<prefix>.csv` and `<prefix>.manifest.json`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

fn default_statistics() -> Vec<Statistic> {
    vec![
        Statistic::Ybar,
        Statistic::LogT,
        Statistic::TStar,
        Statistic::NormalizedMean,
    ]
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.rule.validate()?;
        cfg.model.build()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Completed run: one checkpoint trajectory per path, in path order.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub model: TailModel,
    pub trajectories: Vec<Vec<Checkpoint>>,
}

/// Build the functionals and run every path of the experiment, in parallel
/// when `workers` (resolved: argument overrides config) is not 1.
pub fn run_experiment(config: &ExperimentConfig, workers: Option<usize>) -> Result<RunOutput> {
    let model = config.model.build()?;
    config.rule.validate()?;
    let over = OvershootFunctional::new(model.clone())?;
    let g = if config.rule.beta == 1.0 {
        // Cover G^{-1}(log k) up to k_max with headroom.
        Some(GFunctional::new(
            &over,
            (config.rule.k_max as f64).ln() + 0.5,
        )?)
    } else {
        None
    };
    let threads = workers.or(config.workers).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let trajectories: Result<Vec<Vec<Checkpoint>>> = pool.install(|| {
        (0..config.rule.n_paths)
            .into_par_iter()
            .map(|pid| run_path(&config.rule, &over, g.as_ref(), pid))
            .collect()
    });
    Ok(RunOutput {
        model,
        trajectories: trajectories?,
    })
}

/// Write the checkpoint CSV. Column order is fixed; floats use shortest
/// round-trip formatting so repeated runs are byte-identical.
pub fn write_checkpoint_csv<W: Write>(mut w: W, trajectories: &[Vec<Checkpoint>]) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for (pid, path) in trajectories.iter().enumerate() {
        for c in path {
            writeln!(
                w,
                "{pid},{},{},{},{},{}",
                c.k, c.ybar, c.log_t, c.t_star, c.normalized_mean
            )?;
        }
    }
    Ok(())
}

/// Everything needed to rerun and verify a CSV: the full config, the seed
/// repeated at top level for greppability, row count, and a content hash.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub n_rows: usize,
    pub csv_sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Run the experiment and write `<prefix>.csv` plus
/// `<prefix>.manifest.json`. Returns the manifest.
pub fn simulate_to_files(
    config: &ExperimentConfig,
    workers: Option<usize>,
    out_prefix: &Path,
) -> Result<RunManifest> {
    let output = run_experiment(config, workers)?;
    let mut csv = Vec::new();
    write_checkpoint_csv(&mut csv, &output.trajectories)?;
    let n_rows = output.trajectories.iter().map(Vec::len).sum();
    let manifest = RunManifest {
        config: config.clone(),
        seed: config.rule.seed,
        n_rows,
        csv_sha256: sha256_hex(&csv),
    };
    let csv_path = out_prefix.with_extension("csv");
    let manifest_path = out_prefix.with_extension("manifest.json");
    std::fs::write(&csv_path, &csv)?;
    let mut json = serde_json::to_vec_pretty(&manifest)?;
    json.push(b'\n');
    std::fs::write(&manifest_path, &json)?;
    Ok(manifest)
}

/// Regime classification grid as CSV, one row per (alpha, beta) pair.
pub fn write_regime_csv<W: Write>(mut w: W, alphas: &[f64], betas: &[f64]) -> Result<()> {
    if alphas.is_empty() || betas.is_empty() {
        return Err(Error::InvalidParameter(
            "regime grid must be nonempty".into(),
        ));
    }
    writeln!(w, "alpha,beta,mean_regime,t_star_regime,beta_lo,beta_hi")?;
    for (a, b, class) in crate::asymptotics::regime_table(alphas, betas)? {
        writeln!(
            w,
            "{a},{b},{},{},{},{}",
            class.mean, class.t_star, class.beta_lo, class.beta_hi
        )?;
    }
    Ok(())
}

/// The tabulated overshoot and normalizing functionals of a model as CSV:
/// columns x, f(x) = E Z(x), G(x).
pub fn write_grid_csv<W: Write>(mut w: W, model: &TailModel, g_max: f64) -> Result<()> {
    let over = OvershootFunctional::new(model.clone())?;
    let g = GFunctional::new(&over, g_max)?;
    writeln!(w, "x,overshoot_mean,g")?;
    for (x, f, gv) in g.rows() {
        writeln!(w, "{x},{f},{gv}")?;
    }
    Ok(())
}
