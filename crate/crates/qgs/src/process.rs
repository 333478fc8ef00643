//! The sequential better-than-average selection process.
//!
//! Candidates X_1, X_2, ... arrive i.i.d. from a tail model. The first is
//! always retained. With k retained and running average Ȳ_k, the rule waits
//! for the next candidate exceeding β Ȳ_k, retains it, and updates the
//! average. Three coupled quantities evolve:
//!
//!   Ȳ_{k+1} = Ȳ_k + ((β - 1) Ȳ_k + Z) / (k + 1),  Z the overshoot past β Ȳ_k,
//!   T_{k+1}  = T_k + N,  N ~ Geometric(1 - F(β Ȳ_k)) the waiting time,
//!   T*_k     = T_k / Σ_{j<k} 1/(1 - F(β Ȳ_j)),  the self-normalized count.
//!
//! Nothing here enumerates candidates: waiting times are drawn in one shot
//! from the geometric law and counts live in log space, so a step costs O(1)
//! even when T_k would overflow every integer type (β = 3 on an exponential
//! tail passes 10^300 before k reaches 60). [`run_path_naive`] is the
//! deliberate exception: a literal one-candidate-at-a-time transcription,
//! kept as a distributional oracle for the shortcut simulator.

use crate::error::{Error, Result};
use crate::numeric::log_add_exp;
use crate::overshoot::{GFunctional, OvershootFunctional};
use crate::rng::{self, exp1, open01, path_stream};
use crate::tail_model::TailModel;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Below this retention probability a geometric waiting time is
/// indistinguishable from Exp(1)/p at double precision, and the integer
/// ceiling has lost resolution anyway; the total-variation gap is O(p).
const GEOMETRIC_EXACT_FLOOR: f64 = 1e-9;

/// Run geometry: the rule parameter and the replication layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleConfig {
    /// Selection multiplier; 1 retains anything above the running average.
    pub beta: f64,
    /// Number of retained items to accumulate per path.
    pub k_max: u64,
    /// Group sizes at which to emit a checkpoint; strictly increasing.
    pub checkpoints: Vec<u64>,
    /// Master seed; path i uses stream i of the counter-mode generator.
    pub seed: u64,
    /// Number of independent paths.
    pub n_paths: u64,
    /// Start from an existing group instead of a single first item.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warm_start: Option<WarmStart>,
}

/// An already-formed group of k0 items with running average ybar0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WarmStart {
    pub k0: u64,
    pub ybar0: f64,
}

impl RuleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta.is_finite() && self.beta >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "beta must be finite and >= 1, got {}",
                self.beta
            )));
        }
        if self.k_max == 0 || self.n_paths == 0 {
            return Err(Error::InvalidParameter(
                "k_max and n_paths must be positive".into(),
            ));
        }
        if self.checkpoints.is_empty() {
            return Err(Error::InvalidParameter(
                "checkpoints must be nonempty".into(),
            ));
        }
        if !self.checkpoints.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidParameter(
                "checkpoints must be strictly increasing".into(),
            ));
        }
        let first = self.checkpoints[0];
        let last = *self.checkpoints.last().expect("nonempty");
        if last > self.k_max {
            return Err(Error::InvalidParameter(format!(
                "checkpoint {last} exceeds k_max = {}",
                self.k_max
            )));
        }
        if let Some(w) = self.warm_start {
            if w.k0 == 0 || !w.ybar0.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "warm start needs k0 >= 1 and finite ybar0, got k0 = {}, ybar0 = {}",
                    w.k0, w.ybar0
                )));
            }
            if first < w.k0 {
                return Err(Error::InvalidParameter(format!(
                    "checkpoint {first} precedes the warm-start group size {}",
                    w.k0
                )));
            }
        }
        if first == 0 {
            return Err(Error::InvalidParameter("checkpoints start at k = 1".into()));
        }
        Ok(())
    }
}

/// Complete per-path simulation state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathState {
    /// Retained-item count.
    pub k: u64,
    /// Running average Ȳ_k.
    pub ybar: f64,
    /// log T_k, the log of candidates inspected so far.
    pub log_t: f64,
    /// log Σ_{j=1}^{k-1} 1/(1 - F(β Ȳ_j)); -inf while the sum is empty.
    pub log_denom: f64,
}

/// Snapshot of a path at one group size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub k: u64,
    pub ybar: f64,
    pub log_t: f64,
    /// T*_k = exp(log_t - log_denom); the sentinel 1 at k = 1 or a warm
    /// start, where the denominator sum is still empty.
    pub t_star: f64,
    /// Ȳ_k - G^{-1}(log k) when β = 1; Ȳ_k / k^{β-1} when β > 1. NaN when
    /// the β = 1 normalizer was not supplied (the naive oracle path).
    pub normalized_mean: f64,
}

/// One retention step: wait for a candidate above β Ȳ_k, absorb it.
pub fn step<R: Rng + ?Sized>(
    state: &PathState,
    over: &OvershootFunctional,
    beta: f64,
    rng: &mut R,
) -> Result<PathState> {
    let model = over.model();
    let threshold = beta * state.ybar;
    if threshold < model.x0() {
        return Err(Error::ThresholdBelowSupport {
            threshold,
            x0: model.x0(),
        });
    }
    let log_p = model.log_sf(threshold)?;
    // Draw order is part of the reproducibility contract: the geometric
    // uniform first, the overshoot exponential second.
    let log_n = geometric_log_sample(log_p, rng);
    let z = over.sample_overshoot(threshold, rng)?;
    let k1 = state.k as f64 + 1.0;
    Ok(PathState {
        k: state.k + 1,
        ybar: state.ybar + ((beta - 1.0) * state.ybar + z) / k1,
        log_t: log_add_exp(state.log_t, log_n),
        log_denom: log_add_exp(state.log_denom, -log_p),
    })
}

/// Waiting time to the first success at log-probability `log_p`, returned as
/// log N. Exact geometric inversion while p is representable; the Exp(1)/p
/// limit once p drops below 1e-9, where the exact inversion loses the
/// low-order bits of log(1-p). Always consumes one draw.
pub fn geometric_log_sample<R: Rng + ?Sized>(log_p: f64, rng: &mut R) -> f64 {
    debug_assert!(log_p <= 0.0, "log_p must be nonpositive, got {log_p}");
    if log_p.exp() > GEOMETRIC_EXACT_FLOOR {
        geometric_log_exact(log_p, open01(rng))
    } else {
        geometric_log_limit(log_p, exp1(rng))
    }
}

fn geometric_log_exact(log_p: f64, u: f64) -> f64 {
    let p = log_p.exp();
    // N = ceil(log U / log(1 - p)), at least 1 (p = 1 divides by -inf).
    let n = (u.ln() / (-p).ln_1p()).ceil().max(1.0);
    n.ln()
}

fn geometric_log_limit(log_p: f64, e: f64) -> f64 {
    e.ln() - log_p
}

/// Apply one step's drawn quantities to the state: pure arithmetic, shared
/// between the sampler and its tests.
#[cfg(test)]
fn apply_step(state: &PathState, beta: f64, log_p: f64, log_n: f64, z: f64) -> PathState {
    let k1 = state.k as f64 + 1.0;
    PathState {
        k: state.k + 1,
        ybar: state.ybar + ((beta - 1.0) * state.ybar + z) / k1,
        log_t: log_add_exp(state.log_t, log_n),
        log_denom: log_add_exp(state.log_denom, -log_p),
    }
}

fn initial_state<R: Rng + ?Sized>(
    config: &RuleConfig,
    model: &TailModel,
    rng: &mut R,
) -> Result<PathState> {
    if let Some(w) = config.warm_start {
        return Ok(PathState {
            k: w.k0,
            ybar: w.ybar0,
            log_t: (w.k0 as f64).ln(),
            log_denom: f64::NEG_INFINITY,
        });
    }
    // The first candidate is always retained: one draw from the model,
    // realized as the overshoot past the support point.
    let e = exp1(rng);
    let y1 = model.x0() + model.invert_excess(model.x0(), e)?;
    Ok(PathState {
        k: 1,
        ybar: y1,
        log_t: 0.0,
        log_denom: f64::NEG_INFINITY,
    })
}

fn emit(state: &PathState, beta: f64, g: Option<&GFunctional>) -> Result<Checkpoint> {
    let t_star = if state.log_denom == f64::NEG_INFINITY {
        1.0
    } else {
        (state.log_t - state.log_denom).exp()
    };
    let kf = state.k as f64;
    let normalized_mean = if beta == 1.0 {
        match g {
            Some(g) => state.ybar - g.g_inverse(kf.ln())?,
            None => f64::NAN,
        }
    } else {
        state.ybar / kf.powf(beta - 1.0)
    };
    Ok(Checkpoint {
        k: state.k,
        ybar: state.ybar,
        log_t: state.log_t,
        t_star,
        normalized_mean,
    })
}

/// Simulate one path with rare-event shortcuts, checkpointing at the
/// configured group sizes. Deterministic in (config.seed, path_id) and
/// independent of how paths are scheduled across workers.
///
/// β = 1 checkpoints normalize the mean through `g`; pass it built with
/// `g_max >= log k_max`. For β > 1 the normalizer is k^{β-1} and `g` is
/// unused (None is fine).
pub fn run_path(
    config: &RuleConfig,
    over: &OvershootFunctional,
    g: Option<&GFunctional>,
    path_id: u64,
) -> Result<Vec<Checkpoint>> {
    config.validate()?;
    if path_id >= config.n_paths {
        return Err(Error::InvalidParameter(format!(
            "path_id {path_id} outside 0..{}",
            config.n_paths
        )));
    }
    if config.beta == 1.0 {
        let g = g.ok_or_else(|| {
            Error::Config("beta = 1 checkpoints need the G functional for normalization".into())
        })?;
        let need = (config.k_max as f64).ln();
        if g.g_max() < need {
            return Err(Error::Config(format!(
                "G table covers values up to {:.3} but log k_max = {need:.3}",
                g.g_max()
            )));
        }
    }
    let mut rng = path_stream(config.seed, path_id);
    let mut state = initial_state(config, over.model(), &mut rng)?;
    let mut out = Vec::with_capacity(config.checkpoints.len());
    let mut next_cp = config.checkpoints.iter().copied().peekable();
    while let Some(&cp) = next_cp.peek() {
        if cp < state.k {
            next_cp.next();
            continue;
        }
        if cp == state.k {
            out.push(emit(&state, config.beta, g)?);
            next_cp.next();
            continue;
        }
        state = step(&state, over, config.beta, &mut rng)?;
    }
    Ok(out)
}

/// Literal transcription of the rule: inspect candidates one at a time.
///
/// Counts live in a 64-bit integer, so this is only feasible where T_k stays
/// small; it exists as a distributional oracle for [`run_path`]. Draws come
/// from a purpose-separated stream, so the two simulators give independent
/// samples under the same (seed, path_id). β = 1 checkpoints carry NaN in
/// `normalized_mean` (this path has no G table).
pub fn run_path_naive(
    config: &RuleConfig,
    model: &TailModel,
    path_id: u64,
) -> Result<Vec<Checkpoint>> {
    config.validate()?;
    if path_id >= config.n_paths {
        return Err(Error::InvalidParameter(format!(
            "path_id {path_id} outside 0..{}",
            config.n_paths
        )));
    }
    if config.warm_start.is_some() {
        return Err(Error::InvalidParameter(
            "the naive oracle starts from a single item; warm start is not meaningful".into(),
        ));
    }
    let mut rng = path_stream(rng::derive_seed(config.seed, "naive-oracle"), path_id);
    let x0 = model.x0();
    let draw = |rng: &mut rand_chacha::ChaCha12Rng| -> Result<f64> {
        let e = exp1(rng);
        Ok(x0 + model.invert_excess(x0, e)?)
    };
    let mut t: u64 = 1;
    let mut k: u64 = 1;
    let mut ybar = draw(&mut rng)?;
    let mut log_denom = f64::NEG_INFINITY;
    let mut out = Vec::with_capacity(config.checkpoints.len());
    let mut next_cp = config.checkpoints.iter().copied().peekable();
    loop {
        while next_cp.peek() == Some(&k) {
            let state = PathState {
                k,
                ybar,
                log_t: (t as f64).ln(),
                log_denom,
            };
            out.push(emit(&state, config.beta, None)?);
            next_cp.next();
        }
        if next_cp.peek().is_none() {
            return Ok(out);
        }
        let threshold = config.beta * ybar;
        if threshold < x0 {
            return Err(Error::ThresholdBelowSupport { threshold, x0 });
        }
        let log_p = model.log_sf(threshold)?;
        let retained = loop {
            t = t.checked_add(1).ok_or(Error::CounterOverflow(u64::MAX))?;
            let x = draw(&mut rng)?;
            if x > threshold {
                break x;
            }
        };
        log_denom = log_add_exp(log_denom, -log_p);
        let k1 = (k + 1) as f64;
        ybar += ((config.beta - 1.0) * ybar + (retained - threshold)) / k1;
        k += 1;
    }
}
