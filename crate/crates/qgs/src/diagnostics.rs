//! Statistical verification layer: Kolmogorov-Smirnov distances against
//! reference laws, Gumbel reference moments, and checkpoint-based
//! convergence and divergence reports.
//!
//! Almost-sure limits cannot be observed directly at desk scale, so the
//! reports here operationalize them: a statistic that converges along a
//! path should go Cauchy across late checkpoints (the gap between
//! consecutive cross-path medians falls under a declared fraction of the
//! cross-path spread), while a statistic that blows up should increase for
//! nearly every path across decade-spaced checkpoints and grow its median
//! by a large factor. Both verdicts are heuristics with printed thresholds,
//! not theorem checks, and they are deterministic functions of their input.

use crate::error::{Error, Result};
use crate::numeric::quad::{adaptive_multi, QuadratureBudget};
use crate::process::Checkpoint;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

/// Default stabilization tolerance: the late-checkpoint median gap must not
/// exceed this fraction of the final cross-path IQR.
pub const DEFAULT_STABILITY_TOLERANCE: f64 = 0.05;

/// Minimum sample size accepted by the KS routines.
pub const KS_MIN_SAMPLES: usize = 10;

/// Minimum number of paths the convergence and divergence reports accept.
pub const MIN_REPORT_PATHS: usize = 30;

const EULER_MASCHERONI: f64 = 0.5772156649015329;
const PI_SQ_OVER_6: f64 = 1.6449340668482264;

/// Provenance of a sample vector, echoed into reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub model: String,
    pub beta: f64,
    pub k: u64,
    pub n_paths: u64,
    pub seed: u64,
}

/// A nonempty vector of finite observations with a label and optional
/// provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    values: Vec<f64>,
    label: String,
    meta: Option<SampleMeta>,
}

impl SampleSet {
    pub fn new(values: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter(
                "sample set must be nonempty".into(),
            ));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite sample value {bad}"
            )));
        }
        Ok(SampleSet {
            values,
            label: label.into(),
            meta: None,
        })
    }

    pub fn with_meta(mut self, meta: SampleMeta) -> Self {
        self.meta = Some(meta);
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn meta(&self) -> Option<&SampleMeta> {
        self.meta.as_ref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Reference distribution for a one- or two-sample KS comparison.
#[derive(Debug, Clone, Copy)]
pub enum Reference<'a> {
    /// Unit exponential, F(x) = 1 - e^{-x}.
    Exp1,
    /// Standard Gumbel, F(x) = exp(-e^{-x}).
    GumbelStd,
    /// Another sample: two-sample comparison against its empirical CDF.
    Empirical(&'a SampleSet),
}

/// Standard Gumbel CDF.
pub fn gumbel_cdf(x: f64) -> f64 {
    (-(-x).exp()).exp()
}

fn exp1_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -(-x).exp_m1()
    }
}

/// KS distance with its effective sample size and an approximate p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsOutcome {
    /// sup-distance between the compared CDFs, in [0, 1].
    pub d: f64,
    /// Approximate probability of a distance this large under the null.
    pub p_value: f64,
    /// n for one-sample tests, nm/(n+m) for two-sample tests.
    pub n_eff: f64,
}

/// One- or two-sample Kolmogorov-Smirnov comparison.
///
/// The one-sample distance is evaluated on both sides of every jump of the
/// empirical CDF; the two-sample distance walks the merged order statistics
/// with ties consumed from both samples at once, so a set compared against
/// itself scores exactly zero.
pub fn ks_statistic(samples: &SampleSet, reference: Reference<'_>) -> Result<KsOutcome> {
    let n = samples.len();
    if n < KS_MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            n,
            min: KS_MIN_SAMPLES,
        });
    }
    let (d, n_eff) = match reference {
        Reference::Exp1 => (one_sample_d(samples.values(), exp1_cdf), n as f64),
        Reference::GumbelStd => (one_sample_d(samples.values(), gumbel_cdf), n as f64),
        Reference::Empirical(other) => {
            let m = other.len();
            if m < KS_MIN_SAMPLES {
                return Err(Error::TooFewSamples {
                    n: m,
                    min: KS_MIN_SAMPLES,
                });
            }
            let d = two_sample_d(samples.values(), other.values());
            (d, (n as f64 * m as f64) / (n + m) as f64)
        }
    };
    Ok(KsOutcome {
        d,
        p_value: ks_p_value(d, n_eff),
        n_eff,
    })
}

fn one_sample_d(values: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = values.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    d
}

fn two_sample_d(a: &[f64], b: &[f64]) -> f64 {
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < xs.len() && j < ys.len() {
        let v = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] == v {
            i += 1;
        }
        while j < ys.len() && ys[j] == v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Approximate p-value for a KS distance at effective sample size `n_eff`.
///
/// For n_eff >= 35 this is the asymptotic Kolmogorov law evaluated at the
/// finite-sample-corrected argument (sqrt(n) + 0.12 + 0.11/sqrt(n)) D, with
/// the alternating series truncated at 1e-10. Below 35 the asymptotic law
/// is unreliable, so the conservative distribution-free exponential bound
/// min(1, 2 e^{-2 n D^2}) is returned instead; it never understates the
/// p-value.
pub fn ks_p_value(d: f64, n_eff: f64) -> f64 {
    if d <= 0.0 {
        return 1.0;
    }
    if n_eff >= 35.0 {
        let root = n_eff.sqrt();
        kolmogorov_q((root + 0.12 + 0.11 / root) * d)
    } else {
        (2.0 * (-2.0 * n_eff * d * d).exp()).min(1.0)
    }
}

/// Survival function of the Kolmogorov law,
/// Q(λ) = 2 Σ_{j>=1} (-1)^{j-1} e^{-2 j² λ²}.
pub(crate) fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=1000 {
        let term = (-2.0 * (j as f64 * lambda).powi(2)).exp();
        sum += sign * term;
        if term < 1e-10 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Critical KS distance: the value a distance must stay below to be
/// accepted at the given significance level,
/// sqrt(-ln(sig/2)/2) / sqrt(n_eff).
pub fn ks_critical_value(n_eff: f64, significance: f64) -> Result<f64> {
    if !(n_eff.is_finite() && n_eff > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "n_eff must be positive, got {n_eff}"
        )));
    }
    if !(significance > 0.0 && significance < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "significance must lie in (0, 1), got {significance}"
        )));
    }
    Ok((-(significance / 2.0).ln() / 2.0).sqrt() / n_eff.sqrt())
}

/// Mean and variance of the standard Gumbel law, recomputed by quadrature
/// and cross-checked against the stored constants (Euler-Mascheroni and
/// π²/6) to 1e-10 before being returned. The integrals run in the
/// substituted variable t = e^{-x}, where the density is e^{-t}.
pub fn gumbel_reference_moments() -> (f64, f64) {
    static MOMENTS: OnceLock<(f64, f64)> = OnceLock::new();
    *MOMENTS.get_or_init(|| {
        let budget = QuadratureBudget {
            rel_tol: 1e-13,
            abs_tol: 1e-16,
            max_intervals: 40_000,
        };
        let seeds: Vec<(f64, f64)> = vec![
            (0.0, 1e-6),
            (1e-6, 1e-3),
            (1e-3, 0.1),
            (0.1, 1.0),
            (1.0, 6.0),
            (6.0, 60.0),
        ];
        let m1 = adaptive_multi(&|t: f64| -t.ln() * (-t).exp(), &seeds, &budget)
            .expect("Gumbel mean quadrature");
        let m2 = adaptive_multi(&|t: f64| t.ln().powi(2) * (-t).exp(), &seeds, &budget)
            .expect("Gumbel second-moment quadrature");
        let var = m2 - m1 * m1;
        assert!(
            (m1 - EULER_MASCHERONI).abs() < 1e-10 && (var - PI_SQ_OVER_6).abs() < 1e-10,
            "Gumbel moment quadrature drifted from stored constants: {m1}, {var}"
        );
        (m1, var)
    })
}

/// Checkpoint statistic to extract from a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    Ybar,
    LogT,
    TStar,
    NormalizedMean,
}

impl Statistic {
    pub fn extract(&self, c: &Checkpoint) -> f64 {
        match self {
            Statistic::Ybar => c.ybar,
            Statistic::LogT => c.log_t,
            Statistic::TStar => c.t_star,
            Statistic::NormalizedMean => c.normalized_mean,
        }
    }
}

impl std::fmt::Display for Statistic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Statistic::Ybar => "ybar",
            Statistic::LogT => "log_t",
            Statistic::TStar => "t_star",
            Statistic::NormalizedMean => "normalized_mean",
        })
    }
}

/// Cross-path summary of one checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckpointSummary {
    pub k: u64,
    pub mean: f64,
    pub variance: f64,
    pub median: f64,
    pub iqr: f64,
}

/// Stabilization report over a trajectory bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub statistic: Statistic,
    pub checkpoints: Vec<CheckpointSummary>,
    /// Largest jump between consecutive cross-path medians over the last
    /// three checkpoints.
    pub cauchy_gap: f64,
    /// Declared tolerance: stabilizing iff cauchy_gap <= tolerance * IQR
    /// at the final checkpoint.
    pub tolerance: f64,
    pub stabilizing: bool,
}

/// Divergence report over decade-spaced checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub statistic: Statistic,
    pub checkpoints: Vec<u64>,
    /// Fraction of paths strictly increasing across every checkpoint pair.
    pub fraction_increasing: f64,
    pub median_first: f64,
    pub median_last: f64,
    pub median_ratio: f64,
    pub diverging: bool,
}

/// p-quantile of pre-sorted data by linear interpolation between order
/// statistics (the common "type 7" rule).
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty() && (0.0..=1.0).contains(&p));
    if sorted.len() == 1 {
        return sorted[0];
    }
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Median of an unsorted slice (copies and sorts).
pub fn median_of(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile(&v, 0.5)
}

/// Pull one statistic at a fixed checkpoint k across every path.
pub fn collect_statistic(
    trajectories: &[Vec<Checkpoint>],
    statistic: Statistic,
    k: u64,
) -> Result<Vec<f64>> {
    trajectories
        .iter()
        .enumerate()
        .map(|(p, t)| {
            t.iter()
                .find(|c| c.k == k)
                .map(|c| statistic.extract(c))
                .ok_or_else(|| Error::InsufficientData(format!("path {p} has no checkpoint {k}")))
        })
        .collect()
}

fn checkpoint_grid(trajectories: &[Vec<Checkpoint>]) -> Result<Vec<u64>> {
    if trajectories.len() < MIN_REPORT_PATHS {
        return Err(Error::InsufficientData(format!(
            "need at least {MIN_REPORT_PATHS} paths, got {}",
            trajectories.len()
        )));
    }
    let grid: Vec<u64> = trajectories[0].iter().map(|c| c.k).collect();
    for (p, t) in trajectories.iter().enumerate() {
        if t.iter().map(|c| c.k).ne(grid.iter().copied()) {
            return Err(Error::InvalidParameter(format!(
                "path {p} reports a different checkpoint grid"
            )));
        }
    }
    Ok(grid)
}

fn summarize(k: u64, mut values: Vec<f64>) -> CheckpointSummary {
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let variance = if values.len() < 2 {
        0.0
    } else {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    };
    CheckpointSummary {
        k,
        mean,
        variance,
        median: quantile(&values, 0.5),
        iqr: quantile(&values, 0.75) - quantile(&values, 0.25),
    }
}

/// Cross-path stabilization report.
///
/// The statistic is extracted per path at each checkpoint and summarized
/// across paths; the verdict is stabilizing when the largest jump between
/// consecutive medians over the last three checkpoints is at most
/// `tolerance` times the final IQR. The comparison is non-strict so an
/// exactly constant statistic (gap and IQR both zero) counts as stable.
pub fn convergence_report(
    trajectories: &[Vec<Checkpoint>],
    statistic: Statistic,
    tolerance: f64,
) -> Result<ConvergenceReport> {
    if !(tolerance.is_finite() && tolerance > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tolerance}"
        )));
    }
    let grid = checkpoint_grid(trajectories)?;
    if grid.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "need at least 3 checkpoints, got {}",
            grid.len()
        )));
    }
    let checkpoints: Vec<CheckpointSummary> = grid
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            summarize(
                k,
                trajectories
                    .iter()
                    .map(|t| statistic.extract(&t[i]))
                    .collect(),
            )
        })
        .collect();
    let last3 = &checkpoints[checkpoints.len() - 3..];
    let cauchy_gap = (last3[1].median - last3[0].median)
        .abs()
        .max((last3[2].median - last3[1].median).abs());
    let stabilizing = cauchy_gap <= tolerance * last3[2].iqr;
    Ok(ConvergenceReport {
        statistic,
        checkpoints,
        cauchy_gap,
        tolerance,
        stabilizing,
    })
}

/// Decade-growth report.
///
/// The verdict is diverging when at least 90% of paths increase strictly
/// across every consecutive checkpoint pair and the cross-path median grows
/// by a factor of at least 5 from the first checkpoint to the last. The
/// checkpoint grid must span at least three decades.
pub fn divergence_check(
    trajectories: &[Vec<Checkpoint>],
    statistic: Statistic,
) -> Result<DivergenceReport> {
    let grid = checkpoint_grid(trajectories)?;
    if grid.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 checkpoints, got {}",
            grid.len()
        )));
    }
    let (first, last) = (grid[0], grid[grid.len() - 1]);
    if first == 0 || last < 1000 * first {
        return Err(Error::InsufficientData(format!(
            "checkpoints must span at least three decades, got {first}..{last}"
        )));
    }
    let increasing = trajectories
        .iter()
        .filter(|t| {
            t.windows(2)
                .all(|w| statistic.extract(&w[1]) > statistic.extract(&w[0]))
        })
        .count();
    let fraction_increasing = increasing as f64 / trajectories.len() as f64;
    let median_first = median_of(
        &trajectories
            .iter()
            .map(|t| statistic.extract(&t[0]))
            .collect::<Vec<_>>(),
    );
    let median_last = median_of(
        &trajectories
            .iter()
            .map(|t| statistic.extract(t.last().unwrap()))
            .collect::<Vec<_>>(),
    );
    let median_ratio = median_last / median_first;
    let diverging = fraction_increasing >= 0.9 && median_ratio >= 5.0;
    Ok(DivergenceReport {
        statistic,
        checkpoints: grid,
        fraction_increasing,
        median_first,
        median_last,
        median_ratio,
        diverging,
    })
}
