//! Canned reproduction suites: each runs one pinned, seeded experiment and
//! checks its measured statistics against fixed thresholds.
//!
//! Every check prints its measured value next to its criterion; thresholds
//! live here in code, not in config, so a passing report always means the
//! same thing. Seeds are pinned constants: the suites are regression tests
//! of distributional behavior, not hypothesis tests, and reruns must be
//! bit-reproducible. Several windows are only about one empirical standard
//! error wide at the mandated sample sizes, which is deliberate: a wrong
//! limit law misses them by many standard errors.

use crate::asymptotics::{mixture_weights, MixtureLimit};
use crate::diagnostics::{
    convergence_report, divergence_check, ks_critical_value, ks_statistic, median_of, Reference,
    SampleSet, Statistic,
};
use crate::error::{Error, Result};
use crate::overshoot::{GFunctional, OvershootFunctional};
use crate::process::{run_path, run_path_naive, Checkpoint, RuleConfig};
use crate::rng::{derive_seed, path_stream};
use crate::tail_model::TailModel;
use rayon::prelude::*;
use serde::Serialize;

/// Names accepted by the verify entry point, in criterion order.
pub const SUITES: &[&str] = &[
    "gumbel-beta1",
    "tk-quadratic",
    "mean-power-law",
    "bk-convergence",
    "bk-divergence",
    "tstar-exp-limit",
    "tstar-mixture",
    "weights-normalization",
    "oracle-equivalence",
    "quadrature-closed-form",
];

/// One measured quantity against its threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckLine {
    pub label: String,
    pub measured: f64,
    pub criterion: String,
    pub pass: bool,
}

/// Outcome of one suite: all checks plus free-form context notes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub passed: bool,
    pub checks: Vec<CheckLine>,
    pub notes: Vec<String>,
}

impl SuiteReport {
    fn new(suite: &str, checks: Vec<CheckLine>, notes: Vec<String>) -> Self {
        SuiteReport {
            suite: suite.into(),
            passed: checks.iter().all(|c| c.pass),
            checks,
            notes,
        }
    }

    /// Render as aligned text lines, one check per line.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let tag = if c.pass { "[PASS]" } else { "[FAIL]" };
            out.push_str(&format!(
                "{tag} {}: measured {:.6} (want {})\n",
                c.label, c.measured, c.criterion
            ));
        }
        for n in &self.notes {
            out.push_str(&format!("  note: {n}\n"));
        }
        out
    }
}

fn within(label: &str, measured: f64, center: f64, tol: f64) -> CheckLine {
    CheckLine {
        label: label.into(),
        measured,
        criterion: format!("within {tol} of {center}"),
        pass: (measured - center).abs() <= tol,
    }
}

fn below(label: &str, measured: f64, bound: f64) -> CheckLine {
    CheckLine {
        label: label.into(),
        measured,
        criterion: format!("< {bound}"),
        pass: measured < bound,
    }
}

fn at_least(label: &str, measured: f64, bound: f64) -> CheckLine {
    CheckLine {
        label: label.into(),
        measured,
        criterion: format!(">= {bound}"),
        pass: measured >= bound,
    }
}

fn in_range(label: &str, measured: f64, lo: f64, hi: f64) -> CheckLine {
    CheckLine {
        label: label.into(),
        measured,
        criterion: format!("in [{lo}, {hi}]"),
        pass: (lo..=hi).contains(&measured),
    }
}

/// Run every path of a rule against a model, in parallel, building the
/// normalizing functional when the rule needs it.
fn run_bundle(model: &TailModel, rule: &RuleConfig) -> Result<Vec<Vec<Checkpoint>>> {
    let over = OvershootFunctional::new(model.clone())?;
    let g = if rule.beta == 1.0 {
        Some(GFunctional::new(&over, (rule.k_max as f64).ln() + 0.5)?)
    } else {
        None
    };
    (0..rule.n_paths)
        .into_par_iter()
        .map(|pid| run_path(rule, &over, g.as_ref(), pid))
        .collect()
}

fn rule(beta: f64, k_max: u64, checkpoints: Vec<u64>, seed: u64, n_paths: u64) -> RuleConfig {
    RuleConfig {
        beta,
        k_max,
        checkpoints,
        seed,
        n_paths,
        warm_start: None,
    }
}

fn stat_at(trajectories: &[Vec<Checkpoint>], statistic: Statistic, k: u64) -> Result<Vec<f64>> {
    crate::diagnostics::collect_statistic(trajectories, statistic, k)
}

/// Criterion 1: at β = 1 on the exponential model, the centered mean
/// Ȳ_k − G^{-1}(log k) approaches the standard Gumbel law.
pub fn gumbel_beta1() -> Result<SuiteReport> {
    const SEED: u64 = 1001;
    let rule = rule(1.0, 5000, vec![5000], SEED, 500);
    let trajectories = run_bundle(&TailModel::exponential(), &rule)?;
    let centered = stat_at(&trajectories, Statistic::NormalizedMean, 5000)?;
    let n = centered.len() as f64;
    let mean = centered.iter().sum::<f64>() / n;
    let var = centered.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let ks = ks_statistic(
        &SampleSet::new(centered, "centered mean")?,
        Reference::GumbelStd,
    )?;
    Ok(SuiteReport::new(
        "gumbel-beta1",
        vec![
            within("mean of centered Ybar", mean, 0.57722, 0.06),
            within("variance of centered Ybar", var, 1.64493, 0.15),
            below("KS distance to standard Gumbel", ks.d, 0.08),
        ],
        vec![format!(
            "exponential model, beta 1, k 5000, 500 paths, seed {SEED}"
        )],
    ))
}

/// Criterion 2: at α = 1, β = 1 the acquisition time grows quadratically:
/// log T_k / log k near 2 and T_k/k² roughly flat across k.
pub fn tk_quadratic() -> Result<SuiteReport> {
    const SEED: u64 = 1002;
    let rule = rule(1.0, 10_000, vec![2000, 8000, 10_000], SEED, 200);
    let trajectories = run_bundle(&TailModel::exponential(), &rule)?;
    let log_t_end = stat_at(&trajectories, Statistic::LogT, 10_000)?;
    let exponent = median_of(
        &log_t_end
            .iter()
            .map(|lt| lt / (10_000f64).ln())
            .collect::<Vec<_>>(),
    );
    let lt2 = stat_at(&trajectories, Statistic::LogT, 2000)?;
    let lt8 = stat_at(&trajectories, Statistic::LogT, 8000)?;
    let stable = lt2
        .iter()
        .zip(&lt8)
        .filter(|(a, b)| ((*b - *a - 2.0 * 4.0f64.ln()).exp() - 1.0).abs() < 0.25)
        .count() as f64
        / lt2.len() as f64;
    Ok(SuiteReport::new(
        "tk-quadratic",
        vec![
            in_range("median of log T / log k at k = 10^4", exponent, 1.8, 2.2),
            at_least(
                "fraction with T/k^2 within 25% between k = 2000 and 8000",
                stable,
                0.7,
            ),
        ],
        vec![format!("exponential model, beta 1, 200 paths, seed {SEED}")],
    ))
}

/// Criterion 3: at α = 2, β = 1 the mean grows like (log k)^{1/2}.
pub fn mean_power_law() -> Result<SuiteReport> {
    const SEED: u64 = 1003;
    let rule = rule(1.0, 100_000, vec![100_000], SEED, 200);
    let trajectories = run_bundle(&TailModel::stretched_pure(2.0)?, &rule)?;
    let ybar = stat_at(&trajectories, Statistic::Ybar, 100_000)?;
    let scale = (100_000f64).ln().sqrt();
    let ratio = median_of(&ybar.iter().map(|y| y / scale).collect::<Vec<_>>());
    Ok(SuiteReport::new(
        "mean-power-law",
        vec![in_range(
            "median of Ybar / sqrt(log k) at k = 10^5",
            ratio,
            0.97,
            1.03,
        )],
        vec![format!(
            "pure alpha = 2 model, beta 1, 200 paths, seed {SEED}"
        )],
    ))
}

/// Criterion 4 (acceptance-only, no named CLI suite): the additive
/// normalization Ȳ_k − G^{-1}(log k) goes Cauchy along each path.
pub fn additive_normalization() -> Result<SuiteReport> {
    const SEED: u64 = 1004;
    let rule = rule(1.0, 100_000, vec![10_000, 100_000], SEED, 100);
    let trajectories = run_bundle(&TailModel::stretched_pure(2.0)?, &rule)?;
    let early = stat_at(&trajectories, Statistic::NormalizedMean, 10_000)?;
    let late = stat_at(&trajectories, Statistic::NormalizedMean, 100_000)?;
    let gaps: Vec<f64> = early
        .iter()
        .zip(&late)
        .map(|(a, b)| (b - a).abs())
        .collect();
    Ok(SuiteReport::new(
        "additive-normalization",
        vec![below(
            "median per-path gap between k = 10^4 and 10^5",
            median_of(&gaps),
            0.05,
        )],
        vec![format!(
            "pure alpha = 2 model, beta 1, 100 paths, seed {SEED}"
        )],
    ))
}

/// Criterion 5: at α = 1, β = 1.5 the ratio B_k = Ȳ_k / k^{1/2} stabilizes
/// to a nondegenerate limit.
pub fn bk_convergence() -> Result<SuiteReport> {
    const SEED: u64 = 1005;
    let rule = rule(1.5, 100_000, vec![10_000, 30_000, 100_000], SEED, 200);
    let trajectories = run_bundle(&TailModel::exponential(), &rule)?;
    let report = convergence_report(&trajectories, Statistic::NormalizedMean, 0.05)?;
    let iqr_last = report.checkpoints.last().expect("checkpoints").iqr;
    Ok(SuiteReport::new(
        "bk-convergence",
        vec![
            below(
                "cauchy gap of B_k medians over last three checkpoints",
                report.cauchy_gap,
                {
                    // The verdict compares against tolerance x IQR; surface the
                    // resolved bound so the printed line is self-contained.
                    0.05 * iqr_last
                },
            ),
            at_least(
                "cross-path IQR of B_k at k = 10^5 (nondegenerate limit)",
                iqr_last,
                1e-6,
            ),
        ],
        vec![
            format!("exponential model, beta 1.5, 200 paths, seed {SEED}"),
            format!("stabilizing verdict: {}", report.stabilizing),
        ],
    ))
}

/// Criterion 6: on the log-squared model at β = 1.5, B_k diverges.
///
/// Known to fail on the growth-factor check, deliberately. Divergence is
/// real — every path climbs strictly through the decade checkpoints — but
/// slow: d log B / d log k = β / log(β Ȳ_k) decreases with k (measured
/// 0.20 at k = 10^3 down to 0.12 at 10^7, matching that formula), so the
/// median factor over [10^3, 10^6] lands near 3.3 and no feasible window
/// reaches the declared 5. The bar is kept rather than re-tuned to the
/// measurement; the check line reports the honest number.
pub fn bk_divergence() -> Result<SuiteReport> {
    const SEED: u64 = 1006;
    let rule = rule(1.5, 1_000_000, vec![1000, 31_623, 1_000_000], SEED, 30);
    let trajectories = run_bundle(&TailModel::log_squared(), &rule)?;
    let report = divergence_check(&trajectories, Statistic::NormalizedMean)?;
    Ok(SuiteReport::new(
        "bk-divergence",
        vec![
            at_least(
                "fraction of paths strictly increasing",
                report.fraction_increasing,
                0.9,
            ),
            at_least(
                "median growth factor across three decades",
                report.median_ratio,
                5.0,
            ),
        ],
        vec![
            format!("log-squared model, beta 1.5, 30 paths, seed {SEED}"),
            format!("diverging verdict: {}", report.diverging),
            "growth here is genuinely slow (rate beta / log(beta Ybar_k), decreasing in k); \
             the factor-5 bar at these checkpoints overstates what three decades can show"
                .into(),
        ],
    ))
}

/// Criterion 7: at α = 1, β = 3 the normalized acquisition time T*_k is
/// asymptotically unit exponential; T_k itself overflows long before k = 60,
/// so this exercises the log-domain counter.
pub fn tstar_exp_limit() -> Result<SuiteReport> {
    const SEED: u64 = 1007;
    let rule = rule(3.0, 60, vec![60], SEED, 2000);
    let trajectories = run_bundle(&TailModel::exponential(), &rule)?;
    let t_star = stat_at(&trajectories, Statistic::TStar, 60)?;
    let ks = ks_statistic(&SampleSet::new(t_star, "t_star")?, Reference::Exp1)?;
    let log_t = stat_at(&trajectories, Statistic::LogT, 60)?;
    let median_log_t = median_of(&log_t);
    Ok(SuiteReport::new(
        "tstar-exp-limit",
        vec![
            below("KS distance of T* to Exp(1) at k = 60", ks.d, 0.05),
            at_least(
                "median log T at k = 60 (raw T would overflow: log 1e300 = 690.8)",
                median_log_t,
                690.8,
            ),
        ],
        vec![format!(
            "exponential model, beta 3, 2000 paths, seed {SEED}"
        )],
    ))
}

/// Criterion 8: at the critical β = 1 + 1/α = 2 (α = 1), T*_k matches the
/// mixture limit law driven by the per-path growth constant ŵ = Ȳ_k / k.
pub fn tstar_mixture() -> Result<SuiteReport> {
    const SEED: u64 = 1008;
    let rule = rule(2.0, 80, vec![80], SEED, 2000);
    let trajectories = run_bundle(&TailModel::exponential(), &rule)?;
    let t_star = stat_at(&trajectories, Statistic::TStar, 80)?;
    let mean = t_star.iter().sum::<f64>() / t_star.len() as f64;
    // One comparator draw per path from the mixture law at that path's
    // realized w, on an independent stream.
    let w_hat = stat_at(&trajectories, Statistic::NormalizedMean, 80)?;
    let mix_seed = derive_seed(SEED, "mixture-draws");
    let draws: Vec<f64> = w_hat
        .par_iter()
        .enumerate()
        .map(|(i, &w)| {
            let mut rng = path_stream(mix_seed, i as u64);
            MixtureLimit::new(1.0, w)?.sample(&mut rng)
        })
        .collect::<Result<Vec<f64>>>()?;
    let ks = ks_statistic(
        &SampleSet::new(t_star, "t_star")?,
        Reference::Empirical(&SampleSet::new(draws, "mixture draws")?),
    )?;
    Ok(SuiteReport::new(
        "tstar-mixture",
        vec![
            within("pooled mean of T* at k = 80", mean, 1.0, 0.05),
            below("two-sample KS distance of T* to mixture draws", ks.d, 0.07),
        ],
        vec![format!(
            "exponential model, beta 2, 2000 paths, seed {SEED}"
        )],
    ))
}

/// Criterion 9: truncated mixture weights plus their tail mass sum to one
/// to near machine precision over a random parameter grid.
pub fn weights_normalization() -> Result<SuiteReport> {
    const SEED: u64 = 1009;
    let mut rng = path_stream(SEED, 0);
    let mut worst = 0.0f64;
    let mut ordered = true;
    for _ in 0..200 {
        let alpha = 0.3 + 3.7 * crate::rng::open01(&mut rng);
        let w = 0.05 + 4.95 * crate::rng::open01(&mut rng);
        let mw = mixture_weights(alpha, w, 64)?;
        let total = mw.weights.iter().sum::<f64>() + mw.tail_mass;
        worst = worst.max((total - 1.0).abs());
        // Strictly decreasing while positive; once weights underflow to
        // zero (flagged on the result) only ties at zero remain.
        ordered &= mw.weights.windows(2).all(|p| p[1] < p[0] || p[1] == 0.0);
    }
    Ok(SuiteReport::new(
        "weights-normalization",
        vec![
            below(
                "max |sum of weights + tail - 1| over 200 random (alpha, w)",
                worst,
                1e-12,
            ),
            at_least(
                "weights strictly decreasing on every draw",
                f64::from(u8::from(ordered)),
                1.0,
            ),
        ],
        vec![format!(
            "alpha in [0.3, 4], w in [0.05, 5], J = 64, seed {SEED}"
        )],
    ))
}

/// Criterion 10: the geometric-jump simulation agrees in law with the
/// observation-by-observation rejection simulation.
pub fn oracle_equivalence() -> Result<SuiteReport> {
    const SEED: u64 = 1010;
    let model = TailModel::exponential();
    let rule = rule(1.0, 5, vec![5], SEED, 100_000);
    let fast = run_bundle(&model, &rule)?;
    let naive: Vec<Vec<Checkpoint>> = (0..rule.n_paths)
        .into_par_iter()
        .map(|pid| run_path_naive(&rule, &model, pid))
        .collect::<Result<_>>()?;
    let crit = ks_critical_value(rule.n_paths as f64 / 2.0, 0.01)?;
    let mut checks = Vec::new();
    for (stat, name, integer_count) in [
        (Statistic::LogT, "T_5", true),
        (Statistic::Ybar, "Ybar_5", false),
    ] {
        let pull = |tr: &[Vec<Checkpoint>], tag: &str| -> Result<SampleSet> {
            let mut v = stat_at(tr, stat, 5)?;
            if integer_count {
                // T is an integer count with sizable atoms (for instance
                // every threshold met on the first try). The fast path
                // accumulates log T with rounding at the last bit while the
                // naive counter is exact, so equal counts would land one ulp
                // apart and stop being ties, inflating the distance by the
                // atom mass. Rounding restores exact ties; T_5 sits far
                // below 2^53, so the count is exactly representable.
                for x in &mut v {
                    *x = x.exp().round();
                }
            }
            SampleSet::new(v, format!("{tag} {name}"))
        };
        let a = pull(&fast, "fast")?;
        let b = pull(&naive, "naive")?;
        let ks = ks_statistic(&a, Reference::Empirical(&b))?;
        checks.push(below(
            &format!("two-sample KS on {name} vs 1% critical value"),
            ks.d,
            crit,
        ));
    }
    Ok(SuiteReport::new(
        "oracle-equivalence",
        checks,
        vec![format!(
            "exponential model, beta 1, k 5, 100000 paths each, seed {SEED}"
        )],
    ))
}

/// Criterion 11: functional plumbing against closed forms: memoryless
/// overshoot, G round-trip, and the derivative identity G' = 1/f.
pub fn quadrature_closed_form() -> Result<SuiteReport> {
    let over = OvershootFunctional::new(TailModel::exponential())?;
    let mut worst_f = 0.0f64;
    for a in [0.0, 1.0, 10.0] {
        worst_f = worst_f.max((over.expected_overshoot(a)? - 1.0).abs());
    }
    let g = GFunctional::new(&over, 20.0)?;
    let mut worst_rt = 0.0f64;
    let mut y = 0.5;
    while y < 20.0 {
        let x = g.g_inverse(y)?;
        worst_rt = worst_rt.max((g.g_of(x)? - y).abs() / (1.0 + y));
        y += 0.5;
    }
    let presets: Vec<(&str, TailModel)> = vec![
        ("exp", TailModel::exponential()),
        ("normal", TailModel::normal_tail()),
        ("stretched:2", TailModel::stretched_pure(2.0)?),
        ("stretched:0.5", TailModel::stretched_pure(0.5)?),
        ("loglog-sq", TailModel::log_squared()),
    ];
    let mut worst_fd = 0.0f64;
    for (_, model) in &presets {
        let over = OvershootFunctional::new(model.clone())?;
        let g = GFunctional::new(&over, 8.0)?;
        worst_fd = worst_fd.max(g.derivative_identity_error());
    }
    Ok(SuiteReport::new(
        "quadrature-closed-form",
        vec![
            below(
                "max |f(a) - 1| on exponential at a in {0, 1, 10}",
                worst_f,
                1e-9,
            ),
            below(
                "max relative G round-trip error up to G = 20",
                worst_rt,
                1e-9,
            ),
            below(
                "max relative derivative-identity deviation over presets",
                worst_fd,
                1e-4,
            ),
        ],
        vec!["deterministic: no seed".into()],
    ))
}

/// Run a named suite. Names are listed in [`SUITES`].
pub fn run_suite(name: &str) -> Result<SuiteReport> {
    match name {
        "gumbel-beta1" => gumbel_beta1(),
        "tk-quadratic" => tk_quadratic(),
        "mean-power-law" => mean_power_law(),
        "bk-convergence" => bk_convergence(),
        "bk-divergence" => bk_divergence(),
        "tstar-exp-limit" => tstar_exp_limit(),
        "tstar-mixture" => tstar_mixture(),
        "weights-normalization" => weights_normalization(),
        "oracle-equivalence" => oracle_equivalence(),
        "quadrature-closed-form" => quadrature_closed_form(),
        other => Err(Error::Config(format!(
            "unknown suite '{other}'; available: {}",
            SUITES.join(", ")
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_dispatch() {
        assert!(run_suite("no-such-suite").is_err());
        // The cheapest deterministic suite runs end to end.
        let report = run_suite("quadrature-closed-form").unwrap();
        assert_eq!(report.suite, "quadrature-closed-form");
        assert_eq!(report.checks.len(), 3);
        assert!(report.passed, "{}", report.render());
    }

    #[test]
    fn weights_suite_is_exact() {
        let report = run_suite("weights-normalization").unwrap();
        assert!(report.passed, "{}", report.render());
        assert!(report.checks[0].measured < 1e-12);
    }

    #[test]
    fn render_marks_failures() {
        let report = SuiteReport::new(
            "demo",
            vec![below("x", 2.0, 1.0), below("y", 0.5, 1.0)],
            vec!["context".into()],
        );
        assert!(!report.passed);
        let text = report.render();
        assert!(text.contains("[FAIL] x"));
        assert!(text.contains("[PASS] y"));
        assert!(text.contains("note: context"));
    }
}
