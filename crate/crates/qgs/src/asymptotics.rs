//! Limit regimes of the selection process over the (α, β) plane.
//!
//! For pure stretched-exponential tails e^{-x^α} the long-run behavior of
//! the normalized inspection count T*_k splits into four regimes separated
//! by β_lo = 1 + 1/(2α) and β_hi = 1 + 1/α:
//!
//!   1 ≤ β < β_lo   T*_k -> 1 almost surely,
//!   β_lo ≤ β < β_hi  T*_k -> 1 in probability only,
//!   β = β_hi        T*_k converges in law to a random mixture,
//!   β > β_hi        T*_k converges in law to a unit exponential.
//!
//! The running mean needs a different normalization on either side of β = 1:
//! subtract G^{-1}(log k) at β = 1 (additive), divide by k^{β-1} past it
//! (multiplicative); both normalized sequences converge almost surely.
//!
//! At the critical β = 1 + 1/α the limit is a mixture: conditioned on the
//! realized multiplicative limit w of Ȳ_k / k^{1/α}, the law of T*_k is a
//! sum of independent exponentials with means μ_j = (e^g - 1) e^{-jg},
//! g = (βw)^α. The weights telescope: μ_j = e^{-(j-1)g} - e^{-jg}, so the
//! truncated sum plus its tail e^{-Jg} equals one to rounding error.
//!
//! Everything in this module is exact for h ≡ 0 models; with slowly varying
//! terms present the trichotomy is returned with `extrapolated = true`, as
//! the classification is then an educated guess rather than a theorem.

use crate::error::{Error, Result};
use crate::overshoot::GFunctional;
use crate::rng::exp1;
use crate::tail_model::TailModel;
use rand::Rng;
use serde::Serialize;

/// Tail mass a mixture comparator must truncate below before sampling.
pub const MIXTURE_TAIL_BOUND: f64 = 1e-10;

/// Normalization under which the running mean converges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanRegime {
    /// β = 1: Ȳ_k - G^{-1}(log k) converges almost surely.
    AdditiveAlmostSure,
    /// β > 1: Ȳ_k / k^{β-1} converges almost surely.
    MultiplicativeAlmostSure,
}

/// Limit behavior of the self-normalized inspection count T*_k.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TstarRegime {
    /// 1 ≤ β < 1 + 1/(2α): convergence to 1 almost surely.
    AlmostSure,
    /// 1 + 1/(2α) ≤ β < 1 + 1/α: convergence to 1 in probability only.
    InProbability,
    /// β = 1 + 1/α: nondegenerate mixture limit.
    Mixture,
    /// β > 1 + 1/α: unit-exponential limit.
    ExpLimit,
}

impl std::fmt::Display for TstarRegime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TstarRegime::AlmostSure => "almost_sure",
            TstarRegime::InProbability => "in_probability",
            TstarRegime::Mixture => "mixture",
            TstarRegime::ExpLimit => "exp_limit",
        })
    }
}

impl std::fmt::Display for MeanRegime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MeanRegime::AdditiveAlmostSure => "additive_as",
            MeanRegime::MultiplicativeAlmostSure => "multiplicative_as",
        })
    }
}

/// Joint classification of one (α, β) point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeClass {
    pub mean: MeanRegime,
    pub t_star: TstarRegime,
    /// Lower boundary 1 + 1/(2α) of the in-probability band.
    pub beta_lo: f64,
    /// Critical value 1 + 1/α carrying the mixture limit.
    pub beta_hi: f64,
    /// True when the classified model carries slowly varying terms: the
    /// trichotomy is proven for the pure power exponent only, so the answer
    /// is an extrapolation there.
    pub extrapolated: bool,
}

/// Classify a pure power point. The lower band edge is inclusive (the
/// boundary case belongs to the weaker in-probability class); the critical
/// β is matched to a relative 1e-12 to absorb decimal-literal noise.
pub fn classify_regime(alpha: f64, beta: f64) -> Result<RegimeClass> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    if !(beta.is_finite() && beta >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "beta must be >= 1, got {beta}"
        )));
    }
    let beta_lo = 1.0 + 1.0 / (2.0 * alpha);
    let beta_hi = 1.0 + 1.0 / alpha;
    let t_star = if (beta - beta_hi).abs() <= 1e-12 * beta {
        TstarRegime::Mixture
    } else if beta > beta_hi {
        TstarRegime::ExpLimit
    } else if beta >= beta_lo {
        TstarRegime::InProbability
    } else {
        TstarRegime::AlmostSure
    };
    let mean = if beta == 1.0 {
        MeanRegime::AdditiveAlmostSure
    } else {
        MeanRegime::MultiplicativeAlmostSure
    };
    Ok(RegimeClass {
        mean,
        t_star,
        beta_lo,
        beta_hi,
        extrapolated: false,
    })
}

/// Classify a model's (α, β) point, flagging extrapolation beyond the pure
/// power exponent. The log-squared model has no leading power at all, so it
/// admits no classification.
pub fn classify_model(model: &TailModel, beta: f64) -> Result<RegimeClass> {
    let alpha = model.alpha().ok_or_else(|| {
        Error::InvalidParameter(
            "the log-squared model has no leading power alpha; the (alpha, beta) \
             regime map does not apply"
                .into(),
        )
    })?;
    let mut class = classify_regime(alpha, beta)?;
    class.extrapolated = model.has_h_terms();
    Ok(class)
}

/// The mean normalizer at group size k: G^{-1}(log k) for β = 1 (to be
/// subtracted), k^{β-1} for β > 1 (to divide by). The caller applies the
/// matching arithmetic.
pub fn normalizer(g: Option<&GFunctional>, beta: f64, k: u64) -> Result<f64> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!(
            "normalizer needs k >= 2, got {k}"
        )));
    }
    if !(beta.is_finite() && beta >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "beta must be >= 1, got {beta}"
        )));
    }
    if beta == 1.0 {
        let g = g.ok_or_else(|| {
            Error::Config("the beta = 1 normalizer needs the G functional".into())
        })?;
        g.g_inverse((k as f64).ln())
    } else {
        Ok((k as f64).powf(beta - 1.0))
    }
}

/// Truncated mixture weights with explicit tail mass.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixtureWeights {
    /// μ_1 .. μ_J, strictly decreasing while positive (under extreme rates
    /// the trailing weights underflow to exact zeros).
    pub weights: Vec<f64>,
    /// Exact mass beyond the truncation: e^{-J g}.
    pub tail_mass: f64,
    /// Set when g = (βw)^α exceeds 700: trailing weights underflow to zero.
    /// The normalization identity still holds; the flag is informational.
    pub underflow: bool,
}

/// Weights μ_j = (e^g - 1) e^{-jg} for j = 1..J, with g = (βw)^α and
/// β = 1 + 1/α, computed in telescoped form so the truncated sum plus the
/// tail equals 1 to rounding error.
pub fn mixture_weights(alpha: f64, w: f64, j_max: u64) -> Result<MixtureWeights> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    if !(w.is_finite() && w > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "w must be positive, got {w}"
        )));
    }
    if j_max == 0 {
        return Err(Error::InvalidParameter(
            "at least one weight is required".into(),
        ));
    }
    let beta = 1.0 + 1.0 / alpha;
    let g = (beta * w).powf(alpha);
    if !g.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "(beta w)^alpha overflows: w = {w}"
        )));
    }
    let mut weights = Vec::with_capacity(j_max.min(1 << 24) as usize);
    for j in 1..=j_max {
        let upper = (-g * (j as f64 - 1.0)).exp();
        let lower = (-g * j as f64).exp();
        weights.push(upper - lower);
    }
    Ok(MixtureWeights {
        weights,
        tail_mass: (-g * j_max as f64).exp(),
        underflow: g > 700.0,
    })
}

/// The critical-β limit law of T*_k conditioned on the realized growth
/// constant w: a sum of independent exponentials with means μ_j.
#[derive(Debug, Clone)]
pub struct MixtureLimit {
    alpha: f64,
    w: f64,
    weights: MixtureWeights,
}

impl MixtureLimit {
    /// Build with the truncation chosen automatically so the tail mass sits
    /// under [`MIXTURE_TAIL_BOUND`].
    pub fn new(alpha: f64, w: f64) -> Result<Self> {
        let beta = 1.0 + 1.0 / alpha;
        let g = (beta * w).powf(alpha);
        if !(g.is_finite() && g > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "degenerate mixture rate (beta w)^alpha = {g}"
            )));
        }
        let needed = (-MIXTURE_TAIL_BOUND.ln() / g).ceil().max(1.0);
        if needed > 5e6 {
            return Err(Error::InvalidTruncation {
                tail: (-g * 5e6).exp(),
                bound: MIXTURE_TAIL_BOUND,
            });
        }
        Self::with_terms(alpha, w, needed as u64)
    }

    /// Build with an explicit truncation J. Sampling additionally requires
    /// the tail mass below [`MIXTURE_TAIL_BOUND`].
    pub fn with_terms(alpha: f64, w: f64, j_max: u64) -> Result<Self> {
        let weights = mixture_weights(alpha, w, j_max)?;
        Ok(MixtureLimit { alpha, w, weights })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// The critical β = 1 + 1/α this limit lives at.
    pub fn beta(&self) -> f64 {
        1.0 + 1.0 / self.alpha
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights.weights
    }

    pub fn tail_mass(&self) -> f64 {
        self.weights.tail_mass
    }

    pub fn underflow(&self) -> bool {
        self.weights.underflow
    }

    /// Draw Σ_j R_j with R_j independent exponentials of mean μ_j.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        if !(self.weights.tail_mass < MIXTURE_TAIL_BOUND) {
            return Err(Error::InvalidTruncation {
                tail: self.weights.tail_mass,
                bound: MIXTURE_TAIL_BOUND,
            });
        }
        Ok(self.weights.weights.iter().map(|&mu| mu * exp1(rng)).sum())
    }
}

/// Classification grid for export: one row per (α, β) pair, in row-major
/// order over the supplied axes.
pub fn regime_table(alphas: &[f64], betas: &[f64]) -> Result<Vec<(f64, f64, RegimeClass)>> {
    let mut rows = Vec::with_capacity(alphas.len() * betas.len());
    for &a in alphas {
        for &b in betas {
            rows.push((a, b, classify_regime(a, b)?));
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::overshoot::OvershootFunctional;
    use crate::rng::path_stream;
    use crate::tail_model::HTerm;

    // mpmath (50 dps) oracle values.
    const MU1_ALPHA1_W1: f64 = 0.8646647167633873081060005;
    const SUM_MU_SQ_ALPHA1_W1: f64 = 0.7615941559557648881194583;
    const P_SUM_GT_3_ALPHA1_W1: f64 = 0.03678062126951908787533296;
    const LN_100: f64 = 4.605170185988091368035983;
    const GINV_16_ALPHA2: f64 = 3.751359344041482601155485;

    #[test]
    fn alpha_one_classification_ladder() {
        let c = |b: f64| classify_regime(1.0, b).unwrap().t_star;
        assert_eq!(c(1.0), TstarRegime::AlmostSure);
        assert_eq!(c(1.2), TstarRegime::AlmostSure);
        assert_eq!(c(1.5), TstarRegime::InProbability, "band edge is inclusive");
        assert_eq!(c(1.8), TstarRegime::InProbability);
        assert_eq!(c(2.0), TstarRegime::Mixture);
        assert_eq!(c(3.0), TstarRegime::ExpLimit);
        assert_eq!(
            classify_regime(1.0, 1.0).unwrap().mean,
            MeanRegime::AdditiveAlmostSure
        );
        assert_eq!(
            classify_regime(1.0, 1.2).unwrap().mean,
            MeanRegime::MultiplicativeAlmostSure
        );
    }

    #[test]
    fn classification_is_monotone_in_beta() {
        let rank = |t: TstarRegime| t as u8;
        for i in 0..16 {
            let alpha = 0.25 + i as f64 * 0.25;
            let hi = 1.0 + 1.0 / alpha;
            let mut last = 0u8;
            let mut b = 1.0;
            while b < hi + 1.0 {
                let r = rank(classify_regime(alpha, b).unwrap().t_star);
                assert!(r >= last, "regression at alpha = {alpha}, beta = {b}");
                last = r;
                b += 0.01;
            }
            // Exact boundaries land in their stated classes.
            let lo = 1.0 + 1.0 / (2.0 * alpha);
            assert_eq!(
                classify_regime(alpha, lo).unwrap().t_star,
                TstarRegime::InProbability
            );
            assert_eq!(
                classify_regime(alpha, hi).unwrap().t_star,
                TstarRegime::Mixture
            );
            assert_eq!(
                classify_regime(alpha, hi + 1e-6).unwrap().t_star,
                TstarRegime::ExpLimit
            );
        }
    }

    #[test]
    fn classify_rejects_bad_parameters() {
        assert!(classify_regime(0.0, 2.0).is_err());
        assert!(classify_regime(-1.0, 2.0).is_err());
        assert!(classify_regime(1.0, 0.9).is_err());
        assert!(classify_regime(f64::NAN, 2.0).is_err());
    }

    #[test]
    fn model_classification_flags_extrapolation() {
        let pure = TailModel::stretched_pure(2.0).unwrap();
        assert!(!classify_model(&pure, 1.5).unwrap().extrapolated);
        let with_h =
            TailModel::stretched(1.0, 2.0, vec![HTerm::PowerLog { kappa: 1.0 }], 0.5).unwrap();
        assert!(classify_model(&with_h, 1.5).unwrap().extrapolated);
        assert!(classify_model(&TailModel::log_squared(), 1.5).is_err());
        assert_eq!(
            classify_model(&pure, 1.5).unwrap().t_star,
            TstarRegime::Mixture
        );
    }

    #[test]
    fn normalizer_examples() {
        // β > 1: plain power of k.
        assert_eq!(normalizer(None, 1.5, 100).unwrap(), 10.0);
        // β = 1, exponential model: G is the identity, so G^{-1}(log k) = log k.
        let over = OvershootFunctional::new(TailModel::exponential()).unwrap();
        let g = GFunctional::new(&over, 6.0).unwrap();
        let v = normalizer(Some(&g), 1.0, 100).unwrap();
        assert!((v - LN_100).abs() < 1e-9, "got {v}");
        // β = 1, α = 2: G(a) = a^2 + log a + O(1), so G^{-1}(16) sits below 4.
        let over2 = OvershootFunctional::new(TailModel::stretched_pure(2.0).unwrap()).unwrap();
        let g2 = GFunctional::new(&over2, 17.0).unwrap();
        let k = 8_886_111u64; // log k = 16.0000000556
        let v2 = normalizer(Some(&g2), 1.0, k).unwrap();
        assert!((v2 - GINV_16_ALPHA2).abs() < 1e-4, "got {v2}");
        assert!(v2 < 4.0);
        // Missing G at β = 1 and undersized k are reported.
        assert!(normalizer(None, 1.0, 100).is_err());
        assert!(normalizer(None, 1.5, 1).is_err());
    }

    #[test]
    fn weights_match_critical_formula() {
        // α = 1, w = 1: g = 2, μ_1 = 1 - e^{-2}.
        let mw = mixture_weights(1.0, 1.0, 1).unwrap();
        assert!((mw.weights[0] - MU1_ALPHA1_W1).abs() < 1e-15);
        assert!((mw.tail_mass - (1.0 - MU1_ALPHA1_W1)).abs() < 1e-15);
        assert!(!mw.underflow);
    }

    #[test]
    fn weights_telescope_to_one() {
        let cases: &[(f64, f64, u64)] = &[
            (1.0, 1.0, 40),
            (2.0, 0.3, 200),
            (0.5, 4.0, 30),
            (3.0, 0.9, 25),
        ];
        for &(alpha, w, j) in cases {
            let mw = mixture_weights(alpha, w, j).unwrap();
            let total: f64 = mw.weights.iter().sum::<f64>() + mw.tail_mass;
            assert!((total - 1.0).abs() < 1e-12, "alpha {alpha}, w {w}: {total}");
            for pair in mw.weights.windows(2) {
                assert!(pair[1] < pair[0], "weights must strictly decrease");
            }
        }
    }

    #[test]
    fn underflow_is_flagged_not_fatal() {
        let mw = mixture_weights(1.0, 400.0, 5).unwrap();
        assert!(mw.underflow);
        assert_eq!(mw.weights[0], 1.0);
        let total: f64 = mw.weights.iter().sum::<f64>() + mw.tail_mass;
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sampling_requires_tight_truncation() {
        let coarse = MixtureLimit::with_terms(1.0, 1.0, 2).unwrap();
        let mut rng = path_stream(1, 0);
        assert!(matches!(
            coarse.sample(&mut rng),
            Err(Error::InvalidTruncation { .. })
        ));
        let auto = MixtureLimit::new(1.0, 1.0).unwrap();
        assert!(auto.tail_mass() < MIXTURE_TAIL_BOUND);
        assert!(auto.sample(&mut rng).is_ok());
    }

    #[test]
    fn mixture_moments_and_tail_match_oracles() {
        let mix = MixtureLimit::new(1.0, 1.0).unwrap();
        let mut rng = path_stream(424242, 0);
        let n = 1_000_000usize;
        let (mut sum, mut sum_sq, mut above3) = (0.0, 0.0, 0u64);
        for _ in 0..n {
            let s = mix.sample(&mut rng).unwrap();
            sum += s;
            sum_sq += s * s;
            if s > 3.0 {
                above3 += 1;
            }
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        // Mean = Σ μ_j ~ 1, SE ~ sqrt(Σ μ_j²)/√n ~ 9e-4.
        assert!((mean - 1.0).abs() < 3e-3, "mean {mean}");
        // Variance = Σ μ_j² (independent exponentials), known in closed form.
        assert!((var - SUM_MU_SQ_ALPHA1_W1).abs() < 1e-2, "var {var}");
        // Tail probability against the high-precision hypoexponential oracle.
        let p = above3 as f64 / n as f64;
        assert!((p - P_SUM_GT_3_ALPHA1_W1).abs() < 1e-3, "P(sum>3) {p}");
        // Analytic lower bracket: the first term alone already exceeds 3
        // with probability e^{-3/μ_1}.
        assert!(p > (-3.0 / MU1_ALPHA1_W1).exp(), "bracket violated: {p}");
    }

    #[test]
    fn regime_table_covers_grid() {
        let rows = regime_table(&[0.5, 1.0, 2.0], &[1.0, 1.5, 2.0, 3.0]).unwrap();
        assert_eq!(rows.len(), 12);
        let (a, b, class) = rows[7];
        assert_eq!((a, b), (1.0, 3.0));
        assert_eq!(class.t_star, TstarRegime::ExpLimit);
    }
}
