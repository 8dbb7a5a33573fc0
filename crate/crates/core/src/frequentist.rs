//! Estimators under fixed, known test accuracy.
//!
//! * [`mle`]: closed-form maximum likelihood estimate, clipped to `[0, 1]`.
//! * [`rao_acceptance_interval`] / [`rao_confidence_set`]: the score test of
//!   `H0: θ = θ0` and its inversion into a confidence set. For extreme counts no
//!   θ0 is accepted and the set is empty; [`empty_ci_condition`] detects this
//!   directly from the extrema of the acceptance bounds.
//! * [`clopper_pearson`]: exact interval for the perfect-test model
//!   `X ~ Binom(N, θ)`.

use serde::{Deserialize, Serialize};

use crate::model::{apparent, SurveyObservation, TestAccuracy};
use crate::special::{beta_quantile, chi_squared_quantile};
use crate::{Error, Prevalence, Result};

/// Significance level α of a two-sided test, strictly inside `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Alpha(f64);

impl Alpha {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::invalid("alpha", format!("{alpha} is not in (0, 1)")));
        }
        Ok(Self(alpha))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Confidence level `1 − α`.
    pub fn level(self) -> f64 {
        1.0 - self.0
    }

    /// Upper-α quantile of χ²(1), the score test's critical value.
    pub fn chi_squared_critical(self) -> f64 {
        chi_squared_quantile(1.0 - self.0, 1.0)
    }
}

impl Default for Alpha {
    fn default() -> Self {
        Self(0.05)
    }
}

impl TryFrom<f64> for Alpha {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        Alpha::new(v)
    }
}

impl From<Alpha> for f64 {
    fn from(a: Alpha) -> f64 {
        a.0
    }
}

/// Interval estimate of a proportion that may be the empty set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum IntervalEstimate {
    Nonempty { lower: f64, upper: f64, level: f64 },
    Empty { level: f64 },
}

impl IntervalEstimate {
    pub fn is_empty(&self) -> bool {
        matches!(self, IntervalEstimate::Empty { .. })
    }

    pub fn bounds(&self) -> Option<(f64, f64)> {
        match *self {
            IntervalEstimate::Nonempty { lower, upper, .. } => Some((lower, upper)),
            IntervalEstimate::Empty { .. } => None,
        }
    }

    pub fn level(&self) -> f64 {
        match *self {
            IntervalEstimate::Nonempty { level, .. } | IntervalEstimate::Empty { level } => level,
        }
    }

    pub fn contains(&self, value: f64) -> bool {
        self.bounds().is_some_and(|(lo, hi)| lo <= value && value <= hi)
    }
}

/// Acceptance region `[l, u]` of the score test, in units of counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceInterval {
    pub lower: f64,
    pub upper: f64,
}

impl AcceptanceInterval {
    pub fn contains(&self, x: u64) -> bool {
        let x = x as f64;
        self.lower <= x && x <= self.upper
    }
}

/// Maximum likelihood estimate of θ with the accuracy held fixed.
///
/// The unconstrained solution `(X/N − (1 − spec)) / (sens + spec − 1)` is
/// clipped to `[0, 1]`. A count exactly on the zero-clipping boundary maps to 0.
pub fn mle(survey: &SurveyObservation, acc: &TestAccuracy) -> Result<Prevalence> {
    if !acc.is_identifiable() {
        return Err(Error::NonIdentifiable);
    }
    let n = survey.n_samples() as f64;
    let x = survey.x_positive() as f64;
    let zero_at = n * acc.false_positive_rate();
    let one_at = n * acc.sensitivity();
    let estimate = if acc.youden() > 0.0 {
        if x <= zero_at {
            0.0
        } else if x >= one_at {
            1.0
        } else {
            interior_mle(survey, acc)
        }
    } else if x >= zero_at {
        0.0
    } else if x <= one_at {
        1.0
    } else {
        interior_mle(survey, acc)
    };
    Prevalence::new(estimate.clamp(0.0, 1.0))
}

fn interior_mle(survey: &SurveyObservation, acc: &TestAccuracy) -> f64 {
    (survey.raw_proportion() - acc.false_positive_rate()) / acc.youden()
}

/// `N(1 − spec)`: counts at or below this clip the MLE to zero when
/// `sens + spec > 1`.
pub fn mle_clip_threshold(survey: &SurveyObservation, acc: &TestAccuracy) -> f64 {
    survey.n_samples() as f64 * acc.false_positive_rate()
}

/// Level `1 − α` acceptance region of the score test of `θ = θ0` for a survey
/// of `n` samples: `N·t ± sqrt(N·c·t(1 − t))` with `t` the apparent prevalence
/// at θ0 and `c` the χ²(1) critical value, intersected with `[0, N]`.
pub fn rao_acceptance_interval(theta0: Prevalence, n: u64, acc: &TestAccuracy, alpha: Alpha) -> AcceptanceInterval {
    let t = apparent(theta0.value(), acc.sensitivity(), acc.specificity());
    acceptance_at(t, n as f64, alpha.chi_squared_critical())
}

fn acceptance_at(t: f64, n: f64, crit: f64) -> AcceptanceInterval {
    let centre = n * t;
    let half = (n * crit * t * (1.0 - t)).max(0.0).sqrt();
    AcceptanceInterval { lower: (centre - half).max(0.0), upper: (centre + half).min(n) }
}

/// Extrema of the acceptance bounds over θ0 ∈ [0, 1]:
/// `(inf l, sup u)`.
///
/// The bounds are smooth in the apparent prevalence `t`, which ranges over the
/// segment between `1 − spec` and `sens`; `l` is convex and `u` concave in `t`,
/// each with a single stationary point at `t = (1 ∓ sqrt(g / (1 + g))) / 2`,
/// `g = N / c`. The extremum is the bound evaluated at that point clamped into
/// the segment.
pub fn acceptance_bound_extrema(n: u64, acc: &TestAccuracy, alpha: Alpha) -> (f64, f64) {
    let n = n as f64;
    let crit = alpha.chi_squared_critical();
    let a = acc.false_positive_rate().min(acc.sensitivity());
    let b = acc.false_positive_rate().max(acc.sensitivity());
    let g = n / crit;
    let r = (g / (1.0 + g)).sqrt();
    let t_low = (0.5 * (1.0 - r)).clamp(a, b);
    let t_high = (0.5 * (1.0 + r)).clamp(a, b);
    (acceptance_at(t_low, n, crit).lower, acceptance_at(t_high, n, crit).upper)
}

/// True iff the observed count lies below every lower acceptance bound or above
/// every upper one, so that the score-test confidence set is empty.
pub fn empty_ci_condition(survey: &SurveyObservation, acc: &TestAccuracy, alpha: Alpha) -> bool {
    let (inf_lower, sup_upper) = acceptance_bound_extrema(survey.n_samples(), acc, alpha);
    let x = survey.x_positive() as f64;
    x < inf_lower || x > sup_upper
}

/// Confidence set `{θ0 ∈ [0, 1] : X ∈ A(θ0)}` from inverting the score test.
///
/// The acceptance condition `(X − N t)² ≤ c N t (1 − t)` is a quadratic in the
/// apparent prevalence `t`, solved in closed form; its root interval is
/// intersected with the attainable range of `t` and mapped back to θ0.
pub fn rao_confidence_set(survey: &SurveyObservation, acc: &TestAccuracy, alpha: Alpha) -> IntervalEstimate {
    let level = alpha.level();
    let (t_lo, t_hi) = score_roots(survey, alpha.chi_squared_critical());
    let fpr = acc.false_positive_rate();
    let youden = acc.youden();

    if youden == 0.0 {
        // Every θ0 gives the same t; accept all or nothing.
        return if t_lo <= fpr && fpr <= t_hi {
            IntervalEstimate::Nonempty { lower: 0.0, upper: 1.0, level }
        } else {
            IntervalEstimate::Empty { level }
        };
    }

    let theta_of = |t: f64| (t - fpr) / youden;
    let (mut lower, mut upper) = (theta_of(t_lo), theta_of(t_hi));
    if youden < 0.0 {
        std::mem::swap(&mut lower, &mut upper);
    }
    let lower = lower.max(0.0);
    let upper = upper.min(1.0);
    if lower > upper {
        IntervalEstimate::Empty { level }
    } else {
        IntervalEstimate::Nonempty { lower, upper, level }
    }
}

/// Roots of `(N + c) t² − (2X + c) t + X²/N = 0`; for a perfect test these are
/// the Wilson score limits.
fn score_roots(survey: &SurveyObservation, crit: f64) -> (f64, f64) {
    let n = survey.n_samples() as f64;
    let x = survey.x_positive() as f64;
    let centre = x + 0.5 * crit;
    let half = (crit * (x * (n - x) / n + 0.25 * crit)).sqrt();
    ((centre - half) / (n + crit), (centre + half) / (n + crit))
}

/// Exact two-sided Clopper–Pearson interval for `X ~ Binom(N, θ)`.
pub fn clopper_pearson(survey: &SurveyObservation, alpha: Alpha) -> IntervalEstimate {
    let n = survey.n_samples() as f64;
    let x = survey.x_positive() as f64;
    let a = alpha.value();
    let lower = if survey.x_positive() == 0 { 0.0 } else { beta_quantile(0.5 * a, x, n - x + 1.0) };
    let upper =
        if survey.x_positive() == survey.n_samples() { 1.0 } else { beta_quantile(1.0 - 0.5 * a, x + 1.0, n - x) };
    IntervalEstimate::Nonempty { lower, upper, level: alpha.level() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::log_likelihood;
    use proptest::prelude::*;

    fn reference_accuracy() -> TestAccuracy {
        TestAccuracy::new(42.0 / 45.0, 34.0 / 35.0).unwrap()
    }

    fn survey(n: u64, x: u64) -> SurveyObservation {
        SurveyObservation::unconstrained(n, x).unwrap()
    }

    /// Grid-search maximizer of the log-likelihood.
    fn grid_mle(s: &SurveyObservation, acc: &TestAccuracy, steps: usize) -> f64 {
        (0..=steps)
            .map(|i| i as f64 / steps as f64)
            .map(|t| (t, log_likelihood(s, Prevalence::new(t).unwrap(), acc)))
            .fold((0.0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
            .0
    }

    /// Wilson score interval written out directly.
    fn wilson(n: u64, x: u64, z2: f64) -> (f64, f64) {
        let (n, x) = (n as f64, x as f64);
        let p = x / n;
        let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
        let half = (z2.sqrt() / (1.0 + z2 / n)) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
        (centre - half, centre + half)
    }

    #[test]
    fn mle_examples() {
        let acc = reference_accuracy();
        assert_eq!(mle(&survey(1379, 3), &acc).unwrap(), Prevalence::ZERO);
        let acc = TestAccuracy::new(0.9, 0.95).unwrap();
        assert_eq!(mle(&survey(1000, 950), &acc).unwrap(), Prevalence::ONE);

        let s = survey(1000, 100);
        let est = mle(&s, &acc).unwrap().value();
        assert!((est - 0.05 / 0.85).abs() < 1e-12);
        let grid = grid_mle(&s, &acc, 1_000_000);
        assert!((est - grid).abs() < 1e-5, "{est} vs grid {grid}");
    }

    #[test]
    fn mle_tie_at_threshold_clips_to_zero() {
        let acc = TestAccuracy::new(0.9, 0.75).unwrap();
        let s = survey(100, 25);
        assert_eq!(mle_clip_threshold(&s, &acc), 25.0);
        assert_eq!(mle(&s, &acc).unwrap(), Prevalence::ZERO);
    }

    #[test]
    fn mle_rejects_non_identifiable_accuracy() {
        let acc = TestAccuracy::new(0.25, 0.75).unwrap();
        assert!(matches!(mle(&survey(10, 3), &acc), Err(Error::NonIdentifiable)));
    }

    #[test]
    fn mle_mirrored_case() {
        // sens < 1 − spec: the estimator reverses direction.
        let acc = TestAccuracy::new(0.1, 0.2).unwrap();
        assert_eq!(mle(&survey(100, 90), &acc).unwrap(), Prevalence::ZERO);
        assert_eq!(mle(&survey(100, 5), &acc).unwrap(), Prevalence::ONE);
        let s = survey(100, 50);
        let est = mle(&s, &acc).unwrap().value();
        assert!((est - grid_mle(&s, &acc, 100_000)).abs() < 2e-5);
    }

    #[test]
    fn clip_threshold_examples() {
        let acc = reference_accuracy();
        assert!((mle_clip_threshold(&survey(1500, 0), &acc) - 300.0 / 7.0).abs() < 1e-12);
        assert!((mle_clip_threshold(&survey(1440, 1), &acc) - 1440.0 / 35.0).abs() < 1e-12);
        let perfect_spec = TestAccuracy::new(0.9, 1.0).unwrap();
        assert_eq!(mle_clip_threshold(&survey(100, 0), &perfect_spec), 0.0);
    }

    #[test]
    fn acceptance_interval_examples() {
        let alpha = Alpha::default();
        let a = rao_acceptance_interval(Prevalence::new(0.5).unwrap(), 100, &TestAccuracy::perfect(), alpha);
        // 50 ± sqrt(100 · 3.841458820694124 · 0.25)
        let half = (100.0f64 * 3.841_458_820_694_124 * 0.25).sqrt();
        assert!((a.lower - (50.0 - half)).abs() < 1e-9 && (a.upper - (50.0 + half)).abs() < 1e-9);
        assert!((a.lower - 40.20).abs() < 0.005 && (a.upper - 59.80).abs() < 0.005);

        let a = rao_acceptance_interval(Prevalence::ZERO, 1500, &reference_accuracy(), alpha);
        assert!((a.lower - 30.2).abs() < 0.05, "{}", a.lower);

        let a = rao_acceptance_interval(Prevalence::ZERO, 77, &TestAccuracy::perfect(), alpha);
        assert_eq!((a.lower, a.upper), (0.0, 0.0));
    }

    #[test]
    fn empty_condition_examples() {
        let acc = reference_accuracy();
        let alpha = Alpha::default();
        assert!(empty_ci_condition(&survey(1500, 0), &acc, alpha));
        assert!(empty_ci_condition(&survey(1440, 1), &acc, alpha));

        let acc = TestAccuracy::new(0.9, 0.95).unwrap();
        let s = survey(100, 40);
        assert!(!empty_ci_condition(&s, &acc, alpha));
        // Brute-force extrema over a θ0 grid.
        let (mut inf_l, mut sup_u) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..=1_000_000 {
            let a = rao_acceptance_interval(Prevalence::new(i as f64 / 1e6).unwrap(), 100, &acc, alpha);
            inf_l = inf_l.min(a.lower);
            sup_u = sup_u.max(a.upper);
        }
        assert!(inf_l < 40.0 && 40.0 < sup_u);
        let (l, u) = acceptance_bound_extrema(100, &acc, alpha);
        assert!((l - inf_l).abs() < 1e-6 && (u - sup_u).abs() < 1e-6);
    }

    #[test]
    fn confidence_set_examples() {
        let alpha = Alpha::default();
        let acc = reference_accuracy();
        for (n, x) in [(1500, 0), (1440, 1), (1379, 3)] {
            assert!(rao_confidence_set(&survey(n, x), &acc, alpha).is_empty());
        }

        let ci = rao_confidence_set(&survey(1000, 500), &TestAccuracy::perfect(), alpha);
        let (lo, hi) = ci.bounds().unwrap();
        assert!((lo - 0.4690).abs() < 1e-4 && (hi - 0.5310).abs() < 1e-4, "{lo} {hi}");

        // Grid inversion of the acceptance condition.
        let acc = TestAccuracy::new(0.9, 0.95).unwrap();
        let s = survey(1000, 100);
        let accepted: Vec<f64> = (0..=1_000_000)
            .map(|i| i as f64 / 1e6)
            .filter(|&t| rao_acceptance_interval(Prevalence::new(t).unwrap(), 1000, &acc, alpha).contains(100))
            .collect();
        let (lo, hi) = rao_confidence_set(&s, &acc, alpha).bounds().unwrap();
        assert!((lo - accepted[0]).abs() < 1e-4);
        assert!((hi - accepted[accepted.len() - 1]).abs() < 1e-4);
        assert!(lo < 0.0588 && 0.0588 < hi);
    }

    #[test]
    fn non_identifiable_confidence_set_is_all_or_nothing() {
        let acc = TestAccuracy::new(0.3, 0.7).unwrap();
        let alpha = Alpha::default();
        let ci = rao_confidence_set(&survey(100, 30), &acc, alpha);
        assert_eq!(ci.bounds(), Some((0.0, 1.0)));
        assert!(rao_confidence_set(&survey(100, 90), &acc, alpha).is_empty());
    }

    #[test]
    fn clopper_pearson_examples() {
        let alpha = Alpha::default();
        let (lo, hi) = clopper_pearson(&survey(1500, 0), alpha).bounds().unwrap();
        assert_eq!(lo, 0.0);
        assert!((hi - (1.0 - 0.025f64.powf(1.0 / 1500.0))).abs() < 1e-12);
        assert!((hi - 0.002_456_231_484_198_49).abs() < 1e-12);

        let (lo, hi) = clopper_pearson(&survey(1440, 1), alpha).bounds().unwrap();
        assert!((lo - (1.0 - 0.975f64.powf(1.0 / 1440.0))).abs() < 1e-13);
        // Upper limit solves P(X ≤ 1 | p) = 0.025; found by bisection on the
        // binomial CDF written out term by term.
        let cdf = |p: f64| (1.0 - p).powi(1440) + 1440.0 * p * (1.0 - p).powi(1439);
        let (mut a, mut b) = (0.0, 0.1);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if cdf(m) > 0.025 {
                a = m;
            } else {
                b = m;
            }
        }
        assert!((hi - a).abs() < 1e-12, "{hi} vs {a}");
        assert!((lo - 1.758e-5).abs() < 1e-8 && (hi - 0.003_863_060_513_565_447).abs() < 1e-11);

        let (lo, hi) = clopper_pearson(&survey(10, 10), alpha).bounds().unwrap();
        assert!((lo - 0.025f64.powf(0.1)).abs() < 1e-12 && hi == 1.0);
    }

    #[test]
    fn degenerate_alpha_rejected() {
        assert!(Alpha::new(0.0).is_err());
        assert!(Alpha::new(1.0).is_err());
        assert!(serde_json::from_str::<Alpha>("1.5").is_err());
        assert_eq!(serde_json::from_str::<Alpha>("0.1").unwrap().value(), 0.1);
    }

    fn accuracy() -> impl Strategy<Value = TestAccuracy> {
        (0.05f64..=1.0, 0.05f64..=1.0).prop_map(|(a, b)| TestAccuracy::new(a, b).unwrap())
    }

    proptest! {
        #[test]
        fn empty_set_agrees_with_condition(n in 1u64..=2000, frac in 0.0f64..=1.0,
                                           acc in accuracy(), alpha in 0.001f64..0.5) {
            let x = (frac * n as f64).round() as u64;
            let s = survey(n, x);
            let alpha = Alpha::new(alpha).unwrap();
            prop_assume!(acc.is_identifiable());
            prop_assert_eq!(rao_confidence_set(&s, &acc, alpha).is_empty(), empty_ci_condition(&s, &acc, alpha));
        }

        #[test]
        fn interior_mle_lies_in_nonempty_set(n in 1u64..=500, frac in 0.0f64..=1.0, acc in accuracy()) {
            prop_assume!(acc.youden().abs() > 1e-3);
            let s = survey(n, (frac * n as f64).round() as u64);
            let est = mle(&s, &acc).unwrap().value();
            let ci = rao_confidence_set(&s, &acc, Alpha::default());
            if est > 0.0 && est < 1.0 {
                prop_assert!(ci.contains(est) || ci.bounds().is_some_and(|(l, u)| (est - l).abs() < 1e-12 || (est - u).abs() < 1e-12));
            }
        }

        #[test]
        fn interior_mle_matches_grid(n in 1u64..=200, frac in 0.0f64..=1.0, acc in accuracy()) {
            prop_assume!(acc.youden().abs() > 0.05);
            let s = survey(n, (frac * n as f64).round() as u64);
            let est = mle(&s, &acc).unwrap().value();
            let grid = grid_mle(&s, &acc, 20_000);
            prop_assert!((est - grid).abs() <= 5e-5 + 1e-9, "mle {} grid {}", est, grid);
        }

        #[test]
        fn perfect_test_set_is_wilson(n in 1u64..=100, frac in 0.0f64..=1.0) {
            let x = (frac * n as f64).round() as u64;
            let alpha = Alpha::default();
            let (lo, hi) = rao_confidence_set(&survey(n, x), &TestAccuracy::perfect(), alpha).bounds().unwrap();
            let (wl, wh) = wilson(n, x, alpha.chi_squared_critical());
            prop_assert!((lo - wl.max(0.0)).abs() < 1e-8 && (hi - wh.min(1.0)).abs() < 1e-8);
        }

        #[test]
        fn clopper_pearson_width_shrinks_with_n(n in 1u64..=3000) {
            let alpha = Alpha::default();
            let w = |n| { let (l, u) = clopper_pearson(&survey(n, 0), alpha).bounds().unwrap(); u - l };
            prop_assert!(w(n + 1) <= w(n));
        }
    }
}
