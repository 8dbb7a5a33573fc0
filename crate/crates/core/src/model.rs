//! Domain types and the misclassification-corrected binomial observation model.

use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::{Error, Result};

/// One survey round: `x_positive` test-positive samples out of `n_samples`,
/// with the fraction of the population already confirmed infected by the end
/// of the collection window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyObservation {
    n_samples: u64,
    x_positive: u64,
    confirmed_fraction: f64,
    label: String,
}

impl SurveyObservation {
    pub fn new(n_samples: u64, x_positive: u64, confirmed_fraction: f64, label: impl Into<String>) -> Result<Self> {
        if n_samples == 0 {
            return Err(Error::invalid("n_samples", "must be at least 1"));
        }
        if x_positive > n_samples {
            return Err(Error::invalid("x_positive", format!("{x_positive} exceeds n_samples = {n_samples}")));
        }
        if !(0.0..1.0).contains(&confirmed_fraction) {
            return Err(Error::invalid("confirmed_fraction", format!("{confirmed_fraction} is not in [0, 1)")));
        }
        Ok(Self { n_samples, x_positive, confirmed_fraction, label: label.into() })
    }

    /// Survey with no confirmed-case lower bound.
    pub fn unconstrained(n_samples: u64, x_positive: u64) -> Result<Self> {
        Self::new(n_samples, x_positive, 0.0, "")
    }

    pub fn n_samples(&self) -> u64 {
        self.n_samples
    }

    pub fn x_positive(&self) -> u64 {
        self.x_positive
    }

    pub fn confirmed_fraction(&self) -> f64 {
        self.confirmed_fraction
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Observed test-positive proportion `X / N`.
    pub fn raw_proportion(&self) -> f64 {
        self.x_positive as f64 / self.n_samples as f64
    }
}

/// Fixed sensitivity and specificity of a diagnostic test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AccuracyFields")]
pub struct TestAccuracy {
    sensitivity: f64,
    specificity: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AccuracyFields {
    sensitivity: f64,
    specificity: f64,
}

impl TryFrom<AccuracyFields> for TestAccuracy {
    type Error = Error;

    fn try_from(f: AccuracyFields) -> Result<Self> {
        Self::new(f.sensitivity, f.specificity)
    }
}

impl TestAccuracy {
    /// Both values must lie in `(0, 1]`. A value of exactly 1 is a perfect test.
    pub fn new(sensitivity: f64, specificity: f64) -> Result<Self> {
        for (name, v) in [("sensitivity", sensitivity), ("specificity", specificity)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::invalid(name, format!("{v} is not in (0, 1]")));
            }
        }
        Ok(Self { sensitivity, specificity })
    }

    pub fn perfect() -> Self {
        Self { sensitivity: 1.0, specificity: 1.0 }
    }

    pub fn sensitivity(&self) -> f64 {
        self.sensitivity
    }

    pub fn specificity(&self) -> f64 {
        self.specificity
    }

    /// Youden index `sens + spec − 1`; the slope of the apparent prevalence in θ.
    pub fn youden(&self) -> f64 {
        self.sensitivity + self.specificity - 1.0
    }

    pub fn false_positive_rate(&self) -> f64 {
        1.0 - self.specificity
    }

    /// False when `sens + spec = 1`, in which case the test result is independent
    /// of infection status.
    pub fn is_identifiable(&self) -> bool {
        self.youden() != 0.0
    }
}

/// 2×2 clinical evaluation of a test against samples of known status.
///
/// Rows are test results, columns true states; column totals are derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClinicalTable {
    pub true_pos_test_pos: u64,
    pub true_neg_test_pos: u64,
    pub true_pos_test_neg: u64,
    pub true_neg_test_neg: u64,
}

impl ClinicalTable {
    pub fn new(true_pos_test_pos: u64, true_neg_test_pos: u64, true_pos_test_neg: u64, true_neg_test_neg: u64) -> Self {
        Self { true_pos_test_pos, true_neg_test_pos, true_pos_test_neg, true_neg_test_neg }
    }

    /// Number of samples whose true state is positive.
    pub fn positives_total(&self) -> u64 {
        self.true_pos_test_pos + self.true_pos_test_neg
    }

    /// Number of samples whose true state is negative.
    pub fn negatives_total(&self) -> u64 {
        self.true_neg_test_pos + self.true_neg_test_neg
    }

    /// Empirical (sensitivity, specificity) as column proportions.
    pub fn point_accuracy(&self) -> Result<TestAccuracy> {
        let pos = self.positives_total();
        let neg = self.negatives_total();
        if pos == 0 || neg == 0 {
            return Err(Error::invalid(
                "clinical",
                "both true-positive and true-negative columns need at least one sample",
            ));
        }
        TestAccuracy::new(self.true_pos_test_pos as f64 / pos as f64, self.true_neg_test_neg as f64 / neg as f64)
    }
}

/// A prevalence value in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Prevalence(f64);

impl TryFrom<f64> for Prevalence {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Prevalence> for f64 {
    fn from(p: Prevalence) -> f64 {
        p.0
    }
}

impl Prevalence {
    pub const ZERO: Prevalence = Prevalence(0.0);
    pub const ONE: Prevalence = Prevalence(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::invalid("prevalence", format!("{value} is not in [0, 1]")));
        }
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Probability that a randomly sampled individual tests positive:
/// `θ·sens + (1 − θ)·(1 − spec)`.
pub fn apparent_prevalence(theta: Prevalence, acc: &TestAccuracy) -> f64 {
    apparent(theta.0, acc.sensitivity, acc.specificity)
}

#[inline]
pub(crate) fn apparent(theta: f64, sens: f64, spec: f64) -> f64 {
    theta * sens + (1.0 - theta) * (1.0 - spec)
}

/// Log of the binomial mass `P(X = x | n, p)`, with the coefficient included.
///
/// Returns `-inf` when `p ∈ {0, 1}` makes `x` impossible and `0` when it makes
/// `x` certain.
pub fn binomial_log_pmf(n: u64, x: u64, p: f64) -> f64 {
    debug_assert!(x <= n);
    if p <= 0.0 {
        return if x == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if p >= 1.0 {
        return if x == n { 0.0 } else { f64::NEG_INFINITY };
    }
    let (k, rest) = (x as f64, (n - x) as f64);
    let mut lp = ln_binomial(n, x);
    if x > 0 {
        lp += k * p.ln();
    }
    if n > x {
        lp += rest * (-p).ln_1p();
    }
    lp
}

/// Log-likelihood of θ for one survey under fixed accuracy.
pub fn log_likelihood(survey: &SurveyObservation, theta: Prevalence, acc: &TestAccuracy) -> f64 {
    binomial_log_pmf(survey.n_samples, survey.x_positive, apparent_prevalence(theta, acc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn reference_accuracy() -> TestAccuracy {
        TestAccuracy::new(42.0 / 45.0, 34.0 / 35.0).unwrap()
    }

    #[test]
    fn deserialization_validates() {
        let acc: TestAccuracy = serde_json::from_str(r#"{"sensitivity":0.9,"specificity":1.0}"#).unwrap();
        assert_eq!(acc, TestAccuracy::new(0.9, 1.0).unwrap());
        assert!(serde_json::from_str::<TestAccuracy>(r#"{"sensitivity":0.0,"specificity":1.0}"#).is_err());
        assert!(serde_json::from_str::<Prevalence>("1.2").is_err());
        assert_eq!(serde_json::to_string(&Prevalence::new(0.25).unwrap()).unwrap(), "0.25");
    }

    #[test]
    fn apparent_prevalence_endpoints() {
        let acc = reference_accuracy();
        assert!((apparent_prevalence(Prevalence::ZERO, &acc) - 1.0 / 35.0).abs() < 1e-15);
        assert!((apparent_prevalence(Prevalence::ONE, &acc) - 42.0 / 45.0).abs() < 1e-15);
        let acc = TestAccuracy::new(0.9, 0.95).unwrap();
        let t = apparent_prevalence(Prevalence::new(0.1).unwrap(), &acc);
        assert!((t - 0.135).abs() < 1e-15);
    }

    #[test]
    fn log_likelihood_examples() {
        let s = SurveyObservation::unconstrained(1, 0).unwrap();
        let acc = TestAccuracy::new(0.5, 1.0).unwrap();
        assert_eq!(log_likelihood(&s, Prevalence::ZERO, &acc), 0.0);

        assert!((binomial_log_pmf(2, 1, 0.5) - 0.5f64.ln()).abs() < 1e-14);

        let s = SurveyObservation::unconstrained(1500, 0).unwrap();
        let ll = log_likelihood(&s, Prevalence::ZERO, &reference_accuracy());
        // 1500·ln(34/35), evaluated at 40 digits.
        assert!((ll - (-43.481_305_309_878_43)).abs() < 1e-10);
    }

    #[test]
    fn impossible_outcomes_are_neg_infinity() {
        assert_eq!(binomial_log_pmf(10, 3, 0.0), f64::NEG_INFINITY);
        assert_eq!(binomial_log_pmf(10, 3, 1.0), f64::NEG_INFINITY);
        assert_eq!(binomial_log_pmf(10, 10, 1.0), 0.0);
    }

    #[test]
    fn constructors_reject_invalid_values() {
        assert!(SurveyObservation::new(0, 0, 0.0, "").is_err());
        assert!(SurveyObservation::new(10, 11, 0.0, "").is_err());
        assert!(SurveyObservation::new(10, 1, 1.0, "").is_err());
        assert!(SurveyObservation::new(10, 1, -0.1, "").is_err());
        assert!(TestAccuracy::new(0.0, 0.9).is_err());
        assert!(TestAccuracy::new(0.9, 1.01).is_err());
        assert!(TestAccuracy::new(f64::NAN, 0.9).is_err());
        assert!(TestAccuracy::new(1.0, 1.0).is_ok());
        assert!(Prevalence::new(1.5).is_err());
    }

    #[test]
    fn clinical_table_totals_and_point_accuracy() {
        let t = ClinicalTable::new(42, 1, 3, 34);
        assert_eq!(t.positives_total(), 45);
        assert_eq!(t.negatives_total(), 35);
        let acc = t.point_accuracy().unwrap();
        assert_eq!(acc.sensitivity(), 42.0 / 45.0);
        assert_eq!(acc.specificity(), 34.0 / 35.0);
        assert!(ClinicalTable::new(0, 1, 0, 3).point_accuracy().is_err());
    }

    #[test]
    fn identifiability_flag() {
        assert!(!TestAccuracy::new(0.3, 0.7).unwrap().is_identifiable());
        assert!(TestAccuracy::new(0.3, 0.6).unwrap().is_identifiable());
    }

    fn accuracy() -> impl Strategy<Value = TestAccuracy> {
        (0.01f64..=1.0, 0.01f64..=1.0).prop_map(|(a, b)| TestAccuracy::new(a, b).unwrap())
    }

    proptest! {
        #[test]
        fn pmf_sums_to_one(n in 1u64..=50, theta in 0.0f64..=1.0, acc in accuracy()) {
            let theta = Prevalence::new(theta).unwrap();
            let total: f64 = (0..=n)
                .map(|x| {
                    let s = SurveyObservation::unconstrained(n, x).unwrap();
                    log_likelihood(&s, theta, &acc).exp()
                })
                .sum();
            prop_assert!((total - 1.0).abs() < 1e-10, "total = {}", total);
        }

        #[test]
        fn reflection_symmetry(n in 1u64..=200, frac in 0.0f64..=1.0, theta in 0.0f64..=1.0,
                               sens in 0.01f64..0.99, spec in 0.01f64..0.99) {
            let acc = TestAccuracy::new(sens, spec).unwrap();
            let x = (frac * n as f64).floor() as u64;
            let s = SurveyObservation::unconstrained(n, x).unwrap();
            let swapped = TestAccuracy::new(1.0 - spec, 1.0 - sens).unwrap();
            let a = log_likelihood(&s, Prevalence::new(theta).unwrap(), &acc);
            let b = log_likelihood(&s, Prevalence::new(1.0 - theta).unwrap(), &swapped);
            // (θ, sens, spec) → (1−θ, 1−spec, 1−sens) leaves θ* fixed.
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0) || (a == b));
        }

        #[test]
        fn apparent_is_affine_and_monotone(t1 in 0.0f64..=1.0, t2 in 0.0f64..=1.0, acc in accuracy()) {
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            let a = apparent_prevalence(Prevalence::new(lo).unwrap(), &acc);
            let b = apparent_prevalence(Prevalence::new(hi).unwrap(), &acc);
            let y = acc.youden();
            if y > 1e-12 { prop_assert!(a <= b + 1e-15); }
            if y < -1e-12 { prop_assert!(a + 1e-15 >= b); }
            let lower = acc.false_positive_rate().min(acc.sensitivity());
            let upper = acc.false_positive_rate().max(acc.sensitivity());
            prop_assert!(a >= lower - 1e-15 && a <= upper + 1e-15);
            let mid = apparent_prevalence(Prevalence::new(0.5 * (lo + hi)).unwrap(), &acc);
            prop_assert!((mid - 0.5 * (a + b)).abs() < 1e-14);
        }
    }
}
