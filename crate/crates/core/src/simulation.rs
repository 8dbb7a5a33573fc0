//! Monte Carlo study of the fixed-accuracy estimators.
//!
//! Surveys are drawn from the misclassification model with a known prevalence
//! and run through [`frequentist`](crate::frequentist); the report counts how
//! often the score-test set is empty, how often the MLE is clipped to zero, and
//! how often each interval covers the truth.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::frequentist::{clopper_pearson, mle, rao_confidence_set, Alpha};
use crate::model::{apparent_prevalence, binomial_log_pmf, SurveyObservation, TestAccuracy};
use crate::{Error, Prevalence, Result};

/// One simulation scenario. In JSON, `alpha`, `n_replications` and `seed`
/// default to 0.05, 10,000 and 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub true_theta: Prevalence,
    pub acc: TestAccuracy,
    pub n_samples: u64,
    #[serde(default)]
    pub alpha: Alpha,
    #[serde(default = "default_replications")]
    pub n_replications: u64,
    #[serde(default)]
    pub seed: u64,
}

fn default_replications() -> u64 {
    10_000
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_replications == 0 {
            return Err(Error::invalid("n_replications", "must be at least 1"));
        }
        if self.n_samples == 0 {
            return Err(Error::invalid("n_samples", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub n_replications: u64,
    pub empty_ci_frequency: f64,
    /// Mean of the MLE over replications; `None` when θ is not identifiable.
    pub mle_mean: Option<f64>,
    pub mle_zero_frequency: Option<f64>,
    /// Coverage of the score-test set among replications where it is nonempty.
    pub rao_coverage_given_nonempty: Option<f64>,
    pub cp_coverage: f64,
    pub nonempty_count: u64,
}

/// Binomial sampler by inversion of a precomputed CDF table.
#[derive(Debug, Clone)]
pub struct BinomialInverter {
    cdf: Vec<f64>,
}

impl BinomialInverter {
    pub fn new(n: u64, p: f64) -> Self {
        let mut acc = 0.0;
        let cdf = (0..=n)
            .map(|x| {
                acc += binomial_log_pmf(n, x, p).exp();
                acc
            })
            .collect();
        Self { cdf }
    }

    /// Smallest `x` with `F(x) > u`, for `u ∈ [0, 1)`.
    pub fn invert(&self, u: f64) -> u64 {
        let total = *self.cdf.last().unwrap();
        let target = u * total;
        let idx = self.cdf.partition_point(|&c| c <= target);
        idx.min(self.cdf.len() - 1) as u64
    }
}

fn replication_uniform(seed: u64, index: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng.random::<f64>()
}

/// Survey for replication `index`; a pure function of `(spec.seed, index)`.
pub fn draw_survey(spec: &ScenarioSpec, replication_index: u64) -> SurveyObservation {
    let p = apparent_prevalence(spec.true_theta, &spec.acc);
    let inverter = BinomialInverter::new(spec.n_samples, p);
    draw_with(&inverter, spec, replication_index)
}

fn draw_with(inverter: &BinomialInverter, spec: &ScenarioSpec, index: u64) -> SurveyObservation {
    let x = inverter.invert(replication_uniform(spec.seed, index));
    SurveyObservation::new(spec.n_samples, x, 0.0, format!("rep{index}")).expect("count within range")
}

struct Outcome {
    empty: bool,
    rao_covered: bool,
    cp_covered: bool,
    mle: Option<f64>,
}

pub fn run_scenario(spec: &ScenarioSpec) -> Result<ScenarioReport> {
    spec.validate()?;
    let p = apparent_prevalence(spec.true_theta, &spec.acc);
    let inverter = BinomialInverter::new(spec.n_samples, p);
    let truth = spec.true_theta.value();

    let outcomes: Vec<Outcome> = (0..spec.n_replications)
        .into_par_iter()
        .map(|i| {
            let survey = draw_with(&inverter, spec, i);
            let rao = rao_confidence_set(&survey, &spec.acc, spec.alpha);
            Outcome {
                empty: rao.is_empty(),
                rao_covered: rao.contains(truth),
                cp_covered: clopper_pearson(&survey, spec.alpha).contains(truth),
                mle: mle(&survey, &spec.acc).ok().map(Prevalence::value),
            }
        })
        .collect();

    let reps = spec.n_replications as f64;
    let count = |f: fn(&Outcome) -> bool| outcomes.iter().filter(|o| f(o)).count() as u64;
    let empty = count(|o| o.empty);
    let nonempty = spec.n_replications - empty;
    let rao_covered = count(|o| o.rao_covered);
    let identifiable = spec.acc.is_identifiable();
    // Summed in replication order so the result is independent of scheduling.
    let mle_sum: f64 = outcomes.iter().filter_map(|o| o.mle).sum();
    let mle_zero = outcomes.iter().filter(|o| o.mle == Some(0.0)).count() as f64;

    Ok(ScenarioReport {
        n_replications: spec.n_replications,
        empty_ci_frequency: empty as f64 / reps,
        mle_mean: identifiable.then(|| mle_sum / reps),
        mle_zero_frequency: identifiable.then(|| mle_zero / reps),
        rao_coverage_given_nonempty: (nonempty > 0).then(|| rao_covered as f64 / nonempty as f64),
        cp_coverage: count(|o| o.cp_covered) as f64 / reps,
        nonempty_count: nonempty,
    })
}
