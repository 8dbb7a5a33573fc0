//! Joint Bayesian model over several survey rounds that share one test.
//!
//! Sensitivity and specificity get Beta priors obtained by updating a Jeffreys
//! Beta(1/2, 1/2) prior with a clinical evaluation table. Each round's
//! prevalence gets a Jeffreys prior truncated below at the confirmed-case
//! fraction of the population. All densities are unnormalized.

use serde::{Deserialize, Serialize};

use crate::model::{apparent, binomial_log_pmf, ClinicalTable, SurveyObservation};
use crate::{Error, Result};

/// Shape parameters of a Beta distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaShape {
    alpha: f64,
    beta: f64,
}

impl BetaShape {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("beta", beta)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, format!("Beta shape {v} must be positive and finite")));
            }
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }

    /// `(α − 1) ln x + (β − 1) ln(1 − x)`; a zero exponent contributes nothing,
    /// so Beta(1, 1) is flat on the closed interval.
    pub fn ln_density_unnormalized(&self, x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return f64::NEG_INFINITY;
        }
        power_term(self.alpha - 1.0, x) + power_term(self.beta - 1.0, 1.0 - x)
    }
}

fn power_term(exponent: f64, base: f64) -> f64 {
    if exponent == 0.0 {
        0.0
    } else {
        exponent * base.ln()
    }
}

/// Jeffreys prior on a prevalence restricted to `[lower_bound, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncatedJeffreysPrior {
    lower_bound: f64,
}

impl TruncatedJeffreysPrior {
    pub fn new(lower_bound: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&lower_bound) {
            return Err(Error::invalid("lower_bound", format!("{lower_bound} is not in [0, 1)")));
        }
        Ok(Self { lower_bound })
    }

    pub fn lower_bound(&self) -> f64 {
        self.lower_bound
    }
}

/// Jeffreys–Beta posteriors for (sensitivity, specificity) given a clinical
/// evaluation table: `Beta(r₊₊ + ½, r·₊ − r₊₊ + ½)` and
/// `Beta(r₋₋ + ½, r·₋ − r₋₋ + ½)`.
pub fn clinical_posterior(table: &ClinicalTable) -> (BetaShape, BetaShape) {
    let sens = BetaShape { alpha: table.true_pos_test_pos as f64 + 0.5, beta: table.true_pos_test_neg as f64 + 0.5 };
    let spec = BetaShape { alpha: table.true_neg_test_neg as f64 + 0.5, beta: table.true_neg_test_pos as f64 + 0.5 };
    (sens, spec)
}

/// Unnormalized log density of the truncated Jeffreys prior. The bound is
/// closed: `θ = lower_bound` is in the support.
pub fn log_prior_theta(prior: &TruncatedJeffreysPrior, theta: f64) -> f64 {
    if !(theta >= prior.lower_bound && theta < 1.0) {
        return f64::NEG_INFINITY;
    }
    -0.5 * theta.ln() - 0.5 * (-theta).ln_1p()
}

/// K survey rounds with their own prevalences and a shared test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointModel {
    surveys: Vec<SurveyObservation>,
    sens_prior: BetaShape,
    spec_prior: BetaShape,
    theta_priors: Vec<TruncatedJeffreysPrior>,
}

impl JointModel {
    /// Builds the model; each prevalence prior is truncated at the survey's
    /// confirmed fraction.
    pub fn new(surveys: Vec<SurveyObservation>, sens_prior: BetaShape, spec_prior: BetaShape) -> Result<Self> {
        if surveys.is_empty() {
            return Err(Error::invalid("surveys", "at least one survey is required"));
        }
        let theta_priors =
            surveys.iter().map(|s| TruncatedJeffreysPrior::new(s.confirmed_fraction())).collect::<Result<_>>()?;
        Ok(Self { surveys, sens_prior, spec_prior, theta_priors })
    }

    /// Model with accuracy priors taken from a clinical evaluation table.
    pub fn from_clinical(surveys: Vec<SurveyObservation>, table: &ClinicalTable) -> Result<Self> {
        let (sens, spec) = clinical_posterior(table);
        Self::new(surveys, sens, spec)
    }

    /// Number of survey rounds K.
    pub fn n_surveys(&self) -> usize {
        self.surveys.len()
    }

    /// K prevalences followed by sensitivity and specificity.
    pub fn n_params(&self) -> usize {
        self.surveys.len() + 2
    }

    pub fn surveys(&self) -> &[SurveyObservation] {
        &self.surveys
    }

    pub fn sens_prior(&self) -> BetaShape {
        self.sens_prior
    }

    pub fn spec_prior(&self) -> BetaShape {
        self.spec_prior
    }

    pub fn theta_priors(&self) -> &[TruncatedJeffreysPrior] {
        &self.theta_priors
    }

    /// Parameter names in draw-column order.
    pub fn parameter_names(&self) -> Vec<String> {
        (1..=self.surveys.len())
            .map(|i| format!("theta[{i}]"))
            .chain(["sensitivity".to_string(), "specificity".to_string()])
            .collect()
    }

    pub(crate) fn log_density_slice(&self, params: &[f64]) -> f64 {
        let k = self.surveys.len();
        let (sens, spec) = (params[k], params[k + 1]);
        let mut total = self.sens_prior.ln_density_unnormalized(sens) + self.spec_prior.ln_density_unnormalized(spec);
        for ((survey, prior), &theta) in self.surveys.iter().zip(&self.theta_priors).zip(&params[..k]) {
            total += log_prior_theta(prior, theta);
            if total == f64::NEG_INFINITY {
                return total;
            }
            total += binomial_log_pmf(survey.n_samples(), survey.x_positive(), apparent(theta, sens, spec));
        }
        total
    }
}

/// A point in the model's parameter space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterPoint {
    pub thetas: Vec<f64>,
    pub sensitivity: f64,
    pub specificity: f64,
}

impl ParameterPoint {
    pub fn new(thetas: Vec<f64>, sensitivity: f64, specificity: f64) -> Result<Self> {
        for (i, t) in thetas.iter().enumerate() {
            if !(0.0..=1.0).contains(t) {
                return Err(Error::invalid(format!("thetas[{i}]"), format!("{t} is not in [0, 1]")));
            }
        }
        for (name, v) in [("sensitivity", sensitivity), ("specificity", specificity)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(name, format!("{v} is not in [0, 1]")));
            }
        }
        Ok(Self { thetas, sensitivity, specificity })
    }

    pub(crate) fn to_vec(&self) -> Vec<f64> {
        let mut v = self.thetas.clone();
        v.push(self.sensitivity);
        v.push(self.specificity);
        v
    }
}

/// Individual additive terms of the log posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorTerms {
    pub likelihood: Vec<f64>,
    pub theta_prior: Vec<f64>,
    pub sens_prior: f64,
    pub spec_prior: f64,
}

impl PosteriorTerms {
    pub fn total(&self) -> f64 {
        self.likelihood.iter().sum::<f64>() + self.theta_prior.iter().sum::<f64>() + self.sens_prior + self.spec_prior
    }
}

pub fn log_posterior_terms(model: &JointModel, point: &ParameterPoint) -> Result<PosteriorTerms> {
    if point.thetas.len() != model.n_surveys() {
        return Err(Error::DimensionMismatch { expected: model.n_surveys(), found: point.thetas.len() });
    }
    let (sens, spec) = (point.sensitivity, point.specificity);
    let likelihood = model
        .surveys
        .iter()
        .zip(&point.thetas)
        .map(|(s, &theta)| binomial_log_pmf(s.n_samples(), s.x_positive(), apparent(theta, sens, spec)))
        .collect();
    let theta_prior = model.theta_priors.iter().zip(&point.thetas).map(|(p, &t)| log_prior_theta(p, t)).collect();
    Ok(PosteriorTerms {
        likelihood,
        theta_prior,
        sens_prior: model.sens_prior.ln_density_unnormalized(sens),
        spec_prior: model.spec_prior.ln_density_unnormalized(spec),
    })
}

/// Unnormalized joint log posterior; `-inf` outside the support.
pub fn log_posterior(model: &JointModel, point: &ParameterPoint) -> Result<f64> {
    if point.thetas.len() != model.n_surveys() {
        return Err(Error::DimensionMismatch { expected: model.n_surveys(), found: point.thetas.len() });
    }
    Ok(model.log_density_slice(&point.to_vec()))
}
