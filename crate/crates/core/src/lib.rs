//! Prevalence estimation from serology surveys when the diagnostic test is
//! imperfect.
//!
//! The crate covers three families of analysis over the same observation model
//! `X ~ Binom(N, θ·sens + (1 − θ)·(1 − spec))`:
//!
//! * frequentist estimators under fixed test accuracy ([`frequentist`]): the
//!   clipped maximum likelihood estimator, the score-test confidence set with
//!   explicit detection of the empty set, and the exact Clopper–Pearson
//!   interval for the perfect-test model;
//! * a Bayesian joint model ([`bayes`]) with Beta priors on sensitivity and
//!   specificity built from a clinical evaluation table, and Jeffreys priors on
//!   each prevalence truncated below at the confirmed-case fraction, sampled by
//!   an adaptive Metropolis engine ([`mcmc`]);
//! * a Monte Carlo harness ([`simulation`]) for bias, coverage and empty-set
//!   frequencies.
//!
//! [`config`], [`report`] and [`figure`] implement the file formats used by the
//! `seroprev` command-line tool.

pub mod bayes;
pub mod config;
mod error;
pub mod figure;
pub mod frequentist;
pub mod mcmc;
pub mod model;
pub mod report;
pub mod simulation;
pub mod special;

pub use bayes::{BetaShape, JointModel, ParameterPoint, TruncatedJeffreysPrior};
pub use error::{Error, Result};
pub use frequentist::{AcceptanceInterval, Alpha, IntervalEstimate};
pub use mcmc::{Diagnostics, McmcConfig, PosteriorSamples, PosteriorSummary};
pub use model::{ClinicalTable, Prevalence, SurveyObservation, TestAccuracy};
