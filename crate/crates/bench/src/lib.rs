//! Shared inputs for the benchmarks.

use seroprev::config::AnalysisConfig;
use seroprev::{JointModel, McmcConfig, ParameterPoint, SurveyObservation, TestAccuracy};

pub fn fixture() -> AnalysisConfig {
    AnalysisConfig::korea2020()
}

pub fn surveys() -> Vec<SurveyObservation> {
    fixture().observations()
}

pub fn fixed_accuracy() -> TestAccuracy {
    fixture().fixed_accuracy().expect("fixture accuracy is valid")
}

pub fn model() -> JointModel {
    fixture().joint_model().expect("fixture model is valid")
}

/// A point in the bulk of the fixture posterior.
pub fn typical_point() -> ParameterPoint {
    ParameterPoint::new(vec![7.6e-4, 1.1e-3, 2.3e-3], 0.92, 0.9994).expect("point is in [0, 1]")
}

/// Four short chains, for timing the sampler rather than for inference.
pub fn short_run(seed: u64) -> McmcConfig {
    McmcConfig { n_chains: 4, n_warmup: 500, n_draws: 1000, seed, ..Default::default() }
}
