//! Adaptive random-walk Metropolis for [`JointModel`](crate::JointModel), with
//! multi-chain orchestration, convergence diagnostics and posterior summaries.
//!
//! Every parameter is sampled on an unconstrained scale:
//! `θᵢ = θ̃ᵢ + (1 − θ̃ᵢ)·logistic(z)` and `p = logistic(z)` for the accuracies,
//! with the log-Jacobians added to the target. Coordinates are updated one at a
//! time with Gaussian proposals whose scales are tuned during warmup.

mod diagnostics;
mod sampler;
mod summary;

pub use diagnostics::{diagnostics, ess_bulk, split_rhat, Diagnostics, RHAT_THRESHOLD};
pub use sampler::{sample, McmcConfig, PosteriorSamples};
pub use summary::{detection_ratio, quantile, summarize, ParameterSummary, PosteriorSummary};
