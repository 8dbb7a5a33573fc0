use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::diagnostics::{diagnostics, Diagnostics};
use crate::bayes::{BetaShape, JointModel};
use crate::{Error, Result};

const MAX_INIT_ATTEMPTS: usize = 1000;
const LOG_STEP_RANGE: (f64, f64) = (-15.0, 5.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McmcConfig {
    pub n_chains: usize,
    pub n_warmup: usize,
    pub n_draws: usize,
    pub seed: u64,
    /// Per-coordinate acceptance rate targeted during warmup.
    pub target_accept: f64,
    /// Initial proposal scale on the unconstrained axis.
    pub initial_step: f64,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self { n_chains: 4, n_warmup: 1000, n_draws: 1000, seed: 0, target_accept: 0.4, initial_step: 0.5 }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_chains == 0 {
            return Err(Error::invalid("mcmc.n_chains", "must be at least 1"));
        }
        if self.n_draws == 0 {
            return Err(Error::invalid("mcmc.n_draws", "must be at least 1"));
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(Error::invalid("mcmc.target_accept", format!("{} is not in (0, 1)", self.target_accept)));
        }
        if !(self.initial_step > 0.0 && self.initial_step.is_finite()) {
            return Err(Error::invalid("mcmc.initial_step", format!("{} must be positive", self.initial_step)));
        }
        Ok(())
    }
}

/// Post-warmup draws of `(θ₁, …, θ_K, sensitivity, specificity)`, stored
/// row-major with the rows of each chain contiguous.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSamples {
    draws: Vec<f64>,
    chain_ids: Vec<usize>,
    n_chains: usize,
    n_draws: usize,
    n_surveys: usize,
    names: Vec<String>,
}

impl PosteriorSamples {
    /// Builds a sample set from per-chain draw matrices (`n_draws × n_params`,
    /// row-major). All chains must have the same length.
    pub fn from_chains(chains: Vec<Vec<f64>>, n_surveys: usize, names: Vec<String>) -> Result<Self> {
        let n_params = n_surveys + 2;
        if names.len() != n_params {
            return Err(Error::DimensionMismatch { expected: n_params, found: names.len() });
        }
        let n_chains = chains.len();
        let per_chain = chains.first().map_or(0, Vec::len);
        if n_chains == 0 || per_chain == 0 || !per_chain.is_multiple_of(n_params) {
            return Err(Error::invalid("draws", "need a nonempty whole number of rows per chain"));
        }
        if chains.iter().any(|c| c.len() != per_chain) {
            return Err(Error::invalid("draws", "chains differ in length"));
        }
        let n_draws = per_chain / n_params;
        let chain_ids = (0..n_chains).flat_map(|c| std::iter::repeat_n(c, n_draws)).collect();
        Ok(Self { draws: chains.concat(), chain_ids, n_chains, n_draws, n_surveys, names })
    }

    pub fn n_chains(&self) -> usize {
        self.n_chains
    }

    /// Draws per chain.
    pub fn n_draws(&self) -> usize {
        self.n_draws
    }

    pub fn n_rows(&self) -> usize {
        self.n_chains * self.n_draws
    }

    pub fn n_params(&self) -> usize {
        self.n_surveys + 2
    }

    pub fn n_surveys(&self) -> usize {
        self.n_surveys
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn chain_ids(&self) -> &[usize] {
        &self.chain_ids
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let d = self.n_params();
        &self.draws[r * d..(r + 1) * d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.draws.chunks_exact(self.n_params())
    }

    /// All draws of parameter `j`, chains concatenated.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    /// Draws of parameter `j` split by chain.
    pub fn chain_columns(&self, j: usize) -> Vec<Vec<f64>> {
        let d = self.n_params();
        self.draws.chunks_exact(self.n_draws * d).map(|chain| chain.chunks_exact(d).map(|r| r[j]).collect()).collect()
    }

    pub fn raw(&self) -> &[f64] {
        &self.draws
    }
}

/// Runs `config.n_chains` independent chains and returns the pooled
/// post-warmup draws with convergence diagnostics.
///
/// Each chain owns a ChaCha stream keyed by `(seed, chain index)`, so the
/// output does not depend on how chains are scheduled across threads. A
/// split-R̂ above [`RHAT_THRESHOLD`](super::RHAT_THRESHOLD) is reported through
/// [`Diagnostics::converged`], not as an error.
pub fn sample(model: &JointModel, config: &McmcConfig) -> Result<(PosteriorSamples, Diagnostics)> {
    config.validate()?;
    let runs = (0..config.n_chains)
        .into_par_iter()
        .map(|c| Chain::new(model, config, c)?.run(config))
        .collect::<Result<Vec<_>>>()?;
    let accept_rates = runs.iter().map(|r| r.accept_rate).collect();
    let samples = PosteriorSamples::from_chains(
        runs.into_iter().map(|r| r.draws).collect(),
        model.n_surveys(),
        model.parameter_names(),
    )?;
    let mut diag = match diagnostics(&samples) {
        Ok(d) => d,
        // Too few draws for split-R̂: report acceptance only.
        Err(Error::InsufficientDraws { .. }) => Diagnostics::unavailable(samples.n_params()),
        Err(e) => return Err(e),
    };
    diag.accept_rate = accept_rates;
    Ok((samples, diag))
}

struct ChainRun {
    draws: Vec<f64>,
    accept_rate: f64,
}

struct Chain<'a> {
    model: &'a JointModel,
    lower: Vec<f64>,
    rng: ChaCha8Rng,
    z: Vec<f64>,
    x: Vec<f64>,
    log_target: f64,
    log_step: Vec<f64>,
}

impl<'a> Chain<'a> {
    fn new(model: &'a JointModel, config: &McmcConfig, index: usize) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(index as u64);
        let mut lower: Vec<f64> = model.theta_priors().iter().map(|p| p.lower_bound()).collect();
        lower.extend([0.0, 0.0]);
        let d = model.n_params();
        let mut chain = Chain {
            model,
            lower,
            rng,
            z: vec![0.0; d],
            x: vec![0.0; d],
            log_target: f64::NEG_INFINITY,
            log_step: vec![config.initial_step.ln(); d],
        };
        for _ in 0..MAX_INIT_ATTEMPTS {
            let z = chain.draw_initial_point();
            let x: Vec<f64> = z.iter().zip(&chain.lower).map(|(&z, &lo)| to_constrained(z, lo)).collect();
            let lt = chain.target(&z, &x);
            if lt.is_finite() {
                chain.z = z;
                chain.x = x;
                chain.log_target = lt;
                return Ok(chain);
            }
        }
        Err(Error::InvalidInit { chain: index, attempts: MAX_INIT_ATTEMPTS })
    }

    /// Independent prior draw mapped to the unconstrained scale.
    fn draw_initial_point(&mut self) -> Vec<f64> {
        let k = self.model.n_surveys();
        let mut z = Vec::with_capacity(k + 2);
        for i in 0..k {
            let lo = self.lower[i];
            let theta = truncated_arcsine(lo, self.rng.random::<f64>());
            z.push(logit((theta - lo) / (1.0 - lo)));
        }
        for shape in [self.model.sens_prior(), self.model.spec_prior()] {
            let p = beta_draw(shape, &mut self.rng);
            z.push(logit(p));
        }
        z
    }

    /// Log posterior plus log-Jacobian of the logistic maps. Points that land
    /// on the edge of the parameter space in floating point are rejected.
    fn target(&self, z: &[f64], x: &[f64]) -> f64 {
        let k = self.model.n_surveys();
        if x[..k].iter().any(|&t| !(t > 0.0 && t < 1.0)) || x[k..].iter().any(|&p| !(p > 0.0 && p < 1.0)) {
            return f64::NEG_INFINITY;
        }
        let lp = self.model.log_density_slice(x);
        let jac: f64 = z.iter().map(|&z| log_logistic(z) + log_logistic(-z)).sum();
        let total = lp + jac;
        if total.is_nan() || total == f64::INFINITY {
            f64::NEG_INFINITY
        } else {
            total
        }
    }

    /// One Metropolis update of coordinate `j`; returns whether it was accepted.
    fn update(&mut self, j: usize) -> bool {
        let eps: f64 = self.rng.sample(StandardNormal);
        let old_z = self.z[j];
        let old_x = self.x[j];
        self.z[j] = old_z + self.log_step[j].exp() * eps;
        self.x[j] = to_constrained(self.z[j], self.lower[j]);
        let proposed = self.target(&self.z, &self.x);
        let log_u = self.rng.random::<f64>().ln();
        if proposed.is_finite() && log_u < proposed - self.log_target {
            self.log_target = proposed;
            true
        } else {
            self.z[j] = old_z;
            self.x[j] = old_x;
            false
        }
    }

    fn run(mut self, config: &McmcConfig) -> Result<ChainRun> {
        let d = self.z.len();
        for t in 1..=config.n_warmup {
            let gain = (t as f64).powf(-0.6);
            for j in 0..d {
                let accepted = if self.update(j) { 1.0 } else { 0.0 };
                self.log_step[j] = (self.log_step[j] + gain * (accepted - config.target_accept))
                    .clamp(LOG_STEP_RANGE.0, LOG_STEP_RANGE.1);
            }
        }
        let mut draws = Vec::with_capacity(config.n_draws * d);
        let mut accepted = 0usize;
        for _ in 0..config.n_draws {
            for j in 0..d {
                accepted += usize::from(self.update(j));
            }
            draws.extend_from_slice(&self.x);
        }
        Ok(ChainRun { draws, accept_rate: accepted as f64 / (config.n_draws * d) as f64 })
    }
}

fn beta_draw(shape: BetaShape, rng: &mut ChaCha8Rng) -> f64 {
    Beta::new(shape.alpha(), shape.beta()).map(|b| b.sample(rng)).unwrap_or_else(|_| shape.mean())
}

/// Inverse CDF of Beta(½, ½) restricted to `[lower, 1)`, evaluated at `u ∈ [0, 1)`.
fn truncated_arcsine(lower: f64, u: f64) -> f64 {
    use std::f64::consts::FRAC_PI_2;
    let start = lower.sqrt().asin() / FRAC_PI_2;
    let v = start + (1.0 - start) * u;
    (FRAC_PI_2 * v).sin().powi(2).max(lower)
}

#[inline]
fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

#[inline]
fn to_constrained(z: f64, lower: f64) -> f64 {
    lower + (1.0 - lower) * logistic(z)
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// `ln logistic(z)`, stable in both tails.
#[inline]
fn log_logistic(z: f64) -> f64 {
    if z > 0.0 {
        -(-z).exp().ln_1p()
    } else {
        z - z.exp().ln_1p()
    }
}
