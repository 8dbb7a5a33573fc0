//! Split-R̂ and bulk effective sample size.

use serde::{Deserialize, Serialize};

use super::PosteriorSamples;
use crate::{Error, Result};

/// Chains are considered converged when every split-R̂ is below this value.
pub const RHAT_THRESHOLD: f64 = 1.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Split-R̂ per parameter. `NaN` when it could not be computed.
    pub rhat: Vec<f64>,
    pub ess_bulk: Vec<f64>,
    /// Post-warmup acceptance rate per chain, over all coordinate updates.
    pub accept_rate: Vec<f64>,
}

impl Diagnostics {
    pub(crate) fn unavailable(n_params: usize) -> Self {
        Self { rhat: vec![f64::NAN; n_params], ess_bulk: vec![f64::NAN; n_params], accept_rate: Vec::new() }
    }

    pub fn max_rhat(&self) -> f64 {
        self.rhat.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// True when every R̂ is finite and below [`RHAT_THRESHOLD`].
    pub fn converged(&self) -> bool {
        !self.rhat.is_empty() && self.rhat.iter().all(|&r| r < RHAT_THRESHOLD)
    }
}

/// Split-R̂ and bulk-ESS for every parameter. Needs at least 4 draws per chain.
pub fn diagnostics(samples: &PosteriorSamples) -> Result<Diagnostics> {
    if samples.n_draws() < 4 {
        return Err(Error::InsufficientDraws { required: 4, found: samples.n_draws() });
    }
    let mut rhat = Vec::with_capacity(samples.n_params());
    let mut ess = Vec::with_capacity(samples.n_params());
    for j in 0..samples.n_params() {
        let chains = samples.chain_columns(j);
        let refs: Vec<&[f64]> = chains.iter().map(Vec::as_slice).collect();
        rhat.push(split_rhat(&refs));
        ess.push(ess_bulk(&refs));
    }
    Ok(Diagnostics { rhat, ess_bulk: ess, accept_rate: Vec::new() })
}

fn split_halves<'a>(chains: &[&'a [f64]]) -> Vec<&'a [f64]> {
    chains
        .iter()
        .flat_map(|c| {
            let half = c.len() / 2;
            // An odd middle draw is dropped so both halves have equal length.
            [&c[..half], &c[c.len() - half..]]
        })
        .collect()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Within-chain and between-chain variances `(W, B/n)` over equal-length chains.
fn variance_components(chains: &[&[f64]]) -> (f64, f64, Vec<f64>) {
    let m = chains.len() as f64;
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let grand = means.iter().sum::<f64>() / m;
    let b_over_n =
        if chains.len() > 1 { means.iter().map(|mu| (mu - grand).powi(2)).sum::<f64>() / (m - 1.0) } else { 0.0 };
    let w = chains
        .iter()
        .zip(&means)
        .map(|(c, mu)| c.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (c.len() as f64 - 1.0))
        .sum::<f64>()
        / m;
    (w, b_over_n, means)
}

/// Split-R̂ over the half-chains: `sqrt(((n − 1)/n · W + B/n) / W)`.
///
/// Returns 1 when every draw is identical and `+inf` when chains are each
/// constant but disagree.
pub fn split_rhat(chains: &[&[f64]]) -> f64 {
    let halves = split_halves(chains);
    if halves.len() < 2 || halves[0].len() < 2 {
        return f64::NAN;
    }
    let n = halves[0].len() as f64;
    let (w, b_over_n, _) = variance_components(&halves);
    if w == 0.0 {
        return if b_over_n == 0.0 { 1.0 } else { f64::INFINITY };
    }
    (((n - 1.0) / n * w + b_over_n) / w).sqrt()
}

/// Bulk effective sample size of the pooled split chains.
///
/// Autocorrelations are combined across half-chains and summed in adjacent
/// pairs, stopping at the first negative pair.
pub fn ess_bulk(chains: &[&[f64]]) -> f64 {
    let halves = split_halves(chains);
    if halves.is_empty() || halves[0].len() < 2 {
        return f64::NAN;
    }
    let n = halves[0].len();
    let total = (halves.len() * n) as f64;
    let nf = n as f64;
    let (w, b_over_n, means) = variance_components(&halves);
    let var_plus = (nf - 1.0) / nf * w + b_over_n;
    if var_plus == 0.0 {
        return total;
    }
    let mean_autocov = |lag: usize| -> f64 {
        halves
            .iter()
            .zip(&means)
            .map(|(c, mu)| (0..n - lag).map(|i| (c[i] - mu) * (c[i + lag] - mu)).sum::<f64>() / nf)
            .sum::<f64>()
            / halves.len() as f64
    };
    let rho = |lag: usize| 1.0 - (w - mean_autocov(lag)) / var_plus;

    let mut sum_pairs = 0.0;
    let mut lag = 0;
    while lag + 1 < n {
        let pair = rho(lag) + rho(lag + 1);
        if pair < 0.0 {
            break;
        }
        sum_pairs += pair;
        lag += 2;
    }
    let tau = (-1.0 + 2.0 * sum_pairs).max(1.0 / total.log10().max(1.0));
    total / tau
}
