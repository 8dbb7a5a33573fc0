use serde::{Deserialize, Serialize};

use super::PosteriorSamples;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub q025: f64,
    pub q975: f64,
}

impl ParameterSummary {
    pub fn from_draws(name: impl Into<String>, draws: &[f64]) -> Self {
        let n = draws.len() as f64;
        let mean = draws.iter().sum::<f64>() / n;
        let sd = if draws.len() > 1 {
            (draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let mut sorted = draws.to_vec();
        sorted.sort_by(f64::total_cmp);
        Self { name: name.into(), mean, sd, q025: quantile(&sorted, 0.025), q975: quantile(&sorted, 0.975) }
    }
}

/// Pooled posterior summaries, with prevalences also expressed as head counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub population: u64,
    /// One entry per parameter, in draw-column order.
    pub parameters: Vec<ParameterSummary>,
    /// Prevalence draws multiplied by `population`, one entry per survey.
    pub scaled: Vec<ParameterSummary>,
}

/// Empirical quantile of sorted data with linear interpolation between order
/// statistics (`h = (n − 1)·p`).
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize(samples: &PosteriorSamples, population: u64) -> PosteriorSummary {
    let names = samples.names();
    let parameters =
        (0..samples.n_params()).map(|j| ParameterSummary::from_draws(&names[j], &samples.column(j))).collect();
    let pop = population as f64;
    let scaled = (0..samples.n_surveys())
        .map(|j| {
            let draws: Vec<f64> = samples.column(j).into_iter().map(|t| t * pop).collect();
            ParameterSummary::from_draws(&names[j], &draws)
        })
        .collect();
    PosteriorSummary { population, parameters, scaled }
}

/// Ratio of the posterior-mean infected count to the confirmed count.
pub fn detection_ratio(scaled: &ParameterSummary, confirmed: u64) -> f64 {
    scaled.mean / confirmed as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_param(draws: Vec<f64>) -> PosteriorSamples {
        let rows = draws.into_iter().flat_map(|v| [v, 0.9, 0.9]).collect();
        PosteriorSamples::from_chains(
            vec![rows],
            1,
            vec!["theta[1]".into(), "sensitivity".into(), "specificity".into()],
        )
        .unwrap()
    }

    #[test]
    fn constant_draws() {
        let s = summarize(&one_param(vec![0.5; 40]), 100);
        let t = &s.scaled[0];
        assert_eq!((t.mean, t.q025, t.q975), (50.0, 50.0, 50.0));
        assert_eq!(s.parameters[0].sd, 0.0);
    }

    #[test]
    fn symmetric_grid() {
        let draws: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let s = summarize(&one_param(draws), 1);
        assert!((s.parameters[0].mean - 0.5).abs() < 1e-12);
        assert!((s.parameters[0].q025 - 0.025).abs() < 1e-12);
        assert!((s.parameters[0].q975 - 0.975).abs() < 1e-12);
    }

    #[test]
    fn quantile_interpolates() {
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0], 0.5), 2.5);
        assert_eq!(quantile(&[7.0], 0.975), 7.0);
    }

    #[test]
    fn detection_ratio_examples() {
        let s = ParameterSummary { name: "t".into(), mean: 119_979.7, sd: 0.0, q025: 0.0, q975: 0.0 };
        assert!((detection_ratio(&s, 26_635) - 4.5046).abs() < 1e-3);
        let s = ParameterSummary { mean: 12_198.0, ..s };
        assert_eq!(detection_ratio(&s, 12_198), 1.0);
    }
}
