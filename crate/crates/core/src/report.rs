//! Runs the requested analyses over a configuration and serializes the results.
//!
//! Machine formats (JSON, CSV) carry full precision and are byte-for-byte
//! deterministic for a fixed configuration and seed. The text format rounds
//! person counts to one decimal.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::AnalysisConfig;
use crate::frequentist::{self, acceptance_bound_extrema, IntervalEstimate};
use crate::mcmc::{detection_ratio, sample, summarize, Diagnostics};
use crate::model::TestAccuracy;
use crate::{Error, Result};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Mle,
    Rao,
    Cp,
    Bayes,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Mle, Method::Rao, Method::Cp, Method::Bayes];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Mle => "mle",
            Method::Rao => "rao",
            Method::Cp => "cp",
            Method::Bayes => "bayes",
        }
    }

    /// Parses a comma-separated list such as `mle,rao,cp,bayes` or `all`.
    pub fn parse_list(s: &str) -> Result<Vec<Method>> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            if part == "all" {
                out.extend(Method::ALL);
            } else {
                out.push(part.parse()?);
            }
        }
        out.sort();
        out.dedup();
        Ok(out)
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mle" => Ok(Method::Mle),
            "rao" => Ok(Method::Rao),
            "cp" => Ok(Method::Cp),
            "bayes" => Ok(Method::Bayes),
            other => Err(Error::invalid("methods", format!("unknown method '{other}' (expected mle, rao, cp, bayes)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Text,
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(ReportFormat::Text),
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::invalid("format", format!("unknown report format '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateStatus {
    Nonempty,
    Empty,
    NotIdentifiable,
}

impl EstimateStatus {
    fn as_str(self) -> &'static str {
        match self {
            EstimateStatus::Nonempty => "nonempty",
            EstimateStatus::Empty => "empty",
            EstimateStatus::NotIdentifiable => "not_identifiable",
        }
    }
}

/// A point and/or interval estimate in proportion and person-count units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub status: EstimateStatus,
    pub estimate: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub estimate_persons: Option<f64>,
    pub lower_persons: Option<f64>,
    pub upper_persons: Option<f64>,
}

impl EstimateRow {
    fn new(estimate: Option<f64>, interval: Option<(f64, f64)>, status: EstimateStatus, population: f64) -> Self {
        let persons = |v: Option<f64>| v.map(|p| p * population);
        let (lower, upper) = (interval.map(|i| i.0), interval.map(|i| i.1));
        Self {
            status,
            estimate,
            lower,
            upper,
            estimate_persons: persons(estimate),
            lower_persons: persons(lower),
            upper_persons: persons(upper),
        }
    }

    fn from_interval(estimate: Option<f64>, ci: IntervalEstimate, population: f64) -> Self {
        let status = if ci.is_empty() { EstimateStatus::Empty } else { EstimateStatus::Nonempty };
        Self::new(estimate, ci.bounds(), status, population)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MleRow {
    #[serde(flatten)]
    pub estimate: EstimateRow,
    /// `N(1 − spec)`, the count at or below which the MLE clips to zero.
    pub clip_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaoRow {
    #[serde(flatten)]
    pub interval: EstimateRow,
    /// Infimum over θ0 of the lower acceptance bound, in counts.
    pub inf_lower_bound: f64,
    /// Supremum over θ0 of the upper acceptance bound, in counts.
    pub sup_upper_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesRow {
    /// Posterior mean with the central 95% credible interval.
    #[serde(flatten)]
    pub interval: EstimateRow,
    pub sd: f64,
    pub detection_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyRow {
    pub name: String,
    pub collection_end: String,
    pub n_samples: u64,
    pub x_positive: u64,
    pub confirmed_cumulative: u64,
    pub confirmed_fraction: f64,
    pub mle: Option<MleRow>,
    pub rao: Option<RaoRow>,
    pub clopper_pearson: Option<EstimateRow>,
    pub bayes: Option<BayesRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsBlock {
    pub parameters: Vec<String>,
    /// `None` where R̂ is not finite.
    pub rhat: Vec<Option<f64>>,
    pub ess_bulk: Vec<Option<f64>>,
    pub accept_rate: Vec<f64>,
    pub converged: bool,
    pub n_chains: usize,
    pub n_warmup: usize,
    pub n_draws: usize,
    pub seed: u64,
    pub sensitivity_mean: f64,
    pub specificity_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub schema_version: u32,
    pub methods: Vec<Method>,
    pub population: u64,
    pub alpha: f64,
    pub fixed_accuracy: Option<TestAccuracy>,
    pub rows: Vec<SurveyRow>,
    pub diagnostics: Option<DiagnosticsBlock>,
    pub annotations: Vec<String>,
    pub config: AnalysisConfig,
}

impl ReportBundle {
    pub fn has(&self, method: Method) -> bool {
        self.methods.contains(&method)
    }

    /// False when a Bayesian run reported R̂ above the threshold.
    pub fn converged(&self) -> bool {
        self.diagnostics.as_ref().is_none_or(|d| d.converged)
    }
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// Runs the requested analyses. Non-identifiable accuracy and non-convergence
/// are recorded as annotations rather than errors.
pub fn run_analysis(config: &AnalysisConfig, methods: &[Method]) -> Result<ReportBundle> {
    config.validate()?;
    let mut methods = methods.to_vec();
    methods.sort();
    methods.dedup();
    let has = |m| methods.contains(&m);

    let pop = config.population as f64;
    let alpha = config.alpha();
    let observations = config.observations();
    let mut annotations = Vec::new();

    let fixed = if has(Method::Mle) || has(Method::Rao) { Some(config.fixed_accuracy()?) } else { None };
    if let Some(acc) = fixed.filter(|a| !a.is_identifiable()) {
        annotations.push(format!(
            "fixed accuracy (sensitivity {}, specificity {}) is not identifiable: sensitivity + specificity = 1",
            acc.sensitivity(),
            acc.specificity()
        ));
    }

    let mut rows: Vec<SurveyRow> = config
        .surveys
        .iter()
        .zip(&observations)
        .map(|(input, obs)| {
            let mle = fixed.filter(|_| has(Method::Mle)).map(|acc| {
                let clip_threshold = frequentist::mle_clip_threshold(obs, &acc);
                let estimate = match frequentist::mle(obs, &acc) {
                    Ok(t) => EstimateRow::new(Some(t.value()), None, EstimateStatus::Nonempty, pop),
                    Err(_) => EstimateRow::new(None, None, EstimateStatus::NotIdentifiable, pop),
                };
                MleRow { estimate, clip_threshold }
            });
            let rao = fixed.filter(|_| has(Method::Rao)).map(|acc| {
                let (inf_lower_bound, sup_upper_bound) = acceptance_bound_extrema(obs.n_samples(), &acc, alpha);
                RaoRow {
                    interval: EstimateRow::from_interval(None, frequentist::rao_confidence_set(obs, &acc, alpha), pop),
                    inf_lower_bound,
                    sup_upper_bound,
                }
            });
            let clopper_pearson = has(Method::Cp).then(|| {
                EstimateRow::from_interval(Some(obs.raw_proportion()), frequentist::clopper_pearson(obs, alpha), pop)
            });
            SurveyRow {
                name: input.name.clone(),
                collection_end: input.collection_end.clone(),
                n_samples: input.n_samples,
                x_positive: input.x_positive,
                confirmed_cumulative: input.confirmed_cumulative,
                confirmed_fraction: obs.confirmed_fraction(),
                mle,
                rao,
                clopper_pearson,
                bayes: None,
            }
        })
        .collect();

    let mut diagnostics = None;
    if has(Method::Bayes) {
        let model = config.joint_model()?;
        let (samples, diag) = sample(&model, &config.mcmc)?;
        let summary = summarize(&samples, config.population);
        let k = model.n_surveys();
        for (i, row) in rows.iter_mut().enumerate() {
            let p = &summary.parameters[i];
            let scaled = &summary.scaled[i];
            debug_assert!(p.q025 >= row.confirmed_fraction);
            row.bayes = Some(BayesRow {
                interval: EstimateRow::new(Some(p.mean), Some((p.q025, p.q975)), EstimateStatus::Nonempty, pop),
                sd: p.sd,
                detection_ratio: (row.confirmed_cumulative > 0)
                    .then(|| detection_ratio(scaled, row.confirmed_cumulative)),
            });
        }
        if !diag.converged() {
            annotations.push(format!(
                "MCMC did not converge: max split-R-hat {:.4} exceeds {}",
                diag.max_rhat(),
                crate::mcmc::RHAT_THRESHOLD
            ));
        }
        diagnostics = Some(diagnostics_block(
            &model.parameter_names(),
            &diag,
            config,
            summary.parameters[k].mean,
            summary.parameters[k + 1].mean,
        ));
    }

    Ok(ReportBundle {
        schema_version: REPORT_SCHEMA_VERSION,
        methods,
        population: config.population,
        alpha: alpha.value(),
        fixed_accuracy: fixed,
        rows,
        diagnostics,
        annotations,
        config: config.clone(),
    })
}

fn diagnostics_block(
    names: &[String],
    diag: &Diagnostics,
    config: &AnalysisConfig,
    sensitivity_mean: f64,
    specificity_mean: f64,
) -> DiagnosticsBlock {
    DiagnosticsBlock {
        parameters: names.to_vec(),
        rhat: diag.rhat.iter().copied().map(finite).collect(),
        ess_bulk: diag.ess_bulk.iter().copied().map(finite).collect(),
        accept_rate: diag.accept_rate.clone(),
        converged: diag.converged(),
        n_chains: config.mcmc.n_chains,
        n_warmup: config.mcmc.n_warmup,
        n_draws: config.mcmc.n_draws,
        seed: config.mcmc.seed,
        sensitivity_mean,
        specificity_mean,
    }
}

#[derive(Debug, Serialize)]
struct CsvRow<'a> {
    survey: &'a str,
    collection_end: &'a str,
    method: &'static str,
    status: &'static str,
    estimate: Option<f64>,
    lower: Option<f64>,
    upper: Option<f64>,
    estimate_persons: Option<f64>,
    lower_persons: Option<f64>,
    upper_persons: Option<f64>,
}

impl SurveyRow {
    /// Estimates present in this row, in method order.
    pub fn estimates(&self) -> Vec<(Method, &EstimateRow)> {
        let mut out = Vec::new();
        if let Some(r) = &self.mle {
            out.push((Method::Mle, &r.estimate));
        }
        if let Some(r) = &self.rao {
            out.push((Method::Rao, &r.interval));
        }
        if let Some(r) = &self.clopper_pearson {
            out.push((Method::Cp, r));
        }
        if let Some(r) = &self.bayes {
            out.push((Method::Bayes, &r.interval));
        }
        out
    }
}

/// Serializes a report to a string.
pub fn render_report(bundle: &ReportBundle, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(bundle)
                .map_err(|e| Error::Parse { what: "report".into(), reason: e.to_string() })?;
            s.push('\n');
            Ok(s)
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for row in &bundle.rows {
                for (method, est) in row.estimates() {
                    w.serialize(CsvRow {
                        survey: &row.name,
                        collection_end: &row.collection_end,
                        method: method.as_str(),
                        status: est.status.as_str(),
                        estimate: est.estimate,
                        lower: est.lower,
                        upper: est.upper,
                        estimate_persons: est.estimate_persons,
                        lower_persons: est.lower_persons,
                        upper_persons: est.upper_persons,
                    })?;
                }
            }
            if bundle.rows.iter().all(|r| r.estimates().is_empty()) {
                w.write_record([
                    "survey",
                    "collection_end",
                    "method",
                    "status",
                    "estimate",
                    "lower",
                    "upper",
                    "estimate_persons",
                    "lower_persons",
                    "upper_persons",
                ])?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
            Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
        }
        ReportFormat::Text => Ok(render_text(bundle)),
    }
}

/// Writes a report to `path`.
pub fn emit_report(bundle: &ReportBundle, format: ReportFormat, path: impl AsRef<Path>) -> Result<()> {
    let text = render_report(bundle, format)?;
    let mut f = std::fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

/// Groups digits in thousands and rounds to one decimal: `127304.1`.
fn persons(v: f64) -> String {
    let s = format!("{v:.1}");
    let (int, frac) = s.split_once('.').unwrap_or((&s, "0"));
    let (sign, digits) = int.strip_prefix('-').map_or(("", int), |d| ("-", d));
    let mut grouped = String::new();
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i) % 3 == 0 {
            grouped.push(',');
        }
        grouped.push(c);
    }
    format!("{sign}{grouped}.{frac}")
}

fn interval_text(est: &EstimateRow) -> String {
    match est.status {
        EstimateStatus::Empty => "empty".into(),
        EstimateStatus::NotIdentifiable => "not identifiable".into(),
        EstimateStatus::Nonempty => {
            let mut s = String::new();
            if let (Some(p), Some(pp)) = (est.estimate, est.estimate_persons) {
                let _ = write!(s, "{p:.6} ({})", persons(pp));
            }
            if let (Some(l), Some(u), Some(lp), Some(up)) = (est.lower, est.upper, est.lower_persons, est.upper_persons)
            {
                if !s.is_empty() {
                    s.push_str("  ");
                }
                let _ = write!(s, "[{l:.6}, {u:.6}] ([{}, {}])", persons(lp), persons(up));
            }
            s
        }
    }
}

fn render_text(b: &ReportBundle) -> String {
    let mut out = String::new();
    let level = 100.0 * (1.0 - b.alpha);
    let _ = writeln!(
        out,
        "Seroprevalence report (population {}, alpha {})",
        persons(b.population as f64).trim_end_matches(".0"),
        b.alpha
    );
    let methods: Vec<&str> = b.methods.iter().map(|m| m.as_str()).collect();
    let _ = writeln!(out, "methods: {}", if methods.is_empty() { "none".to_string() } else { methods.join(", ") });
    if let Some(acc) = b.fixed_accuracy {
        let _ =
            writeln!(out, "fixed accuracy: sensitivity {:.6}, specificity {:.6}", acc.sensitivity(), acc.specificity());
    }
    for row in &b.rows {
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "{} (ending {}): {} of {} test-positive; {} confirmed",
            row.name, row.collection_end, row.x_positive, row.n_samples, row.confirmed_cumulative
        );
        if let Some(m) = &row.mle {
            let _ = writeln!(
                out,
                "  {:<26}{}  [clip threshold N(1-spec) = {:.3}]",
                "MLE",
                interval_text(&m.estimate),
                m.clip_threshold
            );
        }
        if let Some(r) = &row.rao {
            let _ = writeln!(
                out,
                "  {:<26}{}  [inf l = {:.3}, sup u = {:.3}]",
                format!("Rao score {level:.0}% CI"),
                interval_text(&r.interval),
                r.inf_lower_bound,
                r.sup_upper_bound
            );
        }
        if let Some(c) = &row.clopper_pearson {
            let _ = writeln!(out, "  {:<26}{}", format!("Clopper-Pearson {level:.0}% CI"), interval_text(c));
        }
        if let Some(bayes) = &row.bayes {
            let _ = writeln!(out, "  {:<26}{}", "Posterior mean, 95% CrI", interval_text(&bayes.interval));
            if let Some(r) = bayes.detection_ratio {
                let _ = writeln!(out, "  {:<26}{r:.2}", "Detection ratio");
            }
        }
    }
    if let Some(d) = &b.diagnostics {
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "MCMC: {} chains x {} draws after {} warmup (seed {}); converged: {}",
            d.n_chains, d.n_draws, d.n_warmup, d.seed, d.converged
        );
        for (i, name) in d.parameters.iter().enumerate() {
            let fmt = |v: Option<f64>, digits: usize| v.map_or("n/a".to_string(), |v| format!("{v:.digits$}"));
            let _ = writeln!(out, "  {name:<12} R-hat {}  ESS {}", fmt(d.rhat[i], 4), fmt(d.ess_bulk[i], 0));
        }
        let _ = writeln!(
            out,
            "  posterior mean sensitivity {:.4}, specificity {:.5}",
            d.sensitivity_mean, d.specificity_mean
        );
    }
    for note in &b.annotations {
        let _ = writeln!(out, "note: {note}");
    }
    out
}
