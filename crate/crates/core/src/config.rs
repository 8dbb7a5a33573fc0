//! Analysis configuration file (JSON, `schema_version` 1).
//!
//! The file holds raw counts only: survey sizes and positives, cumulative
//! confirmed cases, the population size, and the clinical evaluation table.
//! Confirmed-case fractions and the default fixed accuracy are derived here.

use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::bayes::JointModel;
use crate::mcmc::McmcConfig;
use crate::model::{ClinicalTable, SurveyObservation, TestAccuracy};
use crate::{Alpha, Error, Result};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

/// The 2020 South Korea serosurvey configuration shipped with the crate.
pub const KOREA_2020_JSON: &str = include_str!("../../../data/korea2020.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurveyInput {
    pub name: String,
    pub n_samples: u64,
    pub x_positive: u64,
    pub confirmed_cumulative: u64,
    /// Last day of sample collection, `YYYY-MM-DD`.
    pub collection_end: String,
}

/// Clinical evaluation counts: test result × true state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClinicalInput {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccuracyInput {
    pub sensitivity: f64,
    pub specificity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimelinePoint {
    pub date: String,
    pub confirmed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub schema_version: u32,
    pub population: u64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub clinical: ClinicalInput,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_accuracy: Option<AccuracyInput>,
    pub surveys: Vec<SurveyInput>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub timeline: Vec<TimelinePoint>,
    #[serde(default)]
    pub mcmc: McmcConfig,
}

fn default_alpha() -> f64 {
    0.05
}

fn parse_date(field: String, value: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(value, "%Y-%m-%d")
        .map_err(|e| Error::invalid(field, format!("'{value}' is not a YYYY-MM-DD date ({e})")))
}

/// Reads and validates a configuration file.
pub fn ingest(path: impl AsRef<Path>) -> Result<AnalysisConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    AnalysisConfig::from_json_str(&text).map_err(|e| match e {
        Error::Parse { reason, .. } => Error::Parse { what: path.display().to_string(), reason },
        other => other,
    })
}

impl AnalysisConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let config: AnalysisConfig = serde_json::from_str(text)
            .map_err(|e| Error::Parse { what: "configuration".into(), reason: e.to_string() })?;
        config.validate()?;
        Ok(config)
    }

    /// The bundled 2020 South Korea configuration.
    pub fn korea2020() -> Self {
        Self::from_json_str(KOREA_2020_JSON).expect("bundled configuration is valid")
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(Error::invalid(
                "schema_version",
                format!("unsupported version {} (expected {CONFIG_SCHEMA_VERSION})", self.schema_version),
            ));
        }
        if self.population == 0 {
            return Err(Error::invalid("population", "must be positive"));
        }
        Alpha::new(self.alpha)?;
        if self.surveys.is_empty() {
            return Err(Error::invalid("surveys", "at least one survey is required"));
        }
        for (i, s) in self.surveys.iter().enumerate() {
            let field = |name: &str| format!("surveys[{i}].{name}");
            if s.n_samples == 0 {
                return Err(Error::invalid(field("n_samples"), "must be at least 1"));
            }
            if s.x_positive > s.n_samples {
                return Err(Error::invalid(
                    field("x_positive"),
                    format!("{} exceeds n_samples = {}", s.x_positive, s.n_samples),
                ));
            }
            if s.confirmed_cumulative >= self.population {
                return Err(Error::invalid(
                    field("confirmed_cumulative"),
                    format!("{} is not below population {}", s.confirmed_cumulative, self.population),
                ));
            }
            parse_date(field("collection_end"), &s.collection_end)?;
        }
        for (i, p) in self.timeline.iter().enumerate() {
            parse_date(format!("timeline[{i}].date"), &p.date)?;
        }
        if let Some(acc) = self.fixed_accuracy {
            TestAccuracy::new(acc.sensitivity, acc.specificity).map_err(|e| match e {
                Error::InvalidArgument { field, reason } => {
                    Error::InvalidArgument { field: format!("fixed_accuracy.{field}"), reason }
                }
                other => other,
            })?;
        } else {
            self.clinical_table().point_accuracy().map_err(|_| {
                Error::invalid("clinical", "cannot derive fixed_accuracy: tp + fn and tn + fp must both be positive")
            })?;
        }
        self.mcmc.validate()
    }

    pub fn alpha(&self) -> Alpha {
        Alpha::new(self.alpha).expect("validated")
    }

    pub fn clinical_table(&self) -> ClinicalTable {
        let c = self.clinical;
        ClinicalTable::new(c.tp, c.fp, c.fn_, c.tn)
    }

    /// Fixed accuracy for the frequentist analyses: the explicit value if given,
    /// otherwise the clinical table's column proportions.
    pub fn fixed_accuracy(&self) -> Result<TestAccuracy> {
        match self.fixed_accuracy {
            Some(a) => TestAccuracy::new(a.sensitivity, a.specificity),
            None => self.clinical_table().point_accuracy(),
        }
    }

    pub fn confirmed_fraction(&self, survey: &SurveyInput) -> f64 {
        survey.confirmed_cumulative as f64 / self.population as f64
    }

    pub fn observations(&self) -> Vec<SurveyObservation> {
        self.surveys
            .iter()
            .map(|s| {
                SurveyObservation::new(s.n_samples, s.x_positive, self.confirmed_fraction(s), &s.name)
                    .expect("validated")
            })
            .collect()
    }

    pub fn joint_model(&self) -> Result<JointModel> {
        JointModel::from_clinical(self.observations(), &self.clinical_table())
    }

    /// Timeline for plotting: the configured series, or the surveys' own
    /// confirmed counts when none is given.
    pub fn timeline_or_surveys(&self) -> Vec<TimelinePoint> {
        if !self.timeline.is_empty() {
            return self.timeline.clone();
        }
        self.surveys
            .iter()
            .map(|s| TimelinePoint { date: s.collection_end.clone(), confirmed: s.confirmed_cumulative })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn korea_value() -> serde_json::Value {
        serde_json::from_str(KOREA_2020_JSON).unwrap()
    }

    fn field_of(err: Error) -> String {
        match err {
            Error::InvalidArgument { field, .. } => field,
            other => panic!("expected a validation error, got {other:?}"),
        }
    }

    #[test]
    fn bundled_fixture_is_valid() {
        let c = AnalysisConfig::korea2020();
        let obs = c.observations();
        assert_eq!(obs.len(), 3);
        assert!((obs[2].confirmed_fraction() - 26_635.0 / 51_829_023.0).abs() < 1e-18);
        assert!((obs[2].confirmed_fraction() - 5.139e-4).abs() < 1e-7);
        let acc = c.fixed_accuracy().unwrap();
        assert_eq!(acc.sensitivity(), 42.0 / 45.0);
        assert_eq!(acc.specificity(), 34.0 / 35.0);
    }

    #[test]
    fn x_above_n_names_the_field() {
        let mut v = korea_value();
        v["surveys"][1]["x_positive"] = 2000.into();
        let err = AnalysisConfig::from_json_str(&v.to_string()).unwrap_err();
        assert_eq!(field_of(err), "surveys[1].x_positive");
    }

    #[test]
    fn other_validation_errors() {
        let cases: [(&str, serde_json::Value, &str); 5] = [
            ("/surveys/0/confirmed_cumulative", 60_000_000.into(), "surveys[0].confirmed_cumulative"),
            ("/surveys/2/collection_end", "31 Oct 2020".into(), "surveys[2].collection_end"),
            ("/alpha", 1.0.into(), "alpha"),
            ("/population", 0.into(), "population"),
            ("/schema_version", 2.into(), "schema_version"),
        ];
        for (pointer, value, field) in cases {
            let mut v = korea_value();
            *v.pointer_mut(pointer).unwrap() = value;
            let err = AnalysisConfig::from_json_str(&v.to_string()).unwrap_err();
            assert_eq!(field_of(err), field);
        }
    }

    #[test]
    fn explicit_fixed_accuracy_is_validated() {
        let mut v = korea_value();
        v["fixed_accuracy"] = serde_json::json!({ "sensitivity": 0.9, "specificity": 0.0 });
        let err = AnalysisConfig::from_json_str(&v.to_string()).unwrap_err();
        assert_eq!(field_of(err), "fixed_accuracy.specificity");

        v["fixed_accuracy"] = serde_json::json!({ "sensitivity": 0.9, "specificity": 0.99 });
        let c = AnalysisConfig::from_json_str(&v.to_string()).unwrap();
        assert_eq!(c.fixed_accuracy().unwrap().specificity(), 0.99);
    }

    #[test]
    fn malformed_json_is_a_parse_error() {
        assert!(matches!(AnalysisConfig::from_json_str("{ not json"), Err(Error::Parse { .. })));
        let mut v = korea_value();
        v["unexpected"] = 1.into();
        assert!(matches!(AnalysisConfig::from_json_str(&v.to_string()), Err(Error::Parse { .. })));
    }

    #[test]
    fn defaults_apply() {
        let mut v = korea_value();
        let obj = v.as_object_mut().unwrap();
        obj.remove("alpha");
        obj.remove("mcmc");
        obj.remove("timeline");
        let c = AnalysisConfig::from_json_str(&v.to_string()).unwrap();
        assert_eq!(c.alpha, 0.05);
        assert_eq!(c.mcmc, McmcConfig::default());
        assert_eq!(c.timeline_or_surveys().len(), 3);
    }

    #[test]
    fn ingest_reads_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, KOREA_2020_JSON).unwrap();
        assert_eq!(ingest(&path).unwrap(), AnalysisConfig::korea2020());
        assert!(matches!(ingest(dir.path().join("missing.json")), Err(Error::Io(_))));
    }
}
