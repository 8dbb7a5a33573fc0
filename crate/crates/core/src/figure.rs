//! Plot of per-survey estimates against the cumulative confirmed-case line.
//!
//! Two interval series are drawn in person counts: the Bayesian posterior
//! (mean with 95% credible interval) and the accuracy-assumption interval
//! (Clopper–Pearson with point X/N). The confirmed-case timeline is drawn as a
//! line. Output is either a standalone SVG or the underlying plot table as CSV.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::Serialize;

use crate::config::TimelinePoint;
use crate::report::{EstimateRow, ReportBundle};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureFormat {
    Svg,
    Csv,
}

impl FromStr for FigureFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "svg" => Ok(FigureFormat::Svg),
            "csv" => Ok(FigureFormat::Csv),
            other => Err(Error::invalid("format", format!("unknown figure format '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Series {
    Bayesian,
    AccuracyAssumption,
    Confirmed,
}

impl Series {
    fn label(self) -> &'static str {
        match self {
            Series::Bayesian => "Bayesian method (95% credible interval)",
            Series::AccuracyAssumption => "Accuracy assumption (Clopper-Pearson interval)",
            Series::Confirmed => "Cumulative confirmed cases",
        }
    }

    fn color(self) -> &'static str {
        match self {
            Series::Bayesian => "#c0392b",
            Series::AccuracyAssumption => "#2471a3",
            Series::Confirmed => "#333333",
        }
    }
}

/// One row of the plot table, in person counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotPoint {
    pub series: Series,
    pub survey: Option<String>,
    pub date: String,
    pub value: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

/// Builds the plot table: interval rows per (series, survey), then timeline rows.
pub fn plot_table(bundle: &ReportBundle, timeline: &[TimelinePoint]) -> Result<Vec<PlotPoint>> {
    let has_intervals = bundle.rows.iter().any(|r| r.bayes.is_some() || r.clopper_pearson.is_some());
    if !has_intervals {
        return Err(Error::NothingToPlot(
            "the report has no Bayesian or Clopper-Pearson intervals; run with --methods cp and/or bayes".into(),
        ));
    }
    let interval = |series, name: &str, date: &str, est: &EstimateRow| {
        Some(PlotPoint {
            series,
            survey: Some(name.to_string()),
            date: date.to_string(),
            value: est.estimate_persons?,
            lower: est.lower_persons,
            upper: est.upper_persons,
        })
    };
    let mut points = Vec::new();
    for row in &bundle.rows {
        if let Some(p) =
            row.bayes.as_ref().and_then(|b| interval(Series::Bayesian, &row.name, &row.collection_end, &b.interval))
        {
            points.push(p);
        }
    }
    for row in &bundle.rows {
        if let Some(p) = row
            .clopper_pearson
            .as_ref()
            .and_then(|c| interval(Series::AccuracyAssumption, &row.name, &row.collection_end, c))
        {
            points.push(p);
        }
    }
    for t in timeline {
        points.push(PlotPoint {
            series: Series::Confirmed,
            survey: None,
            date: t.date.clone(),
            value: t.confirmed as f64,
            lower: None,
            upper: None,
        });
    }
    Ok(points)
}

/// Renders the figure as a string.
pub fn render_figure(bundle: &ReportBundle, timeline: &[TimelinePoint], format: FigureFormat) -> Result<String> {
    let points = plot_table(bundle, timeline)?;
    match format {
        FigureFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for p in &points {
                w.serialize(p)?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
            Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
        }
        FigureFormat::Svg => render_svg(&points),
    }
}

/// Writes the figure to `path`.
pub fn emit_figure(
    bundle: &ReportBundle,
    timeline: &[TimelinePoint],
    format: FigureFormat,
    path: impl AsRef<Path>,
) -> Result<()> {
    let text = render_figure(bundle, timeline, format)?;
    std::fs::write(path, text)?;
    Ok(())
}

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 120.0;

fn day(date: &str) -> Result<i64> {
    let d = NaiveDate::parse_from_str(date, "%Y-%m-%d")
        .map_err(|e| Error::invalid("date", format!("'{date}' is not a YYYY-MM-DD date ({e})")))?;
    Ok(d.num_days_from_ce() as i64)
}

/// A "nice" tick step (1, 2 or 5 × 10^k) giving roughly `target` ticks.
fn tick_step(max: f64, target: f64) -> f64 {
    let raw = max / target;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0].into_iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag)
}

fn grouped(v: f64) -> String {
    let digits = format!("{:.0}", v);
    let mut out = String::new();
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(c);
    }
    out
}

fn render_svg(points: &[PlotPoint]) -> Result<String> {
    let days: Vec<i64> = points.iter().map(|p| day(&p.date)).collect::<Result<_>>()?;
    let (d_min, d_max) = (*days.iter().min().unwrap(), *days.iter().max().unwrap());
    let pad = ((d_max - d_min) as f64 * 0.05).max(7.0);
    let (x_lo, x_hi) = (d_min as f64 - pad, d_max as f64 + pad);

    let y_top = points.iter().map(|p| p.upper.unwrap_or(p.value).max(p.value)).fold(0.0, f64::max);
    let step = tick_step(y_top.max(1.0), 6.0);
    let y_hi = (y_top / step).ceil().max(1.0) * step;

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |d: f64| LEFT + (d - x_lo) / (x_hi - x_lo) * plot_w;
    let sy = |v: f64| TOP + plot_h - v / y_hi * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);

    let mut v = 0.0;
    while v <= y_hi + step * 1e-9 {
        let y = sy(v);
        let _ =
            writeln!(s, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e5e5e5"/>"##, WIDTH - RIGHT);
        let _ =
            writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 6.0, y + 4.0, grouped(v));
        v += step;
    }
    let _ = writeln!(
        s,
        r#"<text transform="translate(18,{:.2}) rotate(-90)" text-anchor="middle">Number of infected persons</text>"#,
        TOP + plot_h / 2.0
    );
    let _ = writeln!(
        s,
        r##"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#333333"/>"##
    );

    let mut labelled = Vec::new();
    for (p, &d) in points.iter().zip(&days) {
        if p.series != Series::Confirmed && !labelled.contains(&d) {
            labelled.push(d);
            let x = sx(d as f64);
            let _ = writeln!(
                s,
                r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                TOP + plot_h + 18.0,
                p.date
            );
        }
    }

    let confirmed: Vec<(f64, f64)> = points
        .iter()
        .zip(&days)
        .filter(|(p, _)| p.series == Series::Confirmed)
        .map(|(p, &d)| (sx(d as f64), sy(p.value)))
        .collect();
    if !confirmed.is_empty() {
        let path: Vec<String> = confirmed.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let color = Series::Confirmed.color();
        let _ =
            writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, path.join(" "));
    }

    let dodge = 6.0;
    for (p, &d) in points.iter().zip(&days) {
        let offset = match p.series {
            Series::Bayesian => -dodge,
            Series::AccuracyAssumption => dodge,
            Series::Confirmed => continue,
        };
        let x = sx(d as f64) + offset;
        let color = p.series.color();
        if let (Some(lo), Some(hi)) = (p.lower, p.upper) {
            let (y_lo, y_hi) = (sy(lo), sy(hi));
            let _ = writeln!(
                s,
                r#"<line x1="{x:.2}" y1="{y_lo:.2}" x2="{x:.2}" y2="{y_hi:.2}" stroke="{color}" stroke-width="1.5"/>"#
            );
            for y in [y_lo, y_hi] {
                let _ = writeln!(
                    s,
                    r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="1.5"/>"#,
                    x - 4.0,
                    x + 4.0
                );
            }
        }
        let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{:.2}" r="3.5" fill="{color}"/>"#, sy(p.value));
    }

    let mut present: Vec<Series> = Vec::new();
    for p in points {
        if !present.contains(&p.series) {
            present.push(p.series);
        }
    }
    for (i, series) in present.iter().enumerate() {
        let y = TOP + plot_h + 48.0 + 20.0 * i as f64;
        let color = series.color();
        if *series == Series::Confirmed {
            let _ = writeln!(
                s,
                r#"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="1.5"/>"#,
                LEFT + 24.0
            );
        } else {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{y:.2}" r="3.5" fill="{color}"/>"#, LEFT + 12.0);
        }
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, LEFT + 32.0, y + 4.0, series.label());
    }
    s.push_str("</svg>\n");
    Ok(s)
}
