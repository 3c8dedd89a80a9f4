//! Delta tables, cross-pair averages, accuracy bands and report rendering.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::LanguagePair;
use crate::error::{Error, Result};
use crate::fixture::{ScoreTable, LANGUAGE_PAIRS};
use crate::metrics::MetricId;
use crate::stats::SignificanceResult;

const ROUND_EPS: f64 = 1e-9;

/// Rounds half away from zero at `decimals` places. A small tolerance
/// absorbs binary noise so that e.g. 89.25 stored as 89.2499999 rounds up.
pub fn round_half_up(x: f64, decimals: u32) -> f64 {
    let scale = 10f64.powi(decimals as i32);
    let r = (x.abs() * scale + 0.5 + ROUND_EPS).floor() / scale;
    if r == 0.0 {
        0.0
    } else {
        r.copysign(x)
    }
}

/// One-decimal presentation; never prints `-0.0`.
pub fn format_one_decimal(x: f64) -> String {
    format!("{:.1}", round_half_up(x, 1))
}

/// One system's score for one metric and language pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemScore {
    pub system: String,
    pub lp: LanguagePair,
    pub metric: MetricId,
    pub value: f64,
}

/// Unweighted mean over `lps`, each of which must appear exactly once.
pub fn average_across_pairs(scores: &[SystemScore], lps: &[LanguagePair]) -> Result<f64> {
    let first = scores.first().ok_or(Error::Empty("system scores"))?;
    if let Some(other) = scores.iter().find(|s| s.metric != first.metric) {
        return Err(Error::MetricMismatch(first.metric.to_string(), other.metric.to_string()));
    }
    let mut sum = 0.0;
    for lp in lps {
        let s = scores.iter().find(|s| &s.lp == lp).ok_or_else(|| Error::MissingFixtureCell {
            system: first.system.clone(),
            lp: lp.to_string(),
            metric: first.metric.to_string(),
        })?;
        sum += s.value;
    }
    Ok(sum / lps.len() as f64)
}

/// Cross-pair average of one fixture cell family.
pub fn table_average(table: &ScoreTable, system: &str, metric: MetricId, lps: &[LanguagePair]) -> Result<f64> {
    let scores = lps
        .iter()
        .map(|lp| {
            Ok(SystemScore {
                system: system.to_string(),
                lp: lp.clone(),
                metric,
                value: table.get(system, lp, metric)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    average_across_pairs(&scores, lps)
}

/// `candidate − baseline`, at full precision.
pub fn delta(candidate: &SystemScore, baseline: &SystemScore) -> Result<f64> {
    if candidate.metric != baseline.metric {
        return Err(Error::MetricMismatch(candidate.metric.to_string(), baseline.metric.to_string()));
    }
    if candidate.lp != baseline.lp {
        return Err(Error::MetricMismatch(
            format!("{} on {}", candidate.metric, candidate.lp),
            format!("{} on {}", baseline.metric, baseline.lp),
        ));
    }
    Ok(candidate.value - baseline.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Band {
    #[serde(rename = ">99%")]
    VirtuallyCertain,
    #[serde(rename = ">90%")]
    VeryLikely,
    #[serde(rename = ">66%")]
    Likely,
    #[serde(rename = "33%–66%")]
    AboutAsLikely,
    #[serde(rename = "<33%")]
    Unlikely,
    #[serde(rename = "<10%")]
    VeryUnlikely,
    #[serde(rename = "<1%")]
    ExceptionallyUnlikely,
}

impl Band {
    pub const ALL: [Band; 7] = [
        Band::VirtuallyCertain,
        Band::VeryLikely,
        Band::Likely,
        Band::AboutAsLikely,
        Band::Unlikely,
        Band::VeryUnlikely,
        Band::ExceptionallyUnlikely,
    ];

    pub fn of(accuracy: f64) -> Band {
        if accuracy > 99.0 {
            Band::VirtuallyCertain
        } else if accuracy > 90.0 {
            Band::VeryLikely
        } else if accuracy > 66.0 {
            Band::Likely
        } else if accuracy >= 33.0 {
            Band::AboutAsLikely
        } else if accuracy >= 10.0 {
            Band::Unlikely
        } else if accuracy >= 1.0 {
            Band::VeryUnlikely
        } else {
            Band::ExceptionallyUnlikely
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Band::VirtuallyCertain => ">99%",
            Band::VeryLikely => ">90%",
            Band::Likely => ">66%",
            Band::AboutAsLikely => "33%–66%",
            Band::Unlikely => "<33%",
            Band::VeryUnlikely => "<10%",
            Band::ExceptionallyUnlikely => "<1%",
        }
    }
}

impl FromStr for Band {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Band::ALL
            .into_iter()
            .find(|b| b.label() == s)
            .ok_or_else(|| Error::Config(format!("unknown band {s:?}")))
    }
}

/// Delta to human-accuracy curves, one per mapped metric, as
/// `[|delta|, accuracy %]` anchor points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AccuracyBandTable {
    pub tables: BTreeMap<MetricId, Vec<[f64; 2]>>,
    pub unmapped: BTreeSet<MetricId>,
}

impl Default for AccuracyBandTable {
    /// Only the two published anchors; TER and QE are unmapped.
    fn default() -> Self {
        AccuracyBandTable {
            tables: BTreeMap::from([
                (MetricId::Bleurt20, vec![[1.0, 78.5]]),
                (MetricId::Bertscore, vec![[0.58, 78.5]]),
            ]),
            unmapped: BTreeSet::from([MetricId::Ter, MetricId::LuxembedderQe]),
        }
    }
}

impl AccuracyBandTable {
    pub fn validate(&self) -> Result<()> {
        for (metric, points) in &self.tables {
            if self.unmapped.contains(metric) {
                return Err(Error::Config(format!("{metric} is both mapped and unmapped")));
            }
            if points.is_empty() {
                return Err(Error::Config(format!("accuracy table for {metric} is empty")));
            }
            if points.windows(2).any(|w| !(w[0][0] < w[1][0]) || w[1][1] < w[0][1]) {
                return Err(Error::Config(format!(
                    "accuracy table for {metric} must have increasing deltas and non-decreasing accuracy"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum AccuracyEstimate {
    Estimate { percent: f64, band: Band },
    OutsideTable,
    Unmapped,
}

impl AccuracyEstimate {
    pub fn label(&self) -> String {
        match self {
            AccuracyEstimate::Estimate { percent, band } => format!("{}% ({})", format_one_decimal(*percent), band.label()),
            AccuracyEstimate::OutsideTable => "outside table".into(),
            AccuracyEstimate::Unmapped => "unmapped".into(),
        }
    }
}

const ANCHOR_EPS: f64 = 1e-9;

/// Piecewise-linear interpolation of `|delta|` on the metric's anchors.
/// Values beyond the first or last anchor are [`AccuracyEstimate::OutsideTable`].
pub fn accuracy_estimate(metric: MetricId, delta: f64, table: &AccuracyBandTable) -> Result<AccuracyEstimate> {
    if table.unmapped.contains(&metric) {
        return Ok(AccuracyEstimate::Unmapped);
    }
    let points = table
        .tables
        .get(&metric)
        .ok_or_else(|| Error::NoAccuracyTable(metric.to_string()))?;
    let d = delta.abs();
    let estimate = |percent: f64| AccuracyEstimate::Estimate {
        percent,
        band: Band::of(percent),
    };
    if let Some(p) = points.iter().find(|p| (p[0] - d).abs() <= ANCHOR_EPS) {
        return Ok(estimate(p[1]));
    }
    for w in points.windows(2) {
        let ([x0, y0], [x1, y1]) = (w[0], w[1]);
        if x0 <= d && d <= x1 {
            return Ok(estimate(y0 + (y1 - y0) * (d - x0) / (x1 - x0)));
        }
    }
    Ok(AccuracyEstimate::OutsideTable)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub lp: LanguagePair,
    pub metric: MetricId,
    pub baseline: f64,
    pub candidate: f64,
    pub delta: f64,
    pub significant: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<AccuracyEstimate>,
}

/// Input for one report cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportCell {
    pub lp: LanguagePair,
    pub metric: MetricId,
    pub baseline: f64,
    pub candidate: f64,
    pub significance: Significance,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Significance {
    Tested(SignificanceResult),
    /// A flag taken from elsewhere, such as a published table.
    Flag(bool),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemReport {
    pub baseline: String,
    pub candidate: String,
    pub rows: Vec<ReportRow>,
}

fn lp_rank(lp: &LanguagePair) -> usize {
    let s = lp.to_string();
    LANGUAGE_PAIRS.iter().position(|p| *p == s).unwrap_or(LANGUAGE_PAIRS.len())
}

fn metric_rank(m: MetricId) -> usize {
    MetricId::ALL.iter().position(|x| *x == m).expect("metric listed in ALL")
}

impl SystemReport {
    /// Builds rows in the canonical order. Metrics absent from the accuracy
    /// table and not marked unmapped get no estimate.
    pub fn from_cells(
        baseline: impl Into<String>,
        candidate: impl Into<String>,
        cells: Vec<ReportCell>,
        accuracy: &AccuracyBandTable,
    ) -> Result<Self> {
        let mut rows = cells
            .into_iter()
            .map(|c| {
                let (significant, ci) = match c.significance {
                    Significance::Tested(r) => (r.significant, Some([r.ci_lo, r.ci_hi])),
                    Significance::Flag(f) => (f, None),
                };
                let delta = c.candidate - c.baseline;
                let accuracy = match accuracy_estimate(c.metric, delta, accuracy) {
                    Ok(a) => Some(a),
                    Err(Error::NoAccuracyTable(_)) => None,
                    Err(e) => return Err(e),
                };
                Ok(ReportRow {
                    lp: c.lp,
                    metric: c.metric,
                    baseline: c.baseline,
                    candidate: c.candidate,
                    delta,
                    significant,
                    ci,
                    accuracy,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.sort_by(|a, b| {
            (lp_rank(&a.lp), a.lp.to_string(), metric_rank(a.metric)).cmp(&(
                lp_rank(&b.lp),
                b.lp.to_string(),
                metric_rank(b.metric),
            ))
        });
        if let Some(w) = rows.windows(2).find(|w| w[0].lp == w[1].lp && w[0].metric == w[1].metric) {
            return Err(Error::Config(format!("duplicate report cell ({}, {})", w[0].lp, w[0].metric)));
        }
        Ok(SystemReport {
            baseline: baseline.into(),
            candidate: candidate.into(),
            rows,
        })
    }

    pub fn row(&self, lp: &LanguagePair, metric: MetricId) -> Option<&ReportRow> {
        self.rows.iter().find(|r| &r.lp == lp && r.metric == metric)
    }

    fn lps(&self) -> Vec<&LanguagePair> {
        let mut out: Vec<&LanguagePair> = Vec::new();
        for r in &self.rows {
            if out.last() != Some(&&r.lp) {
                out.push(&r.lp);
            }
        }
        out
    }

    fn metrics(&self) -> Vec<MetricId> {
        MetricId::ALL
            .into_iter()
            .filter(|m| self.rows.iter().any(|r| r.metric == *m))
            .collect()
    }
}

/// Delta cell text: one decimal with a trailing `*` when significant.
pub fn delta_cell(row: &ReportRow) -> String {
    let mut s = format_one_decimal(row.delta);
    if row.significant {
        s.push('*');
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Markdown,
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::Config(format!("unknown report format {other:?}"))),
        }
    }
}

pub fn render_report(report: &SystemReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Markdown => render_markdown(report),
        ReportFormat::Csv => render_csv(report),
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
    }
}

fn render_markdown(report: &SystemReport) -> String {
    let metrics = report.metrics();
    let mut out = String::new();
    let _ = writeln!(out, "Δ = {} − {}", report.candidate, report.baseline);
    out.push('\n');
    let header: Vec<&str> = metrics.iter().map(|m| m.label()).collect();
    let _ = writeln!(out, "| | {} |", header.join(" | "));
    let _ = writeln!(out, "|---|{}", "---|".repeat(metrics.len()));
    for lp in report.lps() {
        let cells: Vec<String> = metrics
            .iter()
            .map(|m| report.row(lp, *m).map(delta_cell).unwrap_or_else(|| "-".into()))
            .collect();
        let _ = writeln!(out, "| Δ {} | {} |", lp.arrow_label(), cells.join(" | "));
    }
    out.push_str("\n\\* significant at 95% confidence\n");

    let mapped: Vec<&ReportRow> = report
        .rows
        .iter()
        .filter(|r| matches!(r.accuracy, Some(AccuracyEstimate::Estimate { .. }) | Some(AccuracyEstimate::OutsideTable)))
        .collect();
    if !mapped.is_empty() {
        out.push_str("\nEstimated human accuracy:\n\n");
        for r in mapped {
            let label = r.accuracy.map(|a| a.label()).unwrap_or_default();
            let _ = writeln!(out, "- {} {}: {}", r.lp.arrow_label(), r.metric.label(), label);
        }
    }
    out
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRecord {
    baseline_system: String,
    candidate_system: String,
    lp: LanguagePair,
    metric: MetricId,
    baseline: f64,
    candidate: f64,
    delta: f64,
    significant: bool,
    ci_lo: Option<f64>,
    ci_hi: Option<f64>,
    accuracy: String,
    accuracy_percent: Option<f64>,
    band: Option<String>,
}

fn render_csv(report: &SystemReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &report.rows {
        let (accuracy, accuracy_percent, band) = match r.accuracy {
            None => (String::new(), None, None),
            Some(AccuracyEstimate::Unmapped) => ("unmapped".into(), None, None),
            Some(AccuracyEstimate::OutsideTable) => ("outside_table".into(), None, None),
            Some(AccuracyEstimate::Estimate { percent, band }) => ("estimate".into(), Some(percent), Some(band.label().to_string())),
        };
        w.serialize(CsvRecord {
            baseline_system: report.baseline.clone(),
            candidate_system: report.candidate.clone(),
            lp: r.lp.clone(),
            metric: r.metric,
            baseline: r.baseline,
            candidate: r.candidate,
            delta: r.delta,
            significant: r.significant,
            ci_lo: r.ci.map(|c| c[0]),
            ci_hi: r.ci.map(|c| c[1]),
            accuracy,
            accuracy_percent,
            band,
        })
        .expect("in-memory csv write");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv is utf-8")
}

/// Inverse of the CSV rendering.
pub fn parse_report_csv(text: &str) -> Result<SystemReport> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let mut report: Option<SystemReport> = None;
    for (idx, rec) in rdr.deserialize::<CsvRecord>().enumerate() {
        let malformed = |reason: String| Error::MalformedRecord { line: idx + 2, reason };
        let rec = rec.map_err(|e| malformed(e.to_string()))?;
        let accuracy = match rec.accuracy.as_str() {
            "" => None,
            "unmapped" => Some(AccuracyEstimate::Unmapped),
            "outside_table" => Some(AccuracyEstimate::OutsideTable),
            "estimate" => {
                let percent = rec.accuracy_percent.ok_or_else(|| malformed("estimate without percent".into()))?;
                let band = rec.band.as_deref().ok_or_else(|| malformed("estimate without band".into()))?.parse()?;
                Some(AccuracyEstimate::Estimate { percent, band })
            }
            other => return Err(malformed(format!("unknown accuracy kind {other:?}"))),
        };
        let ci = match (rec.ci_lo, rec.ci_hi) {
            (Some(lo), Some(hi)) => Some([lo, hi]),
            (None, None) => None,
            _ => return Err(malformed("half-open confidence interval".into())),
        };
        let rep = report.get_or_insert_with(|| SystemReport {
            baseline: rec.baseline_system.clone(),
            candidate: rec.candidate_system.clone(),
            rows: Vec::new(),
        });
        rep.rows.push(ReportRow {
            lp: rec.lp,
            metric: rec.metric,
            baseline: rec.baseline,
            candidate: rec.candidate,
            delta: rec.delta,
            significant: rec.significant,
            ci,
            accuracy,
        });
    }
    report.ok_or(Error::Empty("report csv"))
}
