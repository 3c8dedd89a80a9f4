//! Published system-level scores (seven base systems, three language pairs,
//! seven metrics) as a TSV table with columns `system, lp, metric, score`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::corpus::LanguagePair;
use crate::error::{Error, Result};
use crate::metrics::MetricId;

/// Checked-in transcription of the published base-system results.
pub const PUBLISHED_TSV: &str = include_str!("../../../fixtures/system_scores.tsv");

/// Systems in table order; the first is the baseline.
pub const SYSTEMS: [&str; 7] = [
    "Gemma 3",
    "Aya Expanse",
    "Command R",
    "Llama 3.1",
    "Llama 4",
    "Mistral S",
    "Phi 4",
];

pub const LANGUAGE_PAIRS: [&str; 3] = ["lb-fr", "lb-en", "lb-de"];

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureRow {
    pub system: String,
    pub lp: LanguagePair,
    pub metric: MetricId,
    pub score: f64,
}

/// System scores keyed by (system, lp, metric).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreTable {
    rows: Vec<FixtureRow>,
    index: BTreeMap<(String, String, MetricId), f64>,
}

impl ScoreTable {
    pub fn from_rows(rows: Vec<FixtureRow>) -> Result<Self> {
        let mut index = BTreeMap::new();
        for r in &rows {
            let key = (r.system.clone(), r.lp.to_string(), r.metric);
            if index.insert(key, r.score).is_some() {
                return Err(Error::Config(format!(
                    "duplicate score for ({}, {}, {})",
                    r.system, r.lp, r.metric
                )));
            }
        }
        Ok(ScoreTable { rows, index })
    }

    pub fn rows(&self) -> &[FixtureRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, system: &str, lp: &LanguagePair, metric: MetricId) -> Result<f64> {
        self.index
            .get(&(system.to_string(), lp.to_string(), metric))
            .copied()
            .ok_or_else(|| Error::MissingFixtureCell {
                system: system.to_string(),
                lp: lp.to_string(),
                metric: metric.to_string(),
            })
    }

    /// Distinct systems in first-seen order.
    pub fn systems(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.system) {
                out.push(r.system.clone());
            }
        }
        out
    }

    pub fn language_pairs(&self) -> Vec<LanguagePair> {
        let mut out: Vec<LanguagePair> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.lp) {
                out.push(r.lp.clone());
            }
        }
        out
    }

    /// Scores of `systems` for one (lp, metric) column, in the given order.
    pub fn column(&self, systems: &[String], lp: &LanguagePair, metric: MetricId) -> Result<Vec<f64>> {
        systems.iter().map(|s| self.get(s, lp, metric)).collect()
    }

    /// Checks that every (system, lp, metric) combination is present.
    pub fn check_complete(&self, systems: &[&str], lps: &[LanguagePair], metrics: &[MetricId]) -> Result<()> {
        for s in systems {
            for lp in lps {
                for m in metrics {
                    self.get(s, lp, *m)?;
                }
            }
        }
        Ok(())
    }
}

pub fn parse_score_table(text: &str) -> Result<ScoreTable> {
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || (line_no == 1 && line.starts_with("system\t")) {
            continue;
        }
        let malformed = |reason: String| Error::MalformedRecord { line: line_no, reason };
        let fields: Vec<&str> = line.split('\t').collect();
        let [system, lp, metric, score] = fields.as_slice() else {
            return Err(malformed(format!("expected 4 columns, found {}", fields.len())));
        };
        let score = score
            .trim()
            .parse::<f64>()
            .map_err(|_| malformed(format!("bad score {score:?}")))?;
        rows.push(FixtureRow {
            system: system.trim().to_string(),
            lp: lp.parse().map_err(|e: Error| malformed(e.to_string()))?,
            metric: metric.parse().map_err(|e: Error| malformed(e.to_string()))?,
            score,
        });
    }
    ScoreTable::from_rows(rows)
}

pub fn load_score_fixture(path: &Path) -> Result<ScoreTable> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_score_table(&text)
}

/// The built-in published table, validated for completeness.
pub fn published() -> ScoreTable {
    let table = parse_score_table(PUBLISHED_TSV).expect("checked-in fixture parses");
    let lps: Vec<LanguagePair> = LANGUAGE_PAIRS.iter().map(|s| s.parse().unwrap()).collect();
    table
        .check_complete(&SYSTEMS, &lps, &MetricId::ALL)
        .expect("checked-in fixture is complete");
    table
}
