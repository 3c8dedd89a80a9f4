//! Domain types for parallel corpora and score tables, plus JSONL/TSV I/O.
//!
//! JSONL records look like
//! `{"id":"7","src":"Moien","tgt":"Bonjour","lp":"lb-fr","sim":0.987654}`
//! with `sim` optional. TSV lines are `src<TAB>tgt[<TAB>sim]`, with `\\`,
//! `\t`, `\n` and `\r` backslash-escaped inside fields. `save_corpus` also
//! writes a `<file>.manifest.json` sidecar carrying the language pair and
//! pipeline stage; `load_corpus` honours it when present.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};
use crate::metrics::{MetricId, Orientation};

/// Lowercase ISO-639 language code.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct LangCode(String);

impl LangCode {
    pub fn new(code: &str) -> Result<Self> {
        let code = code.trim();
        let valid = (2..=3).contains(&code.len()) && code.chars().all(|c| c.is_ascii_alphabetic());
        if !valid {
            return Err(Error::InvalidLanguagePair(format!("bad language code {code:?}")));
        }
        Ok(LangCode(code.to_ascii_lowercase()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// English name used in prompt templates.
    pub fn english_name(&self) -> String {
        match self.0.as_str() {
            "lb" => "Luxembourgish".into(),
            "fr" => "French".into(),
            "en" => "English".into(),
            "de" => "German".into(),
            other => other.to_ascii_uppercase(),
        }
    }
}

impl TryFrom<String> for LangCode {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        LangCode::new(&s)
    }
}

impl From<LangCode> for String {
    fn from(c: LangCode) -> String {
        c.0
    }
}

impl fmt::Display for LangCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct LanguagePair {
    pub source: LangCode,
    pub target: LangCode,
}

impl LanguagePair {
    pub fn new(source: &str, target: &str) -> Result<Self> {
        let source = LangCode::new(source)?;
        let target = LangCode::new(target)?;
        if source == target {
            return Err(Error::InvalidLanguagePair(format!("{source}-{target}: source equals target")));
        }
        Ok(LanguagePair { source, target })
    }

    /// `LB→FR` style label.
    pub fn arrow_label(&self) -> String {
        format!(
            "{}→{}",
            self.source.as_str().to_ascii_uppercase(),
            self.target.as_str().to_ascii_uppercase()
        )
    }
}

impl FromStr for LanguagePair {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let parts: Vec<&str> = s.split(['-', '_', '→']).filter(|p| !p.is_empty()).collect();
        match parts.as_slice() {
            [src, tgt] => LanguagePair::new(src, tgt),
            _ => Err(Error::InvalidLanguagePair(s.to_string())),
        }
    }
}

impl TryFrom<String> for LanguagePair {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<LanguagePair> for String {
    fn from(lp: LanguagePair) -> String {
        lp.to_string()
    }
}

impl fmt::Display for LanguagePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.source, self.target)
    }
}

/// NFC-normalizes text. Every segment passes through this on construction.
pub fn nfc(text: &str) -> String {
    text.nfc().collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub id: String,
    pub text: String,
    pub lang: LangCode,
    pub doc_id: Option<String>,
}

impl Segment {
    pub fn new(id: impl Into<String>, text: &str, lang: LangCode) -> Result<Self> {
        let id = id.into();
        let text = nfc(text);
        if text.is_empty() {
            return Err(Error::InvalidSegment {
                id,
                reason: "empty text".into(),
            });
        }
        Ok(Segment {
            id,
            text,
            lang,
            doc_id: None,
        })
    }

    pub fn with_doc(mut self, doc_id: impl Into<String>) -> Self {
        self.doc_id = Some(doc_id.into());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Aligned,
    #[default]
    Given,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentPair {
    pub source: Segment,
    pub target: Segment,
    pub similarity: Option<f64>,
    pub origin: Origin,
}

impl SegmentPair {
    pub fn given(source: Segment, target: Segment) -> Self {
        SegmentPair {
            source,
            target,
            similarity: None,
            origin: Origin::Given,
        }
    }

    pub fn aligned(source: Segment, target: Segment, similarity: f64) -> Self {
        SegmentPair {
            source,
            target,
            similarity: Some(similarity),
            origin: Origin::Aligned,
        }
    }
}

/// Pipeline stage, in the order the benchmark builder runs them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    #[default]
    Raw,
    Standardized,
    Aligned,
    Filtered,
    Deduped,
    Selected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParallelCorpus {
    pub lp: LanguagePair,
    pub pairs: Vec<SegmentPair>,
    pub stage: Stage,
}

impl ParallelCorpus {
    pub fn new(lp: LanguagePair) -> Self {
        ParallelCorpus {
            lp,
            pairs: Vec::new(),
            stage: Stage::Raw,
        }
    }

    pub fn from_pairs(lp: LanguagePair, pairs: Vec<SegmentPair>) -> Result<Self> {
        let mut corpus = ParallelCorpus::new(lp);
        for pair in pairs {
            corpus.push(pair)?;
        }
        Ok(corpus)
    }

    pub fn push(&mut self, pair: SegmentPair) -> Result<()> {
        if pair.source.lang != self.lp.source || pair.target.lang != self.lp.target {
            return Err(Error::InvalidSegment {
                id: pair.source.id.clone(),
                reason: format!(
                    "pair is {}-{}, corpus is {}",
                    pair.source.lang, pair.target.lang, self.lp
                ),
            });
        }
        if let Some(sim) = pair.similarity {
            if !sim.is_finite() || !(-1.0..=1.0).contains(&sim) {
                return Err(Error::InvalidSegment {
                    id: pair.source.id.clone(),
                    reason: format!("similarity {sim} outside [-1, 1]"),
                });
            }
        }
        self.pairs.push(pair);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Replaces the pairs and advances the stage. Stages never move backwards.
    pub fn with_pairs(&self, pairs: Vec<SegmentPair>, stage: Stage) -> ParallelCorpus {
        ParallelCorpus {
            lp: self.lp.clone(),
            pairs,
            stage: self.stage.max(stage),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Jsonl,
    Tsv,
}

impl CorpusFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "jsonl" | "json" => Some(CorpusFormat::Jsonl),
            "tsv" | "txt" => Some(CorpusFormat::Tsv),
            _ => None,
        }
    }
}

impl FromStr for CorpusFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(CorpusFormat::Jsonl),
            "tsv" => Ok(CorpusFormat::Tsv),
            other => Err(Error::Config(format!("unknown corpus format {other}"))),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonlRecord {
    id: String,
    src: String,
    tgt: String,
    lp: LanguagePair,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sim: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tgt_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    doc: Option<String>,
    #[serde(default, skip_serializing_if = "is_given")]
    origin: Origin,
}

fn is_given(o: &Origin) -> bool {
    *o == Origin::Given
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    lp: LanguagePair,
    stage: Stage,
    pairs: usize,
}

pub fn manifest_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    path.with_file_name(name)
}

fn read_manifest(path: &Path) -> Result<Option<Manifest>> {
    let mpath = manifest_path(path);
    if !mpath.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&mpath).map_err(|e| Error::io(&mpath, e))?;
    serde_json::from_str(&text)
        .map(Some)
        .map_err(|e| Error::Config(format!("{}: {e}", mpath.display())))
}

/// Similarities are persisted with six decimal places.
pub fn round_similarity(sim: f64) -> f64 {
    (sim * 1e6).round() / 1e6
}

pub fn escape_tsv_field(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

pub fn unescape_tsv_field(s: &str) -> std::result::Result<String, String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some(other) => return Err(format!("unknown escape \\{other}")),
            None => return Err("dangling backslash".into()),
        }
    }
    Ok(out)
}

fn parse_similarity(field: &str, line: usize) -> Result<Option<f64>> {
    let field = field.trim();
    if field.is_empty() {
        return Ok(None);
    }
    field.parse::<f64>().map(Some).map_err(|_| Error::MalformedRecord {
        line,
        reason: format!("bad similarity {field:?}"),
    })
}

/// Loads a corpus. The language pair comes from the sidecar manifest, then
/// from `lp`, then (JSONL only) from the first record.
pub fn load_corpus(path: &Path, format: CorpusFormat, lp: Option<&LanguagePair>) -> Result<ParallelCorpus> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let manifest = read_manifest(path)?;
    let mut expected: Option<LanguagePair> = manifest.as_ref().map(|m| m.lp.clone()).or_else(|| lp.cloned());
    let mut pairs = Vec::new();
    let mut seen_ids = HashSet::new();

    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |reason: String| Error::MalformedRecord { line: line_no, reason };
        let pair = match format {
            CorpusFormat::Jsonl => {
                let rec: JsonlRecord = serde_json::from_str(line).map_err(|e| malformed(e.to_string()))?;
                match &expected {
                    Some(exp) if *exp != rec.lp => {
                        return Err(Error::MixedLanguagePairs {
                            line: line_no,
                            expected: exp.to_string(),
                            found: rec.lp.to_string(),
                        })
                    }
                    Some(_) => {}
                    None => expected = Some(rec.lp.clone()),
                }
                let tgt_id = rec.tgt_id.clone().unwrap_or_else(|| rec.id.clone());
                let mut source = Segment::new(rec.id, &rec.src, rec.lp.source.clone())
                    .map_err(|e| malformed(e.to_string()))?;
                let mut target =
                    Segment::new(tgt_id, &rec.tgt, rec.lp.target.clone()).map_err(|e| malformed(e.to_string()))?;
                if let Some(doc) = rec.doc {
                    source.doc_id = Some(doc.clone());
                    target.doc_id = Some(doc);
                }
                SegmentPair {
                    source,
                    target,
                    similarity: rec.sim,
                    origin: rec.origin,
                }
            }
            CorpusFormat::Tsv => {
                let lp = expected.clone().ok_or_else(|| Error::UnknownLanguagePair(path.to_path_buf()))?;
                let fields: Vec<&str> = line.split('\t').collect();
                if !(2..=3).contains(&fields.len()) {
                    return Err(malformed(format!("expected 2 or 3 columns, found {}", fields.len())));
                }
                let src = unescape_tsv_field(fields[0]).map_err(&malformed)?;
                let tgt = unescape_tsv_field(fields[1]).map_err(&malformed)?;
                let sim = match fields.get(2) {
                    Some(f) => parse_similarity(f, line_no)?,
                    None => None,
                };
                let id = line_no.to_string();
                let source = Segment::new(id.clone(), &src, lp.source.clone()).map_err(|e| malformed(e.to_string()))?;
                let target = Segment::new(id, &tgt, lp.target.clone()).map_err(|e| malformed(e.to_string()))?;
                SegmentPair {
                    source,
                    target,
                    similarity: sim,
                    origin: Origin::Given,
                }
            }
        };
        if !seen_ids.insert(pair.source.id.clone()) {
            return Err(malformed(format!("duplicate id {}", pair.source.id)));
        }
        if let Some(sim) = pair.similarity {
            if !sim.is_finite() || !(-1.0..=1.0).contains(&sim) {
                return Err(malformed(format!("similarity {sim} outside [-1, 1]")));
            }
        }
        pairs.push(pair);
    }

    let lp = expected.ok_or_else(|| Error::UnknownLanguagePair(path.to_path_buf()))?;
    let mut corpus = ParallelCorpus::from_pairs(lp, pairs)?;
    if let Some(m) = manifest {
        corpus.stage = m.stage;
    }
    Ok(corpus)
}

pub fn save_corpus(corpus: &ParallelCorpus, path: &Path, format: CorpusFormat) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for pair in &corpus.pairs {
        let sim = pair.similarity.map(round_similarity);
        let line = match format {
            CorpusFormat::Jsonl => {
                let rec = JsonlRecord {
                    id: pair.source.id.clone(),
                    src: pair.source.text.clone(),
                    tgt: pair.target.text.clone(),
                    lp: corpus.lp.clone(),
                    sim,
                    tgt_id: (pair.target.id != pair.source.id).then(|| pair.target.id.clone()),
                    doc: pair.source.doc_id.clone(),
                    origin: pair.origin,
                };
                serde_json::to_string(&rec).expect("record serializes")
            }
            CorpusFormat::Tsv => {
                let mut line = format!(
                    "{}\t{}",
                    escape_tsv_field(&pair.source.text),
                    escape_tsv_field(&pair.target.text)
                );
                if let Some(sim) = sim {
                    line.push('\t');
                    line.push_str(&sim.to_string());
                }
                line
            }
        };
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;

    let manifest = Manifest {
        lp: corpus.lp.clone(),
        stage: corpus.stage,
        pairs: corpus.len(),
    };
    let mpath = manifest_path(path);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&mpath, text + "\n").map_err(|e| Error::io(&mpath, e))
}

/// Per-segment values of one metric for one system on one language pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentScores {
    pub system: String,
    pub metric: MetricId,
    pub lp: LanguagePair,
    pub ids: Vec<String>,
    pub values: Vec<f64>,
}

impl SegmentScores {
    pub fn new(
        system: impl Into<String>,
        metric: MetricId,
        lp: LanguagePair,
        ids: Vec<String>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if ids.len() != values.len() {
            return Err(Error::LengthMismatch {
                left: ids.len(),
                right: values.len(),
            });
        }
        Ok(SegmentScores {
            system: system.into(),
            metric,
            lp,
            ids,
            values,
        })
    }

    pub fn orientation(&self) -> Orientation {
        self.metric.orientation()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}
