//! Benchmark construction and fine-tuning mixture assembly.
//!
//! Benchmark stage order: segment, standardize quotes, align, drop short
//! sources, dedup, keep the top-K pairs by similarity. The selected pairs
//! are exported as a review TSV with an empty verdict column for manual
//! checking.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::align::{align, filter_by_threshold, top_k_by_similarity, AlignPolicy, FilterThreshold};
use crate::corpus::{escape_tsv_field, LangCode, LanguagePair, Origin, ParallelCorpus, Segment, SegmentPair, Stage};
use crate::embed::EmbeddingProvider;
use crate::error::{Error, Result};
use crate::preprocess::{dedup, filter_min_source_length, standardize_quotes, QuotePolicy};
use crate::segment::segment_sentences;

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub id: String,
    pub text: String,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Document {
            id: id.into(),
            text: text.into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchmarkOptions {
    pub k: usize,
    pub min_words: usize,
    pub quotes: QuotePolicy,
    pub policy: AlignPolicy,
}

impl Default for BenchmarkOptions {
    fn default() -> Self {
        BenchmarkOptions {
            k: 500,
            min_words: 5,
            quotes: QuotePolicy::standardize(),
            policy: AlignPolicy::GreedyOneToOne,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchmarkBuild {
    pub corpus: ParallelCorpus,
    /// Pair counts after each stage, in pipeline order.
    pub stage_counts: Vec<(Stage, usize)>,
    pub warnings: Vec<String>,
}

impl BenchmarkBuild {
    pub fn review_tsv(&self) -> String {
        review_tsv(&self.corpus)
    }
}

/// `src, tgt, sim, verdict` with a blank verdict column.
pub fn review_tsv(corpus: &ParallelCorpus) -> String {
    let mut out = String::from("src\ttgt\tsim\tverdict\n");
    for p in &corpus.pairs {
        let sim = p.similarity.map(|s| format!("{s:.6}")).unwrap_or_default();
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t",
            escape_tsv_field(&p.source.text),
            escape_tsv_field(&p.target.text),
            sim
        );
    }
    out
}

fn standardized(segments: Vec<Segment>, policy: &QuotePolicy) -> Vec<Segment> {
    segments
        .into_iter()
        .map(|mut s| {
            s.text = standardize_quotes(&s.text, &s.lang, policy);
            s
        })
        .collect()
}

/// Documents are paired by id; unmatched documents are skipped with a warning.
pub fn build_benchmark(
    source_docs: &[Document],
    target_docs: &[Document],
    lp: &LanguagePair,
    provider: &dyn EmbeddingProvider,
    opts: &BenchmarkOptions,
) -> Result<BenchmarkBuild> {
    let mut warnings = Vec::new();
    let targets_by_id: HashMap<&str, &Document> = target_docs.iter().map(|d| (d.id.as_str(), d)).collect();

    let mut aligned = Vec::new();
    let mut segmented = 0usize;
    for doc in source_docs {
        let Some(tdoc) = targets_by_id.get(doc.id.as_str()) else {
            warnings.push(format!("document {} has no {} counterpart", doc.id, lp.target));
            continue;
        };
        let src = segment_sentences(&doc.text, &lp.source, Some(&doc.id));
        let tgt = segment_sentences(&tdoc.text, &lp.target, Some(&tdoc.id));
        segmented += src.len();
        if src.is_empty() || tgt.is_empty() {
            warnings.push(format!("document {} has an empty side after segmentation", doc.id));
            continue;
        }
        let src = standardized(src, &opts.quotes);
        let tgt = standardized(tgt, &opts.quotes);
        let pairs = align(&src, &tgt, provider, opts.policy).map_err(|e| e.in_stage("align"))?;
        aligned.extend(pairs);
    }

    let mut stage_counts = vec![(Stage::Raw, segmented)];
    let corpus = ParallelCorpus::from_pairs(lp.clone(), aligned).map_err(|e| e.in_stage("align"))?;
    let corpus = corpus.with_pairs(corpus.pairs.clone(), Stage::Aligned);
    stage_counts.push((Stage::Aligned, corpus.len()));

    let corpus = filter_min_source_length(&corpus, opts.min_words);
    stage_counts.push((Stage::Filtered, corpus.len()));

    let corpus = dedup(&corpus);
    stage_counts.push((Stage::Deduped, corpus.len()));

    let top = top_k_by_similarity(&corpus.pairs, opts.k).map_err(|e| e.in_stage("select"))?;
    let corpus = corpus.with_pairs(top, Stage::Selected);
    stage_counts.push((Stage::Selected, corpus.len()));

    if corpus.is_empty() {
        warnings.push("benchmark is empty: no pair survived filtering".into());
    }
    Ok(BenchmarkBuild {
        corpus,
        stage_counts,
        warnings,
    })
}

pub const TARGET_LANGUAGE_SLOT: &str = "[Target Language]";
pub const SOURCE_SEGMENT_SLOT: &str = "[source segment]";
pub const DEFAULT_TEMPLATE: &str = "Translate from Luxembourgish to [Target Language]: [source segment]";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct PromptTemplate(String);

impl PromptTemplate {
    pub fn new(template: &str) -> Result<Self> {
        for slot in [TARGET_LANGUAGE_SLOT, SOURCE_SEGMENT_SLOT] {
            let n = template.matches(slot).count();
            if n != 1 {
                return Err(Error::Template(format!("{slot} must appear exactly once, found {n}")));
            }
        }
        Ok(PromptTemplate(template.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn render(&self, target: &LangCode, source_segment: &str) -> String {
        self.0
            .replacen(TARGET_LANGUAGE_SLOT, &target.english_name(), 1)
            .replacen(SOURCE_SEGMENT_SLOT, source_segment, 1)
    }
}

impl Default for PromptTemplate {
    fn default() -> Self {
        PromptTemplate::new(DEFAULT_TEMPLATE).expect("default template is valid")
    }
}

impl TryFrom<String> for PromptTemplate {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        PromptTemplate::new(&s)
    }
}

impl From<PromptTemplate> for String {
    fn from(t: PromptTemplate) -> String {
        t.0
    }
}

#[derive(Debug, Clone)]
pub struct MixtureSource {
    pub name: String,
    pub corpus: ParallelCorpus,
    pub threshold: FilterThreshold,
    /// Upstream note recorded in the manifest (e.g. machine-translated side).
    pub provenance: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstructionRecord {
    pub id: String,
    pub source: String,
    pub lp: LanguagePair,
    pub prompt: String,
    pub completion: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceCount {
    pub name: String,
    pub lp: LanguagePair,
    pub threshold: f64,
    pub input: usize,
    pub after_threshold: usize,
    pub kept: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureManifest {
    pub seed: u64,
    pub template: PromptTemplate,
    pub sources: Vec<SourceCount>,
    /// Kept records per target language.
    pub per_target: BTreeMap<String, usize>,
    pub total: usize,
}

#[derive(Debug, Clone)]
pub struct TrainingMixture {
    pub records: Vec<InstructionRecord>,
    pub manifest: MixtureManifest,
}

impl TrainingMixture {
    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let mut text = String::new();
        for r in &self.records {
            text.push_str(&serde_json::to_string(r).expect("record serializes"));
            text.push('\n');
        }
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// Filters each source at its own threshold, dedups it, renders prompts,
/// then shuffles everything with a seeded RNG. Sources whose target
/// language is not in `target_langs` are skipped (counted with zero kept).
pub fn build_training_mixture(
    sources: &[MixtureSource],
    template: &PromptTemplate,
    target_langs: &[LangCode],
    seed: u64,
) -> Result<TrainingMixture> {
    let mut records = Vec::new();
    let mut counts = Vec::new();
    let mut per_target: BTreeMap<String, usize> = target_langs.iter().map(|l| (l.to_string(), 0)).collect();

    for src in sources {
        let filtered = filter_by_threshold(&src.corpus.pairs, src.threshold).map_err(|e| e.in_stage("threshold"))?;
        let after_threshold = filtered.kept();
        let deduped = dedup(&src.corpus.with_pairs(filtered.pairs, Stage::Filtered));
        let wanted = target_langs.contains(&src.corpus.lp.target);
        let kept = if wanted { deduped.len() } else { 0 };
        if wanted {
            *per_target.entry(src.corpus.lp.target.to_string()).or_default() += kept;
            records.extend(deduped.pairs.iter().map(|p| InstructionRecord {
                id: format!("{}:{}", src.name, p.source.id),
                source: src.name.clone(),
                lp: src.corpus.lp.clone(),
                prompt: template.render(&src.corpus.lp.target, &p.source.text),
                completion: p.target.text.clone(),
            }));
        }
        counts.push(SourceCount {
            name: src.name.clone(),
            lp: src.corpus.lp.clone(),
            threshold: src.threshold.theta(),
            input: src.corpus.len(),
            after_threshold,
            kept,
            provenance: src.provenance.clone(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    records.shuffle(&mut rng);
    let total = records.len();
    Ok(TrainingMixture {
        records,
        manifest: MixtureManifest {
            seed,
            template: template.clone(),
            sources: counts,
            per_target,
            total,
        },
    })
}

/// External machine translation used to augment monolingual data.
pub trait Translator {
    fn name(&self) -> &str;
    fn translate(&self, texts: &[String], lp: &LanguagePair) -> Result<Vec<String>>;
}

/// Offline stand-in that answers from a fixed table and fails on anything
/// else.
#[derive(Debug, Clone, Default)]
pub struct StubTranslator {
    table: HashMap<String, String>,
}

impl StubTranslator {
    pub fn new(table: HashMap<String, String>) -> Self {
        StubTranslator { table }
    }
}

impl Translator for StubTranslator {
    fn name(&self) -> &str {
        "stub"
    }

    fn translate(&self, texts: &[String], _lp: &LanguagePair) -> Result<Vec<String>> {
        texts
            .iter()
            .enumerate()
            .map(|(index, t)| {
                self.table.get(t).cloned().ok_or_else(|| Error::Provider {
                    kind: "translator",
                    index,
                    reason: format!("no translation for {t:?}"),
                })
            })
            .collect()
    }
}

/// Pairs monolingual source segments with machine translations. Returns the
/// corpus and a provenance note for the mixture manifest.
pub fn augment_monolingual(
    segments: &[Segment],
    lp: &LanguagePair,
    translator: &dyn Translator,
) -> Result<(ParallelCorpus, String)> {
    let texts: Vec<String> = segments.iter().map(|s| s.text.clone()).collect();
    let translated = translator.translate(&texts, lp).map_err(|e| e.in_stage("translate"))?;
    if translated.len() != segments.len() {
        return Err(Error::LengthMismatch {
            left: segments.len(),
            right: translated.len(),
        });
    }
    let pairs = segments
        .iter()
        .zip(translated)
        .map(|(s, t)| {
            let target = Segment::new(s.id.clone(), &t, lp.target.clone())?;
            Ok(SegmentPair {
                source: s.clone(),
                target,
                similarity: None,
                origin: Origin::Given,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let note = format!("{} target side machine-translated by {}", lp, translator.name());
    Ok((ParallelCorpus::from_pairs(lp.clone(), pairs)?, note))
}
