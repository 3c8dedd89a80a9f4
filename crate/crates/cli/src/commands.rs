use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use luxkit::align::{filter_by_threshold, top_k_by_similarity, AlignPolicy, FilterThreshold};
use luxkit::corpus::{load_corpus, save_corpus, CorpusFormat, LangCode, Stage};
use luxkit::fixture::{load_score_fixture, published, ScoreTable};
use luxkit::pipeline::{self, build_training_mixture, BenchmarkOptions, Document, MixtureSource, PromptTemplate};
use luxkit::preprocess::{dedup, filter_min_source_length};
use luxkit::report::{render_report, ReportCell, ReportFormat, Significance, SystemReport};
use luxkit::stats::{paired_bootstrap_with, system_correlation_matrix, BootstrapConfig, MetricCorrelation};
use luxkit::{Error, Execution, LanguagePair, MetricId, Result};
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::system::{ExternalSource, Scorer, SystemOutput};
use crate::{
    BootstrapArgs, BuildBenchmarkArgs, CompareArgs, CorrelateArgs, FilterArgs, MixtureArgs, ReportArgs, ScoreArgs,
    ScorerArgs,
};

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Config(format!("{}: {e}", path.display()))
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| io_err(p, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| io_err(Path::new("<stdout>"), e))
        }
    }
}

fn corpus_format(path: &Path, explicit: Option<CorpusFormat>) -> Result<CorpusFormat> {
    explicit
        .or_else(|| CorpusFormat::from_path(path))
        .ok_or_else(|| Error::Config(format!("cannot infer corpus format of {}; use .jsonl or .tsv", path.display())))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DocRecord {
    id: String,
    text: String,
}

fn load_documents(path: &Path) -> Result<Vec<Document>> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(idx, line)| {
            serde_json::from_str::<DocRecord>(line)
                .map(|d| Document::new(d.id, d.text))
                .map_err(|e| Error::MalformedRecord {
                    line: idx + 1,
                    reason: format!("{}: {e}", path.display()),
                })
        })
        .collect()
}

fn parse_policy(s: &str) -> Result<AlignPolicy> {
    serde_json::from_value(serde_json::Value::String(s.replace('-', "_")))
        .map_err(|_| Error::Config(format!("unknown alignment policy {s}")))
}

pub fn build_benchmark(cfg: &Config, a: BuildBenchmarkArgs) -> Result<()> {
    let source_docs = load_documents(&a.source_docs)?;
    let target_docs = load_documents(&a.target_docs)?;
    let format = corpus_format(&a.out, a.format)?;
    let opts = BenchmarkOptions {
        k: a.k.unwrap_or(cfg.benchmark.k),
        min_words: a.min_words.unwrap_or(cfg.benchmark.min_words),
        quotes: cfg.quote_policy(),
        policy: match &a.policy {
            Some(p) => parse_policy(p)?,
            None => cfg.benchmark.align_policy,
        },
    };
    let provider = cfg.embedding.provider()?;
    let build = pipeline::build_benchmark(&source_docs, &target_docs, &a.lp, provider.as_ref(), &opts)?;
    for w in &build.warnings {
        eprintln!("warning: {w}");
    }
    for (stage, n) in &build.stage_counts {
        eprintln!("{stage:?}: {n}");
    }
    save_corpus(&build.corpus, &a.out, format)?;
    if let Some(review) = &a.review {
        write_output(Some(review), &build.review_tsv())?;
    }
    Ok(())
}

pub fn filter(cfg: &Config, a: FilterArgs) -> Result<()> {
    let in_format = corpus_format(&a.input, None)?;
    let out_format = corpus_format(&a.out, None)?;
    let mut corpus = load_corpus(&a.input, in_format, a.lp.as_ref())?;
    eprintln!("input: {}", corpus.len());
    if let Some(theta) = a.threshold.or(cfg.filter.threshold) {
        let kept = filter_by_threshold(&corpus.pairs, FilterThreshold::new(theta)?).map_err(|e| e.in_stage("threshold"))?;
        corpus = corpus.with_pairs(kept.pairs, Stage::Filtered);
        eprintln!("threshold {theta}: {}", corpus.len());
    }
    if let Some(min_words) = a.min_words {
        corpus = filter_min_source_length(&corpus, min_words);
        eprintln!("min words {min_words}: {}", corpus.len());
    }
    if a.dedup {
        corpus = dedup(&corpus);
        eprintln!("dedup: {}", corpus.len());
    }
    if let Some(k) = a.top_k {
        let top = top_k_by_similarity(&corpus.pairs, k).map_err(|e| e.in_stage("select"))?;
        corpus = corpus.with_pairs(top, Stage::Selected);
        eprintln!("top {k}: {}", corpus.len());
    }
    save_corpus(&corpus, &a.out, out_format)
}

fn parse_mixture_source(spec: &str, default_threshold: Option<f64>) -> Result<(String, PathBuf, f64)> {
    let (name, rest) = spec
        .split_once('=')
        .filter(|(n, p)| !n.is_empty() && !p.is_empty())
        .ok_or_else(|| Error::Config(format!("source {spec:?} must look like NAME=PATH[@THRESHOLD]")))?;
    let (path, threshold) = match rest.rsplit_once('@') {
        Some((p, t)) => match t.parse::<f64>() {
            Ok(t) => (p, Some(t)),
            Err(_) => (rest, None),
        },
        None => (rest, None),
    };
    let threshold = threshold
        .or(default_threshold)
        .ok_or_else(|| Error::Config(format!("source {name} needs a threshold (NAME=PATH@THRESHOLD or filter.threshold)")))?;
    Ok((name.to_string(), PathBuf::from(path), threshold))
}

fn default_manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".mixture.json");
    out.with_file_name(name)
}

pub fn mixture(cfg: &Config, a: MixtureArgs) -> Result<()> {
    let mut sources = Vec::new();
    for spec in &a.sources {
        let (name, path, theta) = parse_mixture_source(spec, cfg.filter.threshold)?;
        let corpus = load_corpus(&path, corpus_format(&path, None)?, None)?;
        sources.push(MixtureSource {
            name,
            corpus,
            threshold: FilterThreshold::new(theta)?,
            provenance: Some(path.display().to_string()),
        });
    }
    let targets = if a.targets.is_empty() {
        cfg.mixture.targets.clone()
    } else {
        a.targets.clone()
    };
    let targets: Vec<LangCode> = if targets.is_empty() {
        let mut langs: Vec<LangCode> = sources.iter().map(|s| s.corpus.lp.target.clone()).collect();
        langs.sort();
        langs.dedup();
        langs
    } else {
        targets.iter().map(|t| LangCode::new(t)).collect::<Result<_>>()?
    };
    let template = match a.template.as_ref().or(cfg.mixture.template.as_ref()) {
        Some(t) => PromptTemplate::new(t)?,
        None => PromptTemplate::default(),
    };
    let seed = a.seed.or(cfg.mixture.seed).unwrap_or(0);
    let mix = build_training_mixture(&sources, &template, &targets, seed)?;
    mix.write_jsonl(&a.out)?;
    let manifest = a.manifest.clone().unwrap_or_else(|| default_manifest_path(&a.out));
    let text = serde_json::to_string_pretty(&mix.manifest).expect("manifest serializes");
    write_output(Some(&manifest), &(text + "\n"))?;
    eprintln!("{} records written to {}", mix.manifest.total, a.out.display());
    Ok(())
}

fn external(precomputed: Option<PathBuf>, s: ScorerArgs) -> ExternalSource {
    ExternalSource {
        precomputed,
        scorer: s.scorer.map(|c| (c, s.scorer_args)),
    }
}

#[derive(Serialize)]
struct ScoreOutput<'a> {
    system: &'a str,
    metric: MetricId,
    lp: &'a LanguagePair,
    score: f64,
    n_segments: usize,
    provenance: &'a str,
}

pub fn score(cfg: &Config, exec: Execution, a: ScoreArgs) -> Result<()> {
    let sys = SystemOutput::load(&a.system, a.name.as_deref(), cfg.evaluation.strip_quotes)?;
    let scorer = Scorer::new(cfg, exec, external(a.precomputed, a.scorer));
    let scored = scorer.score(&sys, a.metric, &a.lp)?;
    if let Some(path) = &a.segments {
        let mut tsv = String::from("segment_id\tscore\n");
        for (i, id) in sys.ids().iter().enumerate() {
            let value = match &scored.segment_values {
                Some(s) => s.values[i],
                None => scored.statistics.score_indices(&[i])?,
            };
            writeln!(tsv, "{id}\t{value}").expect("write to string");
        }
        write_output(Some(path), &tsv)?;
    }
    let out = ScoreOutput {
        system: &sys.name,
        metric: a.metric,
        lp: &a.lp,
        score: scored.statistics.score()?,
        n_segments: sys.segments.len(),
        provenance: &scored.provenance,
    };
    write_output(None, &(serde_json::to_string_pretty(&out).expect("serializes") + "\n"))
}

fn bootstrap_config(cfg: &Config, a: &BootstrapArgs) -> Result<BootstrapConfig> {
    let b = BootstrapConfig {
        replicates: a.replicates.unwrap_or(cfg.bootstrap.replicates),
        confidence: a.confidence.unwrap_or(cfg.bootstrap.confidence),
        seed: a.seed.unwrap_or(cfg.bootstrap.seed),
    };
    b.validate()?;
    Ok(b)
}

#[derive(Serialize)]
struct CompareOutput<'a> {
    baseline: &'a str,
    candidate: &'a str,
    metric: MetricId,
    lp: &'a LanguagePair,
    baseline_score: f64,
    candidate_score: f64,
    delta: f64,
    ci_lo: f64,
    ci_hi: f64,
    significant: bool,
    replicates: usize,
    confidence: f64,
    seed: u64,
}

pub fn compare(cfg: &Config, exec: Execution, a: CompareArgs) -> Result<()> {
    let boot = bootstrap_config(cfg, &a.bootstrap)?;
    let base = SystemOutput::load(&a.baseline, None, cfg.evaluation.strip_quotes)?;
    let cand = SystemOutput::load(&a.candidate, None, cfg.evaluation.strip_quotes)?;
    base.check_paired(&cand)?;
    let scorer = Scorer::new(cfg, exec, external(None, a.scorer));
    let b = scorer.score(&base, a.metric, &a.lp)?.statistics;
    let c = scorer.score(&cand, a.metric, &a.lp)?.statistics;
    let r = paired_bootstrap_with(&b, &c, &boot, exec).map_err(|e| e.in_stage("bootstrap"))?;
    let out = CompareOutput {
        baseline: &base.name,
        candidate: &cand.name,
        metric: a.metric,
        lp: &a.lp,
        baseline_score: b.score()?,
        candidate_score: c.score()?,
        delta: r.delta,
        ci_lo: r.ci_lo,
        ci_hi: r.ci_hi,
        significant: r.significant,
        replicates: boot.replicates,
        confidence: boot.confidence,
        seed: boot.seed,
    };
    let text = match a.format.as_str() {
        "json" => serde_json::to_string_pretty(&out).expect("serializes") + "\n",
        "text" => format!(
            "{} {}: {} {:.4} -> {} {:.4}\ndelta {:+.4}, {:.0}% CI [{:.4}, {:.4}], {} (B={}, seed {})\n",
            out.metric,
            out.lp,
            out.baseline,
            out.baseline_score,
            out.candidate,
            out.candidate_score,
            out.delta,
            out.confidence * 100.0,
            out.ci_lo,
            out.ci_hi,
            if out.significant { "significant" } else { "not significant" },
            out.replicates,
            out.seed,
        ),
        other => return Err(Error::Config(format!("unknown compare format {other}; use text or json"))),
    };
    write_output(None, &text)
}

#[derive(Serialize)]
struct CorrelationRow<'a> {
    lp: &'a LanguagePair,
    metric: MetricId,
    rho: f64,
    p_rho: f64,
    tau: f64,
    p_tau: f64,
}

fn star(p: f64) -> &'static str {
    if p < 0.05 {
        "*"
    } else {
        ""
    }
}

fn render_correlations(blocks: &[(LanguagePair, Vec<MetricCorrelation>)], n_systems: usize, format: ReportFormat) -> String {
    let rows: Vec<CorrelationRow> = blocks
        .iter()
        .flat_map(|(lp, cs)| {
            cs.iter().map(move |c| CorrelationRow {
                lp,
                metric: c.metric,
                rho: c.result.rho,
                p_rho: c.result.p_rho,
                tau: c.result.tau,
                p_tau: c.result.p_tau,
            })
        })
        .collect();
    match format {
        ReportFormat::Json => serde_json::to_string_pretty(&rows).expect("serializes") + "\n",
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in &rows {
                w.serialize(r).expect("csv row");
            }
            String::from_utf8(w.into_inner().expect("csv flush")).expect("utf-8")
        }
        ReportFormat::Markdown => {
            let mut out = String::new();
            for (lp, cs) in blocks {
                writeln!(out, "{} (n = {n_systems} systems)\n", lp.arrow_label()).unwrap();
                out.push_str("| Metric | ρ | p(ρ) | τ | p(τ) |\n|---|---|---|---|---|\n");
                for c in cs {
                    let r = &c.result;
                    writeln!(
                        out,
                        "| {} | {:.4}{} | {:.4} | {:.4}{} | {:.4} |",
                        c.metric.label(),
                        r.rho,
                        star(r.p_rho),
                        r.p_rho,
                        r.tau,
                        star(r.p_tau),
                        r.p_tau
                    )
                    .unwrap();
                }
                out.push('\n');
            }
            out.push_str("* p < 0.05 (permutation test)\n");
            out
        }
    }
}

pub fn correlate(a: CorrelateArgs) -> Result<()> {
    let table: ScoreTable = match &a.fixture {
        Some(p) => load_score_fixture(p)?,
        None => published(),
    };
    let lps = match &a.lp {
        Some(lp) => vec![lp.clone()],
        None => table.language_pairs(),
    };
    let blocks = lps
        .into_iter()
        .map(|lp| system_correlation_matrix(&table, &lp).map(|c| (lp, c)))
        .collect::<Result<Vec<_>>>()?;
    write_output(None, &render_correlations(&blocks, table.systems().len(), a.format))
}

fn parse_report_pair(spec: &str) -> Result<(LanguagePair, PathBuf, PathBuf)> {
    let bad = || Error::Config(format!("pair {spec:?} must look like LP=BASELINE,CANDIDATE"));
    let (lp, files) = spec.split_once('=').ok_or_else(bad)?;
    let (b, c) = files.split_once(',').ok_or_else(bad)?;
    if b.is_empty() || c.is_empty() {
        return Err(bad());
    }
    Ok((lp.parse()?, PathBuf::from(b), PathBuf::from(c)))
}

pub fn report(cfg: &Config, exec: Execution, a: ReportArgs) -> Result<()> {
    let boot = bootstrap_config(cfg, &a.bootstrap)?;
    let metrics = if a.metrics.is_empty() {
        vec![MetricId::Bleu, MetricId::Chrf2, MetricId::Ter]
    } else {
        a.metrics.clone()
    };
    let scorer = Scorer::new(cfg, exec, external(None, a.scorer));
    let strip = cfg.evaluation.strip_quotes;
    let mut cells = Vec::new();
    let mut names: Option<(String, String)> = None;
    for spec in &a.pairs {
        let (lp, bpath, cpath) = parse_report_pair(spec)?;
        let base = SystemOutput::load(&bpath, a.baseline_name.as_deref(), strip)?;
        let cand = SystemOutput::load(&cpath, a.candidate_name.as_deref(), strip)?;
        base.check_paired(&cand)?;
        names.get_or_insert_with(|| (base.name.clone(), cand.name.clone()));
        for &metric in &metrics {
            let b = scorer.score(&base, metric, &lp)?.statistics;
            let c = scorer.score(&cand, metric, &lp)?.statistics;
            let r = paired_bootstrap_with(&b, &c, &boot, exec).map_err(|e| e.in_stage("bootstrap"))?;
            cells.push(ReportCell {
                lp: lp.clone(),
                metric,
                baseline: b.score()?,
                candidate: c.score()?,
                significance: Significance::Tested(r),
            });
        }
    }
    let (bname, cname) = names.expect("at least one pair");
    let report = SystemReport::from_cells(bname, cname, cells, &cfg.accuracy)?;
    write_output(a.out.as_deref(), &render_report(&report, a.format))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixture_source_specs() {
        let (n, p, t) = parse_mixture_source("nllb=data/a@b.jsonl@0.85", None).unwrap();
        assert_eq!((n.as_str(), p, t), ("nllb", PathBuf::from("data/a@b.jsonl"), 0.85));
        let (_, p, t) = parse_mixture_source("x=c.tsv", Some(0.8)).unwrap();
        assert_eq!((p, t), (PathBuf::from("c.tsv"), 0.8));
        assert!(parse_mixture_source("x=c.tsv", None).is_err());
        assert!(parse_mixture_source("=c.tsv@0.8", None).is_err());
    }

    #[test]
    fn report_pair_specs() {
        let (lp, b, c) = parse_report_pair("lb-fr=base.jsonl,cand.jsonl").unwrap();
        assert_eq!(lp.to_string(), "lb-fr");
        assert_eq!((b, c), (PathBuf::from("base.jsonl"), PathBuf::from("cand.jsonl")));
        assert!(parse_report_pair("lb-fr=base.jsonl").is_err());
        assert!(parse_report_pair("xx=a,b").is_err());
    }

    #[test]
    fn policy_names() {
        assert_eq!(parse_policy("nearest").unwrap(), AlignPolicy::Nearest);
        assert_eq!(parse_policy("greedy-one-to-one").unwrap(), AlignPolicy::GreedyOneToOne);
        assert!(parse_policy("hungarian").is_err());
    }
}
