//! Deterministic stand-in for an external scorer, speaking the NDJSON
//! protocol on stdio.
//!
//! `embed` returns the mock hash vectors; `score` returns
//! `chars(hyp) / 100` for every metric except the QE score.
//!
//! Usage: `luxkit-stub-scorer [--dims N] [--seed S]`

use std::collections::BTreeMap;
use std::io::{self, BufRead, Write};
use std::process::ExitCode;

use luxkit::embed::mock_vector;
use luxkit::metrics::MetricId;
use luxkit::protocol::{Op, ScorerInfo, ScorerRequest, ScorerResponse};

const METRICS: [MetricId; 3] = [MetricId::Bertscore, MetricId::Bleurt20, MetricId::XcometXl];

struct Options {
    dims: usize,
    seed: u64,
}

fn parse_args() -> Result<Options, String> {
    let mut opts = Options { dims: 64, seed: 0 };
    let mut args = std::env::args().skip(1);
    while let Some(flag) = args.next() {
        let mut value = || args.next().ok_or_else(|| format!("{flag} needs a value"));
        match flag.as_str() {
            "--dims" => opts.dims = value()?.parse().map_err(|e| format!("--dims: {e}"))?,
            "--seed" => opts.seed = value()?.parse().map_err(|e| format!("--seed: {e}"))?,
            other => return Err(format!("unknown argument {other}")),
        }
    }
    if opts.dims == 0 {
        return Err("--dims must be positive".into());
    }
    Ok(opts)
}

fn answer(req: ScorerRequest, opts: &Options) -> ScorerResponse {
    let ok = |id: String| ScorerResponse {
        id,
        ok: true,
        vectors: None,
        scores: None,
        info: None,
        error: None,
    };
    match req.op {
        Op::Info => ScorerResponse {
            info: Some(ScorerInfo {
                dims: Some(opts.dims),
                metrics: METRICS.to_vec(),
                models: METRICS.iter().map(|m| (m.as_str().to_string(), "stub-length".to_string())).collect::<BTreeMap<_, _>>(),
            }),
            ..ok(req.id)
        },
        Op::Embed => match req.texts {
            Some(texts) => ScorerResponse {
                vectors: Some(texts.iter().map(|t| mock_vector(t, opts.dims, opts.seed)).collect()),
                ..ok(req.id)
            },
            None => ScorerResponse::failure(req.id, "embed needs texts"),
        },
        Op::Score => {
            let Some(metric) = req.metric.filter(|m| METRICS.contains(m)) else {
                return ScorerResponse::failure(req.id, "unsupported metric");
            };
            let Some(hyps) = req.hyps else {
                return ScorerResponse::failure(req.id, "score needs hyps");
            };
            let n = hyps.len();
            let needs_src = metric == MetricId::XcometXl;
            if req.refs.as_ref().is_none_or(|r| r.len() != n) {
                return ScorerResponse::failure(req.id, "refs missing or misaligned");
            }
            if needs_src && req.srcs.as_ref().is_none_or(|s| s.len() != n) {
                return ScorerResponse::failure(req.id, "srcs missing or misaligned");
            }
            ScorerResponse {
                scores: Some(hyps.iter().map(|h| h.chars().count() as f64 / 100.0).collect()),
                ..ok(req.id)
            }
        }
    }
}

/// Pulls the id out of a request that failed to parse, if there is one.
fn salvage_id(line: &str) -> String {
    serde_json::from_str::<serde_json::Value>(line)
        .ok()
        .and_then(|v| v.get("id").and_then(|id| id.as_str().map(str::to_string)))
        .unwrap_or_default()
}

fn main() -> ExitCode {
    let opts = match parse_args() {
        Ok(o) => o,
        Err(e) => {
            eprintln!("luxkit-stub-scorer: {e}");
            return ExitCode::from(2);
        }
    };
    let stdin = io::stdin();
    let mut stdout = io::stdout().lock();
    for line in stdin.lock().lines() {
        let Ok(line) = line else { break };
        if line.trim().is_empty() {
            continue;
        }
        let resp = match serde_json::from_str::<ScorerRequest>(&line) {
            Ok(req) => answer(req, &opts),
            Err(e) => ScorerResponse::failure(salvage_id(&line), format!("malformed request: {e}")),
        };
        let mut out = serde_json::to_string(&resp).expect("response serializes");
        out.push('\n');
        if stdout.write_all(out.as_bytes()).and_then(|_| stdout.flush()).is_err() {
            break;
        }
    }
    ExitCode::SUCCESS
}
