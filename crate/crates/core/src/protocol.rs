//! NDJSON request/response protocol spoken with external scorer processes.
//!
//! Framing: UTF-8, one JSON object per LF-terminated line, no pretty
//! printing. Requests are answered in order and echo the request id.
//!
//! ```text
//! {"id":"1","op":"info"}
//! {"id":"1","ok":true,"info":{"dims":64,"metrics":["bleurt20"],"models":{}}}
//! {"id":"2","op":"embed","texts":["Moien"]}
//! {"id":"2","ok":true,"vectors":[[0.1, ...]]}
//! {"id":"3","op":"score","metric":"bleurt20","srcs":[..],"hyps":[..],"refs":[..]}
//! {"id":"3","ok":true,"scores":[0.71]}
//! {"id":"4","ok":false,"error":"unsupported metric"}
//! ```

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::MetricId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Op {
    Embed,
    Score,
    Info,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorerRequest {
    pub id: String,
    pub op: Op,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub texts: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<MetricId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub srcs: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hyps: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refs: Option<Vec<String>>,
}

impl ScorerRequest {
    pub fn info(id: impl Into<String>) -> Self {
        ScorerRequest {
            id: id.into(),
            op: Op::Info,
            texts: None,
            metric: None,
            srcs: None,
            hyps: None,
            refs: None,
        }
    }

    pub fn embed(id: impl Into<String>, texts: Vec<String>) -> Self {
        ScorerRequest {
            texts: Some(texts),
            op: Op::Embed,
            ..ScorerRequest::info(id)
        }
    }

    pub fn score(
        id: impl Into<String>,
        metric: MetricId,
        srcs: Option<Vec<String>>,
        hyps: Vec<String>,
        refs: Option<Vec<String>>,
    ) -> Self {
        ScorerRequest {
            op: Op::Score,
            metric: Some(metric),
            srcs,
            hyps: Some(hyps),
            refs,
            ..ScorerRequest::info(id)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ScorerInfo {
    #[serde(default)]
    pub dims: Option<usize>,
    #[serde(default)]
    pub metrics: Vec<MetricId>,
    #[serde(default)]
    pub models: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorerResponse {
    pub id: String,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vectors: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub info: Option<ScorerInfo>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ScorerResponse {
    pub fn failure(id: impl Into<String>, error: impl Into<String>) -> Self {
        ScorerResponse {
            id: id.into(),
            ok: false,
            vectors: None,
            scores: None,
            info: None,
            error: Some(error.into()),
        }
    }
}

/// A child process speaking the protocol over stdio. Requests are strictly
/// sequential; wrap in a mutex to share.
pub struct ProtocolClient {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
    next_id: u64,
    program: String,
}

impl ProtocolClient {
    pub fn spawn(program: &str, args: &[String]) -> Result<Self> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::Protocol {
                request_id: "-".into(),
                reason: format!("cannot start {program}: {e}"),
            })?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(ProtocolClient {
            child,
            stdin,
            stdout,
            next_id: 1,
            program: program.to_string(),
        })
    }

    pub fn program(&self) -> &str {
        &self.program
    }

    pub fn next_request_id(&mut self) -> String {
        let id = self.next_id.to_string();
        self.next_id += 1;
        id
    }

    /// Sends one request and waits for its response. Fails on I/O errors,
    /// id mismatch and `ok: false` responses.
    pub fn call(&mut self, request: &ScorerRequest) -> Result<ScorerResponse> {
        let proto_err = |reason: String| Error::Protocol {
            request_id: request.id.clone(),
            reason,
        };
        let mut line = serde_json::to_string(request).expect("request serializes");
        line.push('\n');
        self.stdin
            .write_all(line.as_bytes())
            .and_then(|_| self.stdin.flush())
            .map_err(|e| proto_err(format!("write failed: {e}")))?;

        let mut reply = String::new();
        let n = self
            .stdout
            .read_line(&mut reply)
            .map_err(|e| proto_err(format!("read failed: {e}")))?;
        if n == 0 {
            return Err(proto_err("scorer closed its output".into()));
        }
        let response: ScorerResponse =
            serde_json::from_str(reply.trim_end()).map_err(|e| proto_err(format!("bad response: {e}")))?;
        if response.id != request.id {
            return Err(proto_err(format!("response id {} does not match", response.id)));
        }
        if !response.ok {
            return Err(proto_err(response.error.unwrap_or_else(|| "unspecified error".into())));
        }
        Ok(response)
    }

    pub fn info(&mut self) -> Result<ScorerInfo> {
        let id = self.next_request_id();
        let resp = self.call(&ScorerRequest::info(id.clone()))?;
        resp.info.ok_or(Error::Protocol {
            request_id: id,
            reason: "info payload missing".into(),
        })
    }
}

impl Drop for ProtocolClient {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_wire_shape() {
        let req = ScorerRequest::embed("7", vec!["Moien".into()]);
        assert_eq!(
            serde_json::to_string(&req).unwrap(),
            r#"{"id":"7","op":"embed","texts":["Moien"]}"#
        );
        let req = ScorerRequest::score("8", MetricId::XcometXl, None, vec!["h".into()], Some(vec!["r".into()]));
        assert_eq!(
            serde_json::to_string(&req).unwrap(),
            r#"{"id":"8","op":"score","metric":"xcomet_xl","hyps":["h"],"refs":["r"]}"#
        );
    }

    #[test]
    fn failure_response_round_trips() {
        let resp = ScorerResponse::failure("3", "boom");
        let text = serde_json::to_string(&resp).unwrap();
        assert_eq!(text, r#"{"id":"3","ok":false,"error":"boom"}"#);
        assert_eq!(serde_json::from_str::<ScorerResponse>(&text).unwrap(), resp);
    }

    #[test]
    fn missing_program_is_protocol_error() {
        let err = ProtocolClient::spawn("/nonexistent/scorer", &[]).err().unwrap();
        assert!(matches!(err, Error::Protocol { .. }));
    }
}
