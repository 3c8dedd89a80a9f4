//! Sentence-embedding providers and cosine similarity.
//!
//! Three providers are available: a deterministic mock (hash of the text
//! expanded to a unit vector), a precomputed JSONL table
//! (`{"text": ..., "vector": [...]}` per line), and a subprocess speaking the
//! NDJSON scorer protocol.
//!
//! Mock scheme, shared with the protocol stub so both sides agree bit for bit:
//!
//! ```text
//! h      = fnv1a64(utf8(text)) XOR seed
//! x_i    = splitmix64(h + (i + 1) * 0x9E3779B97F4A7C15)      (wrapping u64)
//! raw_i  = ((x_i >> 11) as i64 - 2^52) / 2^52                 (in [-1, 1))
//! v      = raw / sqrt(sum_i raw_i^2)                          (summed in index order)
//! ```

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::sync::Mutex;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::protocol::{ProtocolClient, ScorerRequest};

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("embedding vector"));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(EmbeddingVector(values))
    }

    pub fn dims(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl std::ops::Neg for &EmbeddingVector {
    type Output = EmbeddingVector;
    fn neg(self) -> EmbeddingVector {
        EmbeddingVector(self.0.iter().map(|v| -v).collect())
    }
}

/// dot(u, v) / (|u| |v|), clamped to [-1, 1].
pub fn cosine(u: &EmbeddingVector, v: &EmbeddingVector) -> Result<f64> {
    if u.dims() != v.dims() {
        return Err(Error::DimensionMismatch(u.dims(), v.dims()));
    }
    let (nu, nv) = (u.norm(), v.norm());
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let dot: f64 = u.0.iter().zip(&v.0).map(|(a, b)| a * b).sum();
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProviderKind {
    MockDeterministic,
    PrecomputedFile,
    SubprocessProtocol,
}

impl ProviderKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProviderKind::MockDeterministic => "mock_deterministic",
            ProviderKind::PrecomputedFile => "precomputed_file",
            ProviderKind::SubprocessProtocol => "subprocess_protocol",
        }
    }
}

/// Same text, same vector, for the lifetime of a provider instance.
pub trait EmbeddingProvider: Send + Sync {
    fn kind(&self) -> ProviderKind;
    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>>;
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for Box<P> {
    fn kind(&self) -> ProviderKind {
        (**self).kind()
    }
    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>> {
        (**self).embed(texts)
    }
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// The hash-to-unit-vector scheme described in the module docs.
pub fn mock_vector(text: &str, dims: usize, seed: u64) -> Vec<f64> {
    let h = fnv1a64(text.as_bytes()) ^ seed;
    let scale = (1u64 << 52) as f64;
    let raw: Vec<f64> = (0..dims as u64)
        .map(|i| {
            let x = splitmix64(h.wrapping_add((i + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)));
            ((x >> 11) as i64 - (1i64 << 52)) as f64 / scale
        })
        .collect();
    let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
    raw.into_iter().map(|v| v / norm).collect()
}

#[derive(Debug, Clone)]
pub struct MockProvider {
    pub dims: usize,
    pub seed: u64,
}

impl MockProvider {
    pub fn new(dims: usize, seed: u64) -> Self {
        assert!(dims > 0, "mock provider needs at least one dimension");
        MockProvider { dims, seed }
    }
}

impl Default for MockProvider {
    fn default() -> Self {
        MockProvider::new(64, 0)
    }
}

impl EmbeddingProvider for MockProvider {
    fn kind(&self) -> ProviderKind {
        ProviderKind::MockDeterministic
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>> {
        Ok(texts
            .iter()
            .map(|t| EmbeddingVector(mock_vector(t, self.dims, self.seed)))
            .collect())
    }
}

#[derive(Debug, Clone, Default)]
pub struct PrecomputedProvider {
    vectors: HashMap<String, EmbeddingVector>,
}

#[derive(Deserialize)]
struct PrecomputedRecord {
    text: String,
    vector: Vec<f64>,
}

impl PrecomputedProvider {
    pub fn from_map(vectors: HashMap<String, EmbeddingVector>) -> Result<Self> {
        let mut dims = None;
        for v in vectors.values() {
            match dims {
                None => dims = Some(v.dims()),
                Some(d) if d != v.dims() => return Err(Error::DimensionMismatch(d, v.dims())),
                _ => {}
            }
        }
        Ok(PrecomputedProvider { vectors })
    }

    pub fn insert(&mut self, text: impl Into<String>, vector: EmbeddingVector) {
        self.vectors.insert(text.into(), vector);
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut vectors = HashMap::new();
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let malformed = |reason: String| Error::MalformedRecord { line: idx + 1, reason };
            let rec: PrecomputedRecord = serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?;
            let v = EmbeddingVector::new(rec.vector).map_err(|e| malformed(e.to_string()))?;
            vectors.insert(rec.text, v);
        }
        PrecomputedProvider::from_map(vectors)
    }
}

impl EmbeddingProvider for PrecomputedProvider {
    fn kind(&self) -> ProviderKind {
        ProviderKind::PrecomputedFile
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>> {
        texts
            .iter()
            .enumerate()
            .map(|(index, t)| {
                self.vectors.get(t).cloned().ok_or_else(|| Error::Provider {
                    kind: ProviderKind::PrecomputedFile.as_str(),
                    index,
                    reason: format!("no vector for text {t:?}"),
                })
            })
            .collect()
    }
}

/// Embeds over the NDJSON protocol. Single-flight: requests are serialized.
pub struct SubprocessProvider {
    client: Mutex<ProtocolClient>,
    batch_size: usize,
}

impl SubprocessProvider {
    pub fn spawn(program: &str, args: &[String]) -> Result<Self> {
        Ok(SubprocessProvider {
            client: Mutex::new(ProtocolClient::spawn(program, args)?),
            batch_size: 64,
        })
    }

    pub fn with_batch_size(mut self, batch_size: usize) -> Self {
        self.batch_size = batch_size.max(1);
        self
    }

    pub fn info(&self) -> Result<crate::protocol::ScorerInfo> {
        self.client.lock().expect("client lock").info()
    }
}

impl EmbeddingProvider for SubprocessProvider {
    fn kind(&self) -> ProviderKind {
        ProviderKind::SubprocessProtocol
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>> {
        let kind = ProviderKind::SubprocessProtocol.as_str();
        let mut client = self.client.lock().expect("client lock");
        let mut out = Vec::with_capacity(texts.len());
        for (batch_no, batch) in texts.chunks(self.batch_size).enumerate() {
            let offset = batch_no * self.batch_size;
            let id = client.next_request_id();
            let resp = client
                .call(&ScorerRequest::embed(id, batch.to_vec()))
                .map_err(|e| Error::Provider {
                    kind,
                    index: offset,
                    reason: e.to_string(),
                })?;
            let vectors = resp.vectors.unwrap_or_default();
            if vectors.len() != batch.len() {
                return Err(Error::Provider {
                    kind,
                    index: offset + vectors.len().min(batch.len()),
                    reason: format!("expected {} vectors, got {}", batch.len(), vectors.len()),
                });
            }
            for (i, v) in vectors.into_iter().enumerate() {
                let v = EmbeddingVector::new(v).map_err(|e| Error::Provider {
                    kind,
                    index: offset + i,
                    reason: e.to_string(),
                })?;
                if let Some(first) = out.first().map(EmbeddingVector::dims) {
                    if first != v.dims() {
                        return Err(Error::Provider {
                            kind,
                            index: offset + i,
                            reason: format!("dimension {} differs from {first}", v.dims()),
                        });
                    }
                }
                out.push(v);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(values: &[f64]) -> EmbeddingVector {
        EmbeddingVector::new(values.to_vec()).unwrap()
    }

    #[test]
    fn cosine_basics() {
        let u = v(&[0.3, -1.2, 4.0]);
        assert!((cosine(&u, &u).unwrap() - 1.0).abs() < 1e-12);
        assert!((cosine(&u, &-&u).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(cosine(&v(&[1.0, 0.0]), &v(&[0.0, 1.0])).unwrap(), 0.0);
        assert!(matches!(cosine(&v(&[0.0, 0.0]), &u), Err(Error::DimensionMismatch(2, 3))));
        assert!(matches!(cosine(&v(&[0.0, 0.0]), &v(&[1.0, 0.0])), Err(Error::ZeroNorm)));
    }

    #[test]
    fn vectors_must_be_finite() {
        assert!(matches!(EmbeddingVector::new(vec![1.0, f64::NAN]), Err(Error::NonFinite(1))));
        assert!(EmbeddingVector::new(vec![]).is_err());
    }

    #[test]
    fn mock_is_deterministic_unit_length() {
        let p = MockProvider::new(32, 7);
        let texts = vec!["Moien".to_string(), "Moien".to_string(), "Äddi".to_string()];
        let out = p.embed(&texts).unwrap();
        assert_eq!(out[0], out[1]);
        assert_ne!(out[0], out[2]);
        assert!((out[2].norm() - 1.0).abs() < 1e-12);
        assert_eq!(out[0].dims(), 32);
        let other_seed = MockProvider::new(32, 8).embed(&texts[..1]).unwrap();
        assert_ne!(other_seed[0], out[0]);
    }

    #[test]
    fn fnv_reference_values() {
        // published FNV-1a 64 test vectors
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn precomputed_missing_text_is_named() {
        let mut p = PrecomputedProvider::default();
        p.insert("Moien", v(&[1.0, 0.0]));
        let err = p.embed(&["Moien".into(), "Äddi".into()]).unwrap_err();
        match err {
            Error::Provider { kind, index, reason } => {
                assert_eq!(kind, "precomputed_file");
                assert_eq!(index, 1);
                assert!(reason.contains("Äddi"));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn precomputed_file_loads() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.jsonl");
        fs::write(&path, "{\"text\":\"a\",\"vector\":[1,0]}\n{\"text\":\"b\",\"vector\":[0,2]}\n").unwrap();
        let p = PrecomputedProvider::load(&path).unwrap();
        let out = p.embed(&["b".into()]).unwrap();
        assert_eq!(out[0].values(), &[0.0, 2.0]);
        fs::write(&path, "{\"text\":\"a\",\"vector\":[1,0]}\n{\"text\":\"b\",\"vector\":[0,2,3]}\n").unwrap();
        assert!(PrecomputedProvider::load(&path).is_err());
    }
}
