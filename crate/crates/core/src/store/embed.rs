use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::StoreError;
use crate::gateway::http::{join_endpoint, JsonClient, RetryPolicy};
use crate::gateway::GatewayError;

pub const EMBEDDING_DIM: usize = 256;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Unit-length embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    /// Normalizes `components`; all-zero input is rejected.
    pub fn from_raw(components: Vec<f64>) -> Option<Self> {
        let norm = components.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return None;
        }
        Some(EmbeddingVector(components.into_iter().map(|c| c / norm).collect()))
    }

    pub fn basis(dim: usize, i: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        EmbeddingVector(v)
    }

    pub fn components(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Dot product of two unit vectors.
pub fn cosine_sim(a: &EmbeddingVector, b: &EmbeddingVector) -> f64 {
    a.0.iter().zip(&b.0).map(|(x, y)| x * y).sum()
}

pub trait EmbeddingProvider: Send + Sync {
    fn name(&self) -> String;

    fn embed(&self, text: &str) -> Result<EmbeddingVector, StoreError>;
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

/// Lowercased alphanumeric runs.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Deterministic bag-of-tokens embedder: token counts hashed into buckets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashedEmbedder {
    dim: usize,
}

impl Default for HashedEmbedder {
    fn default() -> Self {
        HashedEmbedder { dim: EMBEDDING_DIM }
    }
}

impl HashedEmbedder {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        HashedEmbedder { dim }
    }
}

impl EmbeddingProvider for HashedEmbedder {
    fn name(&self) -> String {
        format!("hashed-bow-{}", self.dim)
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, StoreError> {
        if text.trim().is_empty() {
            return Err(StoreError::EmptyText);
        }
        let mut counts = vec![0.0; self.dim];
        for token in tokenize(text) {
            counts[(fnv1a64(token.as_bytes()) % self.dim as u64) as usize] += 1.0;
        }
        Ok(EmbeddingVector::from_raw(counts).unwrap_or_else(|| EmbeddingVector::basis(self.dim, 0)))
    }
}

/// Calls an OpenAI-compatible `/v1/embeddings` endpoint.
#[derive(Debug)]
pub struct RemoteEmbedder {
    url: String,
    model: String,
    client: JsonClient,
}

impl RemoteEmbedder {
    pub fn new(
        endpoint: &str,
        model: &str,
        api_key: Option<String>,
        timeout: Duration,
        retry: RetryPolicy,
    ) -> Result<Self, GatewayError> {
        Ok(RemoteEmbedder {
            url: join_endpoint(endpoint, "/v1/embeddings"),
            model: model.to_string(),
            client: JsonClient::new(timeout, retry, 4, api_key)?,
        })
    }
}

impl EmbeddingProvider for RemoteEmbedder {
    fn name(&self) -> String {
        format!("remote:{}", self.model)
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, StoreError> {
        if text.trim().is_empty() {
            return Err(StoreError::EmptyText);
        }
        let resp = self
            .client
            .post(&self.url, &json!({ "model": self.model, "input": text }))?;
        let raw: Vec<f64> = resp
            .pointer("/data/0/embedding")
            .and_then(|v| serde_json::from_value(v.clone()).ok())
            .ok_or_else(|| GatewayError::Protocol("missing data[0].embedding".into()))?;
        EmbeddingVector::from_raw(raw).ok_or(StoreError::ZeroEmbedding)
    }
}
