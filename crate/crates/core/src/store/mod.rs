//! Demonstration library with embedding-based top-k retrieval and
//! append/append-delete updates.

mod embed;
mod library;

pub use embed::{cosine_sim, fnv1a64, tokenize, EmbeddingProvider, EmbeddingVector, HashedEmbedder, RemoteEmbedder, EMBEDDING_DIM};
pub use library::{DemoDraft, DemoLibrary, DemoSource, Demonstration, UpsertMode, UpsertOutcome};

use std::sync::Arc;

use crate::gateway::GatewayError;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("text to embed is empty")]
    EmptyText,
    #[error("embedding provider returned an all-zero vector")]
    ZeroEmbedding,
    #[error("k must be at least 1")]
    InvalidK,
    #[error("invalid demonstration: {0}")]
    InvalidDemo(String),
    #[error("embedding provider failed: {0}")]
    Provider(#[from] GatewayError),
    #[error("cannot access {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed library file: {0}")]
    Malformed(String),
    #[error("bad library record #{index}{}: {reason}", id.map(|i| format!(" (id {i})")).unwrap_or_default())]
    BadRecord { index: usize, id: Option<u64>, reason: String },
}

const SEED_LIBRARY: &str = include_str!("../../assets/seed_library.json");

/// The bundled seed demonstrations.
pub fn seed_library(provider: Arc<dyn EmbeddingProvider>) -> DemoLibrary {
    DemoLibrary::from_json(SEED_LIBRARY, provider).expect("bundled seed library is valid")
}
