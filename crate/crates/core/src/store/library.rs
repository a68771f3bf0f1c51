use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::embed::{cosine_sim, EmbeddingProvider, EmbeddingVector};
use super::StoreError;
use crate::lang::parse;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DemoSource {
    Seed,
    Learned,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Demonstration {
    pub id: u64,
    pub task_description: String,
    pub thought: String,
    pub examples: String,
    pub source: DemoSource,
}

/// A demonstration before it has been assigned an id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemoDraft {
    pub task_description: String,
    pub thought: String,
    pub examples: String,
    pub source: DemoSource,
}

impl DemoDraft {
    pub fn validate(&self) -> Result<(), String> {
        for (field, text) in [
            ("task_description", &self.task_description),
            ("thought", &self.thought),
            ("examples", &self.examples),
        ] {
            if text.trim().is_empty() {
                return Err(format!("{field} is empty"));
            }
        }
        parse(&self.examples).map_err(|d| format!("examples do not parse: {d}"))?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpsertMode {
    Append,
    AppendDelete,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UpsertOutcome {
    pub id: u64,
    pub removed: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct LibraryFile {
    version: u32,
    demos: Vec<serde_json::Value>,
}

/// Ordered demonstrations with a derived embedding cache keyed by id.
#[derive(Clone)]
pub struct DemoLibrary {
    demos: Vec<Demonstration>,
    cache: HashMap<u64, EmbeddingVector>,
    provider: Arc<dyn EmbeddingProvider>,
    next_id: u64,
}

impl std::fmt::Debug for DemoLibrary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DemoLibrary")
            .field("provider", &self.provider.name())
            .field("demos", &self.demos)
            .finish()
    }
}

impl DemoLibrary {
    pub fn new(provider: Arc<dyn EmbeddingProvider>) -> Self {
        DemoLibrary {
            demos: Vec::new(),
            cache: HashMap::new(),
            provider,
            next_id: 1,
        }
    }

    /// Builds a library from already-numbered demonstrations.
    pub fn from_demos(provider: Arc<dyn EmbeddingProvider>, demos: Vec<Demonstration>) -> Result<Self, StoreError> {
        let mut lib = DemoLibrary::new(provider);
        for (index, demo) in demos.into_iter().enumerate() {
            let bad = |reason: String| StoreError::BadRecord {
                index,
                id: Some(demo.id),
                reason,
            };
            if lib.cache.contains_key(&demo.id) {
                return Err(bad("duplicate id".into()));
            }
            draft_of(&demo).validate().map_err(bad)?;
            let key = lib.provider.embed(&demo.task_description)?;
            lib.cache.insert(demo.id, key);
            lib.next_id = lib.next_id.max(demo.id + 1);
            lib.demos.push(demo);
        }
        Ok(lib)
    }

    pub fn provider(&self) -> &Arc<dyn EmbeddingProvider> {
        &self.provider
    }

    pub fn demos(&self) -> &[Demonstration] {
        &self.demos
    }

    pub fn len(&self) -> usize {
        self.demos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.demos.is_empty()
    }

    pub fn get(&self, id: u64) -> Option<&Demonstration> {
        self.demos.iter().find(|d| d.id == id)
    }

    pub fn embedding(&self, id: u64) -> Option<&EmbeddingVector> {
        self.cache.get(&id)
    }

    /// The `min(k, n)` most similar demonstrations, best first; equal scores
    /// keep the older (smaller) id first.
    pub fn retrieve_top_k(&self, query: &str, k: usize) -> Result<Vec<&Demonstration>, StoreError> {
        if k == 0 {
            return Err(StoreError::InvalidK);
        }
        if self.demos.is_empty() {
            return Ok(Vec::new());
        }
        let q = self.provider.embed(query)?;
        let mut scored: Vec<(f64, &Demonstration)> = self
            .demos
            .iter()
            .map(|d| (cosine_sim(&q, &self.cache[&d.id]), d))
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.id.cmp(&b.1.id)));
        Ok(scored.into_iter().take(k).map(|(_, d)| d).collect())
    }

    /// Inserts `draft` with a fresh id. In `AppendDelete` mode every existing
    /// demo whose description similarity reaches `theta_dup` is dropped first.
    pub fn upsert(&mut self, draft: DemoDraft, theta_dup: f64, mode: UpsertMode) -> Result<UpsertOutcome, StoreError> {
        draft.validate().map_err(StoreError::InvalidDemo)?;
        let key = self.provider.embed(&draft.task_description)?;
        let mut removed = Vec::new();
        if mode == UpsertMode::AppendDelete {
            let cache = &self.cache;
            self.demos.retain(|d| {
                let dup = cosine_sim(&key, &cache[&d.id]) >= theta_dup;
                if dup {
                    removed.push(d.id);
                }
                !dup
            });
            for id in &removed {
                self.cache.remove(id);
            }
        }
        let id = self.next_id;
        self.next_id += 1;
        self.cache.insert(id, key);
        self.demos.push(Demonstration {
            id,
            task_description: draft.task_description,
            thought: draft.thought,
            examples: draft.examples,
            source: draft.source,
        });
        Ok(UpsertOutcome { id, removed })
    }

    pub fn to_json(&self) -> String {
        let file = LibraryFile {
            version: 1,
            demos: self
                .demos
                .iter()
                .map(|d| serde_json::to_value(d).expect("demo serializes"))
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("library serializes")
    }

    pub fn from_json(text: &str, provider: Arc<dyn EmbeddingProvider>) -> Result<Self, StoreError> {
        let file: LibraryFile = serde_json::from_str(text).map_err(|e| StoreError::Malformed(e.to_string()))?;
        if file.version != 1 {
            return Err(StoreError::Malformed(format!("unsupported version {}", file.version)));
        }
        let mut demos = Vec::with_capacity(file.demos.len());
        for (index, raw) in file.demos.into_iter().enumerate() {
            let id = raw.get("id").and_then(serde_json::Value::as_u64);
            let demo: Demonstration = serde_json::from_value(raw).map_err(|e| StoreError::BadRecord {
                index,
                id,
                reason: e.to_string(),
            })?;
            demos.push(demo);
        }
        DemoLibrary::from_demos(provider, demos)
    }

    pub fn save(&self, path: &Path) -> Result<(), StoreError> {
        std::fs::write(path, self.to_json()).map_err(|source| StoreError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path, provider: Arc<dyn EmbeddingProvider>) -> Result<Self, StoreError> {
        let text = std::fs::read_to_string(path).map_err(|source| StoreError::Io {
            path: path.display().to_string(),
            source,
        })?;
        DemoLibrary::from_json(&text, provider)
    }

    /// SHA-256 over the demonstrations (ids included, cache excluded).
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(&self.demos).expect("demos serialize");
        hex::encode(Sha256::digest(bytes))
    }
}

fn draft_of(d: &Demonstration) -> DemoDraft {
    DemoDraft {
        task_description: d.task_description.clone(),
        thought: d.thought.clone(),
        examples: d.examples.clone(),
        source: d.source,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::{HashedEmbedder, EMBEDDING_DIM};

    fn provider() -> Arc<dyn EmbeddingProvider> {
        Arc::new(HashedEmbedder::default())
    }

    fn draft(desc: &str) -> DemoDraft {
        DemoDraft {
            task_description: desc.into(),
            thought: "do it".into(),
            examples: "pick(\"red_block\")".into(),
            source: DemoSource::Seed,
        }
    }

    fn library(descs: &[&str]) -> DemoLibrary {
        let mut lib = DemoLibrary::new(provider());
        for d in descs {
            lib.upsert(draft(d), 0.9, UpsertMode::Append).unwrap();
        }
        lib
    }

    #[test]
    fn retrieves_the_closer_demo() {
        let lib = library(&["stack two blocks", "pour water into cup"]);
        let top = lib.retrieve_top_k("stack the blocks", 1).unwrap();
        assert_eq!(top[0].task_description, "stack two blocks");
        assert_eq!(lib.retrieve_top_k("stack the blocks", 10).unwrap().len(), 2);
    }

    #[test]
    fn ties_prefer_older_ids() {
        let lib = library(&["move left", "stack blocks", "stack blocks"]);
        let ids: Vec<u64> = lib.retrieve_top_k("stack blocks", 2).unwrap().iter().map(|d| d.id).collect();
        assert_eq!(ids, vec![2, 3]);
    }

    #[test]
    fn empty_library_and_zero_k() {
        let lib = DemoLibrary::new(provider());
        assert!(lib.retrieve_top_k("anything", 3).unwrap().is_empty());
        assert!(matches!(lib.retrieve_top_k("anything", 0), Err(StoreError::InvalidK)));
    }

    #[test]
    fn append_delete_replaces_near_duplicates() {
        let old = "stack the green block on the yellow block";
        let new = "stack the green block onto the yellow block";
        let e = HashedEmbedder::new(EMBEDDING_DIM);
        let sim = cosine_sim(&e.embed(old).unwrap(), &e.embed(new).unwrap());
        assert!(sim >= 0.9, "similarity {sim}");

        let mut lib = library(&[old, "pour water into cup"]);
        let out = lib.upsert(draft(new), 0.9, UpsertMode::AppendDelete).unwrap();
        assert_eq!(out.removed, vec![1]);
        assert_eq!(lib.len(), 2);

        let mut lib = library(&[old, "pour water into cup"]);
        lib.upsert(draft(new), 0.9, UpsertMode::Append).unwrap();
        assert_eq!(lib.len(), 3);

        let mut lib = library(&[old]);
        let out = lib.upsert(draft("move the gripper up"), 0.9, UpsertMode::AppendDelete).unwrap();
        assert!(out.removed.is_empty());
        assert_eq!(lib.len(), 2);
    }

    #[test]
    fn dropping_articles_is_not_a_near_duplicate() {
        // Token counts {the:2, block:2, stack, green, on, yellow} against
        // {block:2, stack, green, on, yellow}: cosine = 8 / sqrt(12 * 8).
        let old = "stack the green block on the yellow block";
        let new = "stack green block on yellow block";
        let e = HashedEmbedder::new(EMBEDDING_DIM);
        let sim = cosine_sim(&e.embed(old).unwrap(), &e.embed(new).unwrap());
        assert!((sim - 8.0 / 96f64.sqrt()).abs() < 1e-12, "similarity {sim}");

        let mut lib = library(&[old]);
        assert!(lib.upsert(draft(new), 0.9, UpsertMode::AppendDelete).unwrap().removed.is_empty());
        let out = lib.upsert(draft(new), 0.8, UpsertMode::AppendDelete).unwrap();
        assert_eq!(out.removed.len(), 2);
    }

    #[test]
    fn ids_stay_monotonic_after_deletion() {
        let mut lib = library(&["a b c"]);
        let out = lib.upsert(draft("a b c"), 0.9, UpsertMode::AppendDelete).unwrap();
        assert_eq!(out.id, 2);
        assert_eq!(lib.upsert(draft("x y"), 0.9, UpsertMode::Append).unwrap().id, 3);
    }

    #[test]
    fn invalid_demos_rejected() {
        let mut lib = DemoLibrary::new(provider());
        let mut d = draft("x");
        d.thought = " ".into();
        assert!(matches!(lib.upsert(d, 0.9, UpsertMode::Append), Err(StoreError::InvalidDemo(_))));
        let mut d = draft("x");
        d.examples = "pick(\"a\"".into();
        assert!(matches!(lib.upsert(d, 0.9, UpsertMode::Append), Err(StoreError::InvalidDemo(_))));
    }

    #[test]
    fn json_round_trip_and_bad_records() {
        let lib = library(&["stack two blocks", "pour water into cup"]);
        let back = DemoLibrary::from_json(&lib.to_json(), provider()).unwrap();
        assert_eq!(back.demos(), lib.demos());
        assert_eq!(back.digest(), lib.digest());

        let other = DemoLibrary::from_json(&lib.to_json(), Arc::new(HashedEmbedder::new(16))).unwrap();
        assert_eq!(other.demos(), lib.demos());
        assert_ne!(other.embedding(1), lib.embedding(1));

        let text = lib.to_json();
        assert!(DemoLibrary::from_json(&text[..text.len() / 2], provider()).is_err());

        let bad = r#"{"version":1,"demos":[
            {"id":1,"task_description":"a","thought":"b","examples":"pick(\"x\")","source":"seed"},
            {"id":7,"task_description":"a","thought":"b","source":"seed"}]}"#;
        match DemoLibrary::from_json(bad, provider()) {
            Err(StoreError::BadRecord { index, id, .. }) => assert_eq!((index, id), (1, Some(7))),
            other => panic!("unexpected {other:?}"),
        }
    }
}
