//! Benchmark support: the seeded task generator, complexity levels, dataset
//! verification, metrics, and the library-update ablation scenario.

pub mod ablation;
mod generator;
mod metrics;

use std::collections::BTreeSet;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use generator::{generate, Lexicon};
pub use metrics::{compute_metrics, Counts, LevelStats, MetricsError, MetricsReport};

use crate::lang::{interpret, parse, ApiRegistry};
use crate::pipeline::{evaluate, TaskSpec};
use crate::world::spawn_world;

pub const DATASET_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub version: u32,
    pub generator_seed: u64,
    pub tasks: Vec<TaskSpec>,
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("cannot access {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed dataset: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("unsupported dataset version {0}")]
    Version(u32),
    #[error("duplicate task id '{0}'")]
    DuplicateId(String),
}

impl Dataset {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("dataset serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, DatasetError> {
        let d: Dataset = serde_json::from_str(text)?;
        if d.version != DATASET_VERSION {
            return Err(DatasetError::Version(d.version));
        }
        let mut seen = BTreeSet::new();
        if let Some(dup) = d.tasks.iter().find(|t| !seen.insert(t.id.as_str())) {
            return Err(DatasetError::DuplicateId(dup.id.clone()));
        }
        Ok(d)
    }

    pub fn save(&self, path: &Path) -> Result<(), DatasetError> {
        std::fs::write(path, self.to_json()).map_err(|source| DatasetError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, DatasetError> {
        let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn task(&self, id: &str) -> Option<&TaskSpec> {
        self.tasks.iter().find(|t| t.id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ComplexityError {
    #[error("task {0} has no ground-truth code")]
    MissingCode(String),
    #[error("ground truth of task {id} does not run: {reason}")]
    Broken { id: String, reason: String },
}

/// Number of core-API calls the task's ground truth performs.
pub fn core_steps(task: &TaskSpec) -> Result<usize, ComplexityError> {
    let code = task
        .gt_code
        .as_ref()
        .ok_or_else(|| ComplexityError::MissingCode(task.id.clone()))?;
    let broken = |reason: String| ComplexityError::Broken {
        id: task.id.clone(),
        reason,
    };
    let program = parse(code).map_err(|d| broken(d.to_string()))?;
    let mut world = spawn_world(task.scenario, task.seed);
    let trace = interpret(&program, &mut world, &ApiRegistry::new()).map_err(|f| broken(f.to_string()))?;
    Ok(trace.steps.len())
}

/// `clamp(implications + ceil(steps / 4), 1, 7)`.
pub fn complexity_level(implications: usize, steps: usize) -> u8 {
    (implications + steps.div_ceil(4)).clamp(1, 7) as u8
}

pub fn assign_complexity(task: &TaskSpec) -> Result<u8, ComplexityError> {
    Ok(complexity_level(task.implication.len(), core_steps(task)?))
}

/// Ids of tasks whose ground truth does not reach the goal within `epsilon`.
pub fn verify_dataset(dataset: &Dataset, epsilon: f64) -> Vec<String> {
    let failing: Vec<Option<String>> = dataset
        .tasks
        .par_iter()
        .map(|task| {
            let ok = (|| {
                let program = parse(task.gt_code.as_ref()?).ok()?;
                let mut world = spawn_world(task.scenario, task.seed);
                interpret(&program, &mut world, &ApiRegistry::new()).ok()?;
                let (_, success) = evaluate(&world, &task.goal, epsilon).ok()?;
                success.then_some(())
            })();
            ok.is_none().then(|| task.id.clone())
        })
        .collect();
    failing.into_iter().flatten().collect()
}
