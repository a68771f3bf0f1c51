//! Stage orchestration: simplification, retrieval-augmented solution with
//! compiler feedback, execution, evaluation, and summary-driven library
//! updates.

mod episode;
mod epoch;

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use episode::{evaluate, run_episode, simplify, solve, summarize_success, EvalError, SolveFailure, SolveSuccess};
pub use epoch::{run_epoch_loop, EpochOutcome, LibrarySnapshot, PassSummary, RunReport};

use crate::gateway::{ChatBackend, Templates};
use crate::lang::ExecutionTrace;
use crate::store::UpsertMode;
use crate::world::{GoalState, ScenarioConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Implication {
    RelativePosition,
    Color,
    Geometry,
    Mass,
}

impl Implication {
    pub fn as_str(self) -> &'static str {
        match self {
            Implication::RelativePosition => "relative_position",
            Implication::Color => "color",
            Implication::Geometry => "geometry",
            Implication::Mass => "mass",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub id: String,
    pub instruction: String,
    pub scenario: ScenarioConfig,
    pub seed: u64,
    pub goal: GoalState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_code: Option<String>,
    #[serde(default)]
    pub implication: BTreeSet<Implication>,
    pub complexity: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateMode {
    None,
    Append,
    AppendDelete,
}

impl UpdateMode {
    pub fn upsert_mode(self) -> Option<UpsertMode> {
        match self {
            UpdateMode::None => None,
            UpdateMode::Append => Some(UpsertMode::Append),
            UpdateMode::AppendDelete => Some(UpsertMode::AppendDelete),
        }
    }
}

impl std::str::FromStr for UpdateMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(UpdateMode::None),
            "append" => Ok(UpdateMode::Append),
            "append_delete" | "append-delete" => Ok(UpdateMode::AppendDelete),
            other => Err(format!("unknown update mode '{other}' (expected none, append or append_delete)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Demonstrations retrieved per minimal task.
    pub k: usize,
    /// Success threshold on the summed goal error, meters.
    pub epsilon: f64,
    /// Extra solve attempts after the first.
    pub max_retries: u32,
    /// Description similarity at which append-delete drops an old demo.
    pub theta_dup: f64,
    pub update_mode: UpdateMode,
    pub epochs: u32,
    /// When false the frozen evaluation pass runs on the rayon pool.
    pub sequential: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            k: 3,
            epsilon: 0.03,
            max_retries: 3,
            theta_dup: 0.9,
            update_mode: UpdateMode::None,
            epochs: 0,
            sequential: true,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.k == 0 {
            return Err("k must be at least 1".into());
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if !(self.theta_dup > 0.0 && self.theta_dup <= 1.0) {
            return Err(format!("theta_dup must lie in (0, 1], got {}", self.theta_dup));
        }
        Ok(())
    }
}

/// The new API and demonstration produced by a successful summary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Learned {
    pub api_name: String,
    pub demo_id: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub task_id: String,
    pub minimal_tasks: Vec<String>,
    pub code: String,
    pub executable: bool,
    pub success: bool,
    pub err_value: f64,
    pub retries_used: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<ExecutionTrace>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learned: Option<Learned>,
    /// Why the episode was not executable, or the runtime error that stopped it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

/// One chat backend per LLM role. The summary backend also supervises.
#[derive(Clone)]
pub struct Backends {
    pub simplify: Arc<dyn ChatBackend>,
    pub solve: Arc<dyn ChatBackend>,
    pub summarize: Arc<dyn ChatBackend>,
}

impl Backends {
    pub fn uniform(backend: Arc<dyn ChatBackend>) -> Self {
        Backends {
            simplify: backend.clone(),
            solve: backend.clone(),
            summarize: backend,
        }
    }

    pub(crate) fn start_task(&self, task: &TaskSpec) {
        let all = [&self.simplify, &self.solve, &self.summarize];
        for (i, b) in all.iter().enumerate() {
            if !all[..i].iter().any(|prev| Arc::ptr_eq(prev, b)) {
                b.on_task_start(task);
            }
        }
    }
}

/// Everything an episode reads besides the task and the mutable stores.
#[derive(Clone)]
pub struct Pipeline {
    pub backends: Backends,
    pub templates: Templates,
    pub config: PipelineConfig,
}

impl Pipeline {
    pub fn new(backends: Backends, config: PipelineConfig) -> Self {
        Pipeline {
            backends,
            templates: Templates::default(),
            config,
        }
    }
}
