use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::episode::{run_episode, summarize_success};
use super::{EpisodeResult, Pipeline, PipelineConfig, TaskSpec, UpdateMode};
use crate::bench::{compute_metrics, MetricsReport};
use crate::lang::ApiRegistry;
use crate::store::DemoLibrary;

/// Library and registry state recorded after a pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassSummary {
    /// `update-<n>` or `frozen`.
    pub pass: String,
    pub successes: usize,
    pub library_digest: String,
    pub registry_digest: String,
    pub demos: usize,
    pub learned_apis: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct LibrarySnapshot {
    pub summary: PassSummary,
    pub library: DemoLibrary,
    pub registry: ApiRegistry,
}

#[derive(Debug, Clone)]
pub struct EpochOutcome {
    pub metrics: MetricsReport,
    /// Frozen-pass results in dataset order.
    pub results: Vec<EpisodeResult>,
    pub history: Vec<LibrarySnapshot>,
    pub library: DemoLibrary,
    pub registry: ApiRegistry,
}

fn snapshot(pass: String, successes: usize, library: &DemoLibrary, registry: &ApiRegistry) -> LibrarySnapshot {
    LibrarySnapshot {
        summary: PassSummary {
            pass,
            successes,
            library_digest: library.digest(),
            registry_digest: registry.digest(),
            demos: library.len(),
            learned_apis: registry.learned().iter().map(|a| a.name.clone()).collect(),
        },
        library: library.clone(),
        registry: registry.clone(),
    }
}

/// Runs `epochs` sequential update passes (skipped when the update mode is
/// `none`) and then one frozen pass whose results produce the metrics.
pub fn run_epoch_loop(
    pipeline: &Pipeline,
    dataset: &[TaskSpec],
    mut registry: ApiRegistry,
    mut library: DemoLibrary,
) -> Result<EpochOutcome, String> {
    if dataset.is_empty() {
        return Err("dataset is empty".into());
    }
    pipeline.config.validate()?;
    let cfg = &pipeline.config;
    let mut history = Vec::new();

    let update_passes = if cfg.update_mode == UpdateMode::None { 0 } else { cfg.epochs };
    for epoch in 1..=update_passes {
        let mut successes = 0;
        for task in dataset {
            let (result, _) = run_episode(pipeline, task, &registry, &library);
            if result.success {
                successes += 1;
                let learned = summarize_success(
                    pipeline.backends.summarize.as_ref(),
                    &pipeline.templates,
                    &mut registry,
                    &mut library,
                    &result.minimal_tasks.join("\n"),
                    &result.code,
                    cfg,
                );
                if let Some(l) = learned {
                    log::info!("epoch {epoch}: task {} taught '{}' (demo {})", task.id, l.api_name, l.demo_id);
                }
            }
        }
        history.push(snapshot(format!("update-{epoch}"), successes, &library, &registry));
    }

    let frozen = |task: &TaskSpec| run_episode(pipeline, task, &registry, &library).0;
    let results: Vec<EpisodeResult> = if cfg.sequential {
        dataset.iter().map(frozen).collect()
    } else {
        dataset.par_iter().map(frozen).collect()
    };
    let successes = results.iter().filter(|r| r.success).count();
    history.push(snapshot("frozen".into(), successes, &library, &registry));

    let levels: Vec<u8> = dataset.iter().map(|t| t.complexity).collect();
    let metrics = compute_metrics(&results, &levels).map_err(|e| e.to_string())?;
    Ok(EpochOutcome {
        metrics,
        results,
        history,
        library,
        registry,
    })
}

/// Machine-readable run report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: PipelineConfig,
    pub per_task: Vec<EpisodeResult>,
    pub metrics: MetricsReport,
    pub library_digests: Vec<PassSummary>,
    #[serde(default)]
    pub generated_at: String,
}

impl RunReport {
    pub fn new(config: &PipelineConfig, outcome: &EpochOutcome, include_traces: bool) -> Self {
        let per_task = outcome
            .results
            .iter()
            .cloned()
            .map(|mut r| {
                if !include_traces {
                    r.trace = None;
                }
                r
            })
            .collect();
        RunReport {
            config: config.clone(),
            per_task,
            metrics: outcome.metrics.clone(),
            library_digests: outcome.history.iter().map(|s| s.summary.clone()).collect(),
            generated_at: String::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
