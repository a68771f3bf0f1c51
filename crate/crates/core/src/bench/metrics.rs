use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::pipeline::EpisodeResult;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelStats {
    #[serde(rename = "SR")]
    pub sr: f64,
    #[serde(rename = "Err")]
    pub err: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub total: usize,
    pub executable: usize,
    pub successes: usize,
}

/// Success rate over all tasks, success rate over executable tasks, and the
/// mean goal error over all tasks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    #[serde(rename = "SR")]
    pub sr: f64,
    #[serde(rename = "ESR")]
    pub esr: f64,
    #[serde(rename = "Err")]
    pub err: f64,
    pub per_level: BTreeMap<u8, LevelStats>,
    pub counts: Counts,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("no results to aggregate")]
    Empty,
    #[error("{results} results but {levels} complexity levels")]
    LengthMismatch { results: usize, levels: usize },
}

/// `levels[i]` is the complexity of the task behind `results[i]`. ESR is 0
/// when nothing was executable.
pub fn compute_metrics(results: &[EpisodeResult], levels: &[u8]) -> Result<MetricsReport, MetricsError> {
    if results.is_empty() {
        return Err(MetricsError::Empty);
    }
    if results.len() != levels.len() {
        return Err(MetricsError::LengthMismatch {
            results: results.len(),
            levels: levels.len(),
        });
    }
    let total = results.len();
    let executable = results.iter().filter(|r| r.executable).count();
    let successes = results.iter().filter(|r| r.success).count();
    let err = results.iter().map(|r| r.err_value).sum::<f64>() / total as f64;

    let mut groups: BTreeMap<u8, Vec<&EpisodeResult>> = BTreeMap::new();
    for (r, &level) in results.iter().zip(levels) {
        groups.entry(level).or_default().push(r);
    }
    let per_level = groups
        .into_iter()
        .map(|(level, rs)| {
            let n = rs.len();
            let stats = LevelStats {
                sr: rs.iter().filter(|r| r.success).count() as f64 / n as f64,
                err: rs.iter().map(|r| r.err_value).sum::<f64>() / n as f64,
                count: n,
            };
            (level, stats)
        })
        .collect();

    Ok(MetricsReport {
        sr: successes as f64 / total as f64,
        esr: if executable == 0 {
            0.0
        } else {
            successes as f64 / executable as f64
        },
        err,
        per_level,
        counts: Counts {
            total,
            executable,
            successes,
        },
    })
}

impl MetricsReport {
    /// Plain-text summary with one row per complexity level.
    pub fn table(&self) -> String {
        let mut out = format!(
            "SR {:.3}  ESR {:.3}  Err {:.4}  (tasks {}, executable {}, successes {})\n",
            self.sr, self.esr, self.err, self.counts.total, self.counts.executable, self.counts.successes
        );
        out.push_str("level  count  SR     Err\n");
        for (level, s) in &self.per_level {
            out.push_str(&format!("{level:>5}  {:>5}  {:.3}  {:.4}\n", s.count, s.sr, s.err));
        }
        out
    }
}
