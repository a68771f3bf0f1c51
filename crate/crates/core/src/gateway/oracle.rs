use std::collections::HashMap;
use std::sync::Mutex;
use std::thread::ThreadId;

use super::prompt::{detect_role, section_body, SectionTag};
use super::template::Role;
use super::{last_user_content, validate_request, BackendKind, ChatBackend, ChatMessage, GatewayError};
use crate::lang::{format, parse, Program, StmtKind};
use crate::pipeline::TaskSpec;

/// Splits ground-truth code into `(minimal task, code)` pairs. Every
/// top-level comment opens a new minimal task named by the comment text.
pub fn split_minimal_tasks(gt_code: &str) -> Result<Vec<(String, String)>, String> {
    let program = parse(gt_code).map_err(|d| format!("ground truth does not parse: {d}"))?;
    let mut segments: Vec<(String, Program)> = Vec::new();
    for stmt in program.statements {
        match &stmt.kind {
            StmtKind::Comment(text) => segments.push((text.trim().to_string(), Program::default())),
            _ => match segments.last_mut() {
                Some((_, p)) => p.statements.push(stmt),
                None => return Err("ground truth must start with a minimal-task comment".into()),
            },
        }
    }
    if segments.is_empty() {
        return Err("ground truth has no minimal-task comments".into());
    }
    segments
        .into_iter()
        .map(|(task, p)| {
            if p.statements.is_empty() {
                Err(format!("minimal task '{task}' has no code"))
            } else {
                Ok((task, format(&p)))
            }
        })
        .collect()
}

/// Answers from the active task's ground truth: its comments become the
/// minimal tasks and the code under each comment is the solution.
/// Summaries are always `SKIP`.
type Segments = Result<Vec<(String, String)>, String>;

#[derive(Debug, Default)]
pub struct OracleBackend {
    active: Mutex<HashMap<ThreadId, Segments>>,
}

impl OracleBackend {
    pub fn new() -> Self {
        Self::default()
    }

    fn with_segments<T>(&self, f: impl FnOnce(&[(String, String)]) -> Result<T, GatewayError>) -> Result<T, GatewayError> {
        let active = self.active.lock().expect("oracle state poisoned");
        match active.get(&std::thread::current().id()) {
            None => Err(GatewayError::MissingOracle("no active task on this thread".into())),
            Some(Err(e)) => Err(GatewayError::MissingOracle(e.clone())),
            Some(Ok(segments)) => f(segments),
        }
    }
}

impl ChatBackend for OracleBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Oracle
    }

    fn on_task_start(&self, task: &TaskSpec) {
        let segments = match &task.gt_code {
            Some(code) => split_minimal_tasks(code),
            None => Err(format!("task {} has no ground-truth code", task.id)),
        };
        self.active
            .lock()
            .expect("oracle state poisoned")
            .insert(std::thread::current().id(), segments);
    }

    fn complete(&self, messages: &[ChatMessage]) -> Result<String, GatewayError> {
        validate_request(messages)?;
        match detect_role(messages) {
            Some(Role::Simplify) => self.with_segments(|segs| {
                Ok(segs.iter().map(|(t, _)| format!("TASK: {t}\n")).collect())
            }),
            Some(Role::Solve) => {
                let prompt = last_user_content(messages).unwrap_or_default();
                let x_low = section_body(prompt, SectionTag::MinimalTask).unwrap_or_default();
                self.with_segments(|segs| {
                    segs.iter()
                        .find(|(t, _)| *t == x_low)
                        .map(|(_, code)| format!("```\n{code}```\n"))
                        .ok_or_else(|| GatewayError::MissingOracle(format!("unknown minimal task '{x_low}'")))
                })
            }
            Some(Role::Summarize) => Ok("SKIP".into()),
            Some(Role::Supervise) => Ok("ACCEPT".into()),
            None => Err(GatewayError::MissingOracle("cannot tell which stage the prompt belongs to".into())),
        }
    }
}
