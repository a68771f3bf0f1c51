//! Language-model gateway: chat backends, role templates, prompt builders
//! and the response-format parsers for every pipeline stage.

mod faulty;
pub mod http;
mod oracle;
mod parse;
pub mod prompt;
mod remote;
mod scripted;
mod supervise;
pub mod template;

use serde::{Deserialize, Serialize};

pub use faulty::FaultyBackend;
pub use oracle::{split_minimal_tasks, OracleBackend};
pub use parse::{parse_code, parse_simplification, parse_summary, ParseError, SummaryProposal};
pub use prompt::{
    build_feedback_message, build_simplify_prompt, build_solve_prompt, build_summary_prompt, build_supervise_prompt,
    detect_role, Prompt, SectionTag, SIMPLIFY_REASK,
};
pub use remote::{RemoteBackend, RemoteConfig};
pub use scripted::{ScriptEntry, ScriptedBackend};
pub use supervise::{supervise, Verdict};
pub use template::{Role, RoleTemplate, Templates};

use crate::pipeline::TaskSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChatRole {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: ChatRole,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage {
            role: ChatRole::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage {
            role: ChatRole::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        ChatMessage {
            role: ChatRole::Assistant,
            content: content.into(),
        }
    }
}

/// Content of the last user message, which is what the offline backends key on.
pub fn last_user_content(messages: &[ChatMessage]) -> Option<&str> {
    messages
        .iter()
        .rev()
        .find(|m| m.role == ChatRole::User)
        .map(|m| m.content.as_str())
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GatewayError {
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("endpoint returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed response: {0}")]
    Protocol(String),
    #[error("no scripted response matches prompt: {0}")]
    Unmatched(String),
    #[error("oracle has no answer: {0}")]
    MissingOracle(String),
    #[error("backend configuration error: {0}")]
    Config(String),
    #[error("a completion request needs at least one non-empty message")]
    EmptyRequest,
}

impl GatewayError {
    pub fn is_retryable(&self) -> bool {
        match self {
            GatewayError::Transport { .. } => true,
            GatewayError::Status { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Remote,
    Scripted,
    Oracle,
    Faulty,
}

/// A chat-completion provider. Implementations are shared across threads.
pub trait ChatBackend: Send + Sync {
    fn kind(&self) -> BackendKind;

    fn complete(&self, messages: &[ChatMessage]) -> Result<String, GatewayError>;

    /// Called by the pipeline before each episode on the episode's thread.
    fn on_task_start(&self, _task: &TaskSpec) {}
}

pub(crate) fn validate_request(messages: &[ChatMessage]) -> Result<(), GatewayError> {
    if messages.is_empty() || messages.iter().any(|m| m.content.trim().is_empty()) {
        return Err(GatewayError::EmptyRequest);
    }
    Ok(())
}
