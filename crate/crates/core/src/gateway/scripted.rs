use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{last_user_content, validate_request, BackendKind, ChatBackend, ChatMessage, GatewayError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Matcher {
    One(String),
    All(Vec<String>),
}

impl Matcher {
    fn matches(&self, text: &str) -> bool {
        match self {
            Matcher::One(s) => text.contains(s.as_str()),
            Matcher::All(parts) => parts.iter().all(|p| text.contains(p.as_str())),
        }
    }
}

/// `match` is a substring, or a list of substrings that must all occur.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptEntry {
    #[serde(rename = "match")]
    pub matcher: Matcher,
    pub response: String,
}

impl ScriptEntry {
    pub fn new(needle: impl Into<String>, response: impl Into<String>) -> Self {
        ScriptEntry {
            matcher: Matcher::One(needle.into()),
            response: response.into(),
        }
    }

    pub fn all<S: Into<String>>(needles: impl IntoIterator<Item = S>, response: impl Into<String>) -> Self {
        ScriptEntry {
            matcher: Matcher::All(needles.into_iter().map(Into::into).collect()),
            response: response.into(),
        }
    }
}

/// Canned responses keyed on the final user message; first match wins.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptedBackend {
    entries: Vec<ScriptEntry>,
}

impl ScriptedBackend {
    pub fn new(entries: Vec<ScriptEntry>) -> Self {
        ScriptedBackend { entries }
    }

    pub fn entries(&self) -> &[ScriptEntry] {
        &self.entries
    }

    pub fn from_json(text: &str) -> Result<Self, GatewayError> {
        let entries: Vec<ScriptEntry> =
            serde_json::from_str(text).map_err(|e| GatewayError::Config(format!("bad script file: {e}")))?;
        Ok(ScriptedBackend::new(entries))
    }

    pub fn load(path: &Path) -> Result<Self, GatewayError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GatewayError::Config(format!("cannot read script {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.entries).expect("script serializes")
    }
}

impl ChatBackend for ScriptedBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Scripted
    }

    fn complete(&self, messages: &[ChatMessage]) -> Result<String, GatewayError> {
        validate_request(messages)?;
        let prompt = last_user_content(messages).ok_or(GatewayError::EmptyRequest)?;
        self.entries
            .iter()
            .find(|e| e.matcher.matches(prompt))
            .map(|e| e.response.clone())
            .ok_or_else(|| {
                let tail: String = prompt.chars().rev().take(120).collect::<Vec<_>>().into_iter().rev().collect();
                GatewayError::Unmatched(tail.replace('\n', " | "))
            })
    }
}
