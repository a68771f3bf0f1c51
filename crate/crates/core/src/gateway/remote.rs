use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::http::{join_endpoint, JsonClient, RetryPolicy};
use super::{validate_request, BackendKind, ChatBackend, ChatMessage, GatewayError};

pub const API_KEY_ENV: &str = "TRIPLES_API_KEY";
pub const ENDPOINT_ENV: &str = "TRIPLES_ENDPOINT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RemoteConfig {
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token.
    pub api_key_env: String,
    pub timeout_secs: u64,
    pub max_retries: u32,
    pub base_delay_ms: u64,
    pub max_in_flight: usize,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        RemoteConfig {
            endpoint: String::new(),
            model: "gpt-3.5-turbo".into(),
            api_key_env: API_KEY_ENV.into(),
            timeout_secs: 60,
            max_retries: 3,
            base_delay_ms: 500,
            max_in_flight: 4,
        }
    }
}

/// Client for an OpenAI-compatible chat-completions endpoint.
#[derive(Debug)]
pub struct RemoteBackend {
    url: String,
    model: String,
    client: JsonClient,
}

impl RemoteBackend {
    pub fn new(config: &RemoteConfig) -> Result<Self, GatewayError> {
        if config.endpoint.trim().is_empty() {
            return Err(GatewayError::Config(format!(
                "remote backend needs an endpoint (flag or {ENDPOINT_ENV})"
            )));
        }
        let retry = RetryPolicy {
            max_retries: config.max_retries,
            base_delay: Duration::from_millis(config.base_delay_ms),
            max_delay: Duration::from_millis(config.base_delay_ms.saturating_mul(16)),
        };
        let api_key = std::env::var(&config.api_key_env).ok().filter(|k| !k.is_empty());
        Ok(RemoteBackend {
            url: join_endpoint(&config.endpoint, "/v1/chat/completions"),
            model: config.model.clone(),
            client: JsonClient::new(
                Duration::from_secs(config.timeout_secs),
                retry,
                config.max_in_flight,
                api_key,
            )?,
        })
    }

    pub fn url(&self) -> &str {
        &self.url
    }
}

impl ChatBackend for RemoteBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Remote
    }

    fn complete(&self, messages: &[ChatMessage]) -> Result<String, GatewayError> {
        validate_request(messages)?;
        let body = json!({
            "model": self.model,
            "messages": messages,
            "temperature": 0,
        });
        let resp = self.client.post(&self.url, &body)?;
        resp.pointer("/choices/0/message/content")
            .and_then(|c| c.as_str())
            .map(str::to_string)
            .ok_or_else(|| GatewayError::Protocol("missing choices[0].message.content".into()))
    }
}
