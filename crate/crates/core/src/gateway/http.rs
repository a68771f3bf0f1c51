//! Blocking JSON-over-HTTP client shared by the remote chat and embedding
//! providers: bounded concurrency plus exponential backoff.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde_json::Value;

use super::GatewayError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 3,
            base_delay: Duration::from_millis(500),
            max_delay: Duration::from_secs(8),
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `attempt` (1-based).
    pub fn delay(&self, attempt: u32) -> Duration {
        let factor = 2u32.saturating_pow(attempt.saturating_sub(1));
        self.base_delay.saturating_mul(factor).min(self.max_delay)
    }
}

/// Counting semaphore limiting simultaneous requests.
#[derive(Debug)]
struct InFlight {
    available: Mutex<usize>,
    freed: Condvar,
}

impl InFlight {
    fn new(limit: usize) -> Self {
        InFlight {
            available: Mutex::new(limit.max(1)),
            freed: Condvar::new(),
        }
    }

    fn acquire(&self) -> InFlightGuard<'_> {
        let mut n = self.available.lock().expect("semaphore poisoned");
        while *n == 0 {
            n = self.freed.wait(n).expect("semaphore poisoned");
        }
        *n -= 1;
        InFlightGuard(self)
    }
}

struct InFlightGuard<'a>(&'a InFlight);

impl Drop for InFlightGuard<'_> {
    fn drop(&mut self) {
        *self.0.available.lock().expect("semaphore poisoned") += 1;
        self.0.freed.notify_one();
    }
}

#[derive(Debug)]
pub struct JsonClient {
    client: reqwest::blocking::Client,
    retry: RetryPolicy,
    in_flight: InFlight,
    api_key: Option<String>,
}

impl JsonClient {
    pub fn new(
        timeout: Duration,
        retry: RetryPolicy,
        max_in_flight: usize,
        api_key: Option<String>,
    ) -> Result<Self, GatewayError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| GatewayError::Config(format!("cannot build HTTP client: {e}")))?;
        Ok(JsonClient {
            client,
            retry,
            in_flight: InFlight::new(max_in_flight),
            api_key,
        })
    }

    /// POSTs `body` and returns the decoded JSON response. Transport errors,
    /// 429 and 5xx are retried; other statuses fail immediately.
    pub fn post(&self, url: &str, body: &Value) -> Result<Value, GatewayError> {
        let _slot = self.in_flight.acquire();
        let mut attempt = 0;
        loop {
            match self.post_once(url, body) {
                Ok(v) => return Ok(v),
                Err(e) if e.is_retryable() && attempt < self.retry.max_retries => {
                    attempt += 1;
                    let delay = self.retry.delay(attempt);
                    log::warn!("request to {url} failed ({e}); retry {attempt} in {delay:?}");
                    std::thread::sleep(delay);
                }
                Err(GatewayError::Transport { message, .. }) => {
                    return Err(GatewayError::Transport {
                        attempts: attempt + 1,
                        message,
                    })
                }
                Err(e) => return Err(e),
            }
        }
    }

    fn post_once(&self, url: &str, body: &Value) -> Result<Value, GatewayError> {
        let mut req = self.client.post(url).json(body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| GatewayError::Transport {
            attempts: 1,
            message: e.to_string(),
        })?;
        let status = resp.status();
        let text = resp.text().map_err(|e| GatewayError::Transport {
            attempts: 1,
            message: e.to_string(),
        })?;
        if !status.is_success() {
            return Err(GatewayError::Status {
                status: status.as_u16(),
                body: text.chars().take(200).collect(),
            });
        }
        serde_json::from_str(&text).map_err(|e| GatewayError::Protocol(format!("response is not JSON: {e}")))
    }
}

/// Appends `suffix` to `endpoint` unless it is already there.
pub(crate) fn join_endpoint(endpoint: &str, suffix: &str) -> String {
    let trimmed = endpoint.trim_end_matches('/');
    let tail = suffix.trim_start_matches("/v1");
    if trimmed.ends_with(tail) {
        trimmed.to_string()
    } else if trimmed.ends_with("/v1") {
        format!("{trimmed}{tail}")
    } else {
        format!("{trimmed}{suffix}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backoff_doubles_and_caps() {
        let p = RetryPolicy {
            max_retries: 5,
            base_delay: Duration::from_millis(100),
            max_delay: Duration::from_millis(500),
        };
        let delays: Vec<u128> = (1..=5).map(|a| p.delay(a).as_millis()).collect();
        assert_eq!(delays, vec![100, 200, 400, 500, 500]);
    }

    #[test]
    fn endpoint_joining() {
        let s = "/v1/chat/completions";
        assert_eq!(join_endpoint("http://h:1", s), "http://h:1/v1/chat/completions");
        assert_eq!(join_endpoint("http://h:1/", s), "http://h:1/v1/chat/completions");
        assert_eq!(join_endpoint("http://h:1/v1", s), "http://h:1/v1/chat/completions");
        assert_eq!(join_endpoint("http://h:1/v1/chat/completions", s), "http://h:1/v1/chat/completions");
    }

    #[test]
    fn unreachable_endpoint_exhausts_retries() {
        let retry = RetryPolicy {
            max_retries: 2,
            base_delay: Duration::from_millis(1),
            max_delay: Duration::from_millis(2),
        };
        let client = JsonClient::new(Duration::from_millis(500), retry, 1, None).unwrap();
        // port 9 on localhost is almost never listening; connection is refused
        let err = client.post("http://127.0.0.1:9/v1/chat/completions", &Value::Null).unwrap_err();
        match err {
            GatewayError::Transport { attempts, .. } => assert_eq!(attempts, 3),
            other => panic!("unexpected {other:?}"),
        }
    }
}
