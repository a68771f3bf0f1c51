use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::thread::ThreadId;

use super::prompt::detect_role;
use super::template::Role;
use super::{BackendKind, ChatBackend, ChatMessage, GatewayError};
use crate::pipeline::TaskSpec;

/// Corrupts the first `n` code replies of each task by deleting the first
/// `)`, then passes the wrapped backend's replies through unchanged.
pub struct FaultyBackend {
    inner: Arc<dyn ChatBackend>,
    faults: usize,
    injected: Mutex<HashMap<ThreadId, usize>>,
}

impl FaultyBackend {
    pub fn new(inner: Arc<dyn ChatBackend>, faults: usize) -> Self {
        FaultyBackend {
            inner,
            faults,
            injected: Mutex::new(HashMap::new()),
        }
    }

    pub fn faults(&self) -> usize {
        self.faults
    }
}

pub fn corrupt(reply: &str) -> String {
    match reply.find(')') {
        Some(i) => format!("{}{}", &reply[..i], &reply[i + 1..]),
        None => format!("{reply}\n)"),
    }
}

impl ChatBackend for FaultyBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Faulty
    }

    fn on_task_start(&self, task: &TaskSpec) {
        self.injected
            .lock()
            .expect("fault counter poisoned")
            .insert(std::thread::current().id(), 0);
        self.inner.on_task_start(task);
    }

    fn complete(&self, messages: &[ChatMessage]) -> Result<String, GatewayError> {
        let reply = self.inner.complete(messages)?;
        if detect_role(messages) != Some(Role::Solve) {
            return Ok(reply);
        }
        let mut injected = self.injected.lock().expect("fault counter poisoned");
        let count = injected.entry(std::thread::current().id()).or_insert(0);
        if *count < self.faults {
            *count += 1;
            Ok(corrupt(&reply))
        } else {
            Ok(reply)
        }
    }
}
