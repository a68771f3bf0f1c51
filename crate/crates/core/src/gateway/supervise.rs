use super::prompt::build_supervise_prompt;
use super::template::RoleTemplate;
use super::{BackendKind, ChatBackend};
use crate::lang::{parse, ApiRegistry, StmtKind};
use crate::store::DemoDraft;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    Reject(String),
}

/// Validates a proposed API and demonstration. Structural checks always run;
/// a remote backend is additionally asked for an `ACCEPT`/`REJECT` verdict.
pub fn supervise(
    backend: &dyn ChatBackend,
    template: &RoleTemplate,
    funcdef: &str,
    demo: &DemoDraft,
    registry: &ApiRegistry,
) -> Verdict {
    if let Err(reason) = validate(funcdef, demo, registry) {
        return Verdict::Reject(reason);
    }
    if backend.kind() != BackendKind::Remote {
        return Verdict::Accept;
    }
    let prompt = build_supervise_prompt(template, &registry.docs(), funcdef, demo);
    match backend.complete(&prompt.messages()) {
        Ok(reply) => {
            let first = reply.trim().lines().next().unwrap_or("").trim();
            if first.starts_with("ACCEPT") {
                Verdict::Accept
            } else if let Some(rest) = first.strip_prefix("REJECT") {
                let reason = rest.trim_start_matches([':', ' ']).trim();
                Verdict::Reject(if reason.is_empty() {
                    "rejected by reviewer".into()
                } else {
                    format!("rejected by reviewer: {reason}")
                })
            } else {
                Verdict::Reject(format!("reviewer gave no verdict: {first}"))
            }
        }
        Err(e) => Verdict::Reject(format!("reviewer unavailable: {e}")),
    }
}

fn validate(funcdef: &str, demo: &DemoDraft, registry: &ApiRegistry) -> Result<(), String> {
    let mut extended = registry.clone();
    extended
        .register_api(funcdef)
        .map_err(|d| format!("proposed API rejected: {d}"))?;
    demo.validate().map_err(|e| format!("demonstration rejected: {e}"))?;
    let examples = parse(&demo.examples).map_err(|d| format!("demonstration rejected: {d}"))?;
    let local: Vec<&str> = examples
        .statements
        .iter()
        .filter_map(|s| match &s.kind {
            StmtKind::FuncDef(def) => Some(def.name.as_str()),
            _ => None,
        })
        .collect();
    match examples
        .called_names()
        .into_iter()
        .find(|n| !extended.is_known(n) && !local.contains(&n.as_str()))
    {
        Some(unknown) => Err(format!("demonstration calls unknown API '{unknown}'")),
        None => Ok(()),
    }
}
