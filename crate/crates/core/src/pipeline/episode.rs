use super::{EpisodeResult, Learned, Pipeline, PipelineConfig, TaskSpec};
use crate::gateway::prompt::build_simplify_reask;
use crate::gateway::{
    build_feedback_message, build_simplify_prompt, build_solve_prompt, build_summary_prompt, parse_code,
    parse_simplification, parse_summary, supervise, ChatBackend, ChatMessage, RoleTemplate, SummaryProposal,
    Templates, Verdict,
};
use crate::lang::{interpret, parse, render_all, static_check, ApiRegistry, Diagnostic, DiagnosticCode, Phase, Pos};
use crate::store::DemoLibrary;
use crate::world::{spawn_world, GoalState, WorldState};

/// Rewrites `x_high` into minimal tasks, asking once more if the first reply
/// has no `TASK:` lines.
pub fn simplify(
    backend: &dyn ChatBackend,
    template: &RoleTemplate,
    world: &WorldState,
    x_high: &str,
) -> Result<Vec<String>, String> {
    let prompt = build_simplify_prompt(template, &world.observe(), x_high).map_err(|e| e.to_string())?;
    let mut messages = prompt.messages();
    let first = backend
        .complete(&messages)
        .map_err(|e| format!("simplification failed: {e}"))?;
    if let Ok(tasks) = parse_simplification(&first) {
        return Ok(tasks);
    }
    log::debug!("simplification reply had no tasks; asking again");
    messages.push(ChatMessage::assistant(first));
    messages.push(build_simplify_reask(x_high));
    let second = backend
        .complete(&messages)
        .map_err(|e| format!("simplification failed: {e}"))?;
    parse_simplification(&second).map_err(|e| format!("simplification failed twice: {e}"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveSuccess {
    pub code: String,
    pub retries_used: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveFailure {
    pub reason: String,
    pub diagnostics: Vec<Diagnostic>,
    pub retries_used: u32,
}

/// Generates code for one minimal task. `prefix` holds the code already
/// accepted for earlier minimal tasks; the candidate is checked after it so
/// that earlier variables stay in scope, and diagnostics are reported
/// relative to the candidate.
#[allow(clippy::too_many_arguments)]
pub fn solve(
    backend: &dyn ChatBackend,
    template: &RoleTemplate,
    world: &WorldState,
    registry: &ApiRegistry,
    library: &DemoLibrary,
    x_low: &str,
    prefix: &str,
    cfg: &PipelineConfig,
) -> Result<SolveSuccess, SolveFailure> {
    let fail = |reason: String, diagnostics: Vec<Diagnostic>, retries_used: u32| SolveFailure {
        reason,
        diagnostics,
        retries_used,
    };
    let demos = library
        .retrieve_top_k(x_low, cfg.k)
        .map_err(|e| fail(format!("retrieval failed: {e}"), vec![], 0))?;
    let mut context = world.observe();
    if !prefix.trim().is_empty() {
        context.push_str("\ncode already written for the earlier minimal tasks:\n");
        context.push_str(prefix);
    }
    let prompt = build_solve_prompt(template, &context, &registry.docs(), &demos, x_low)
        .map_err(|e| fail(e.to_string(), vec![], 0))?;
    let mut messages = prompt.messages();
    let prefix_lines = prefix.lines().count();
    let mut last = Vec::new();

    for attempt in 0..=cfg.max_retries {
        let reply = backend
            .complete(&messages)
            .map_err(|e| fail(format!("solution failed: {e}"), last.clone(), attempt))?;
        let diagnostics = check_candidate(&reply, prefix, prefix_lines, registry, world);
        match diagnostics {
            Ok(code) => {
                return Ok(SolveSuccess {
                    code,
                    retries_used: attempt,
                })
            }
            Err(diags) => {
                log::debug!("attempt {} for '{x_low}' rejected:\n{}", attempt + 1, render_all(&diags));
                messages.push(ChatMessage::assistant(reply));
                messages.push(build_feedback_message(&diags, x_low));
                last = diags;
            }
        }
    }
    Err(fail(
        format!(
            "no code for '{x_low}' passed the compiler within {} attempts; last errors: {}",
            cfg.max_retries + 1,
            render_all(&last).replace('\n', "; ")
        ),
        last,
        cfg.max_retries,
    ))
}

fn check_candidate(
    reply: &str,
    prefix: &str,
    prefix_lines: usize,
    registry: &ApiRegistry,
    world: &WorldState,
) -> Result<String, Vec<Diagnostic>> {
    let code = parse_code(reply).map_err(|e| {
        vec![Diagnostic::new(
            Phase::Parse,
            Pos::new(1, 1),
            DiagnosticCode::Syntax,
            format!("{e}; reply with the code inside a fenced block"),
        )]
    })?;
    parse(&code).map_err(|d| vec![d])?;
    let combined = format!("{prefix}{code}");
    let program = parse(&combined).map_err(|d| vec![d])?;
    let diags: Vec<Diagnostic> = static_check(&program, registry, world)
        .into_iter()
        .filter(|d| d.line > prefix_lines)
        .map(|mut d| {
            d.line -= prefix_lines;
            d
        })
        .collect();
    if diags.is_empty() {
        Ok(code)
    } else {
        Err(diags)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("goal names object '{0}', which is not in the world")]
pub struct EvalError(pub String);

/// Summed positional error of the goal objects, plus the gripper error and a
/// 0.5 penalty for a required-but-occupied hand. Returns the error and
/// whether it is within `epsilon`.
pub fn evaluate(world: &WorldState, goal: &GoalState, epsilon: f64) -> Result<(f64, bool), EvalError> {
    let mut err = 0.0;
    for (name, target) in &goal.object_targets {
        let obj = world.objects.get(name).ok_or_else(|| EvalError(name.clone()))?;
        err += obj.position.distance(*target);
    }
    if let Some(target) = goal.gripper_target {
        err += world.gripper.position.distance(target);
    }
    if goal.require_empty_hand && world.gripper.holding.is_some() {
        err += 0.5;
    }
    Ok((err, err <= epsilon))
}

/// Runs one task end to end. The returned world is the state after
/// execution, or the spawned world when nothing executed.
pub fn run_episode(
    pipeline: &Pipeline,
    task: &TaskSpec,
    registry: &ApiRegistry,
    library: &DemoLibrary,
) -> (EpisodeResult, WorldState) {
    let cfg = &pipeline.config;
    let templates: &Templates = &pipeline.templates;
    pipeline.backends.start_task(task);
    let mut world = spawn_world(task.scenario, task.seed);
    let mut result = EpisodeResult {
        task_id: task.id.clone(),
        minimal_tasks: Vec::new(),
        code: String::new(),
        executable: false,
        success: false,
        err_value: 0.0,
        retries_used: 0,
        trace: None,
        learned: None,
        failure: None,
    };

    let outcome = (|| -> Result<(), String> {
        result.minimal_tasks = simplify(pipeline.backends.simplify.as_ref(), &templates.simplify, &world, &task.instruction)?;
        for x_low in &result.minimal_tasks {
            let solved = solve(
                pipeline.backends.solve.as_ref(),
                &templates.solve,
                &world,
                registry,
                library,
                x_low,
                &result.code,
                cfg,
            );
            match solved {
                Ok(s) => {
                    result.retries_used += s.retries_used;
                    result.code.push_str(&format!("# {x_low}\n{}", s.code));
                }
                Err(f) => {
                    result.retries_used += f.retries_used;
                    return Err(f.reason);
                }
            }
        }
        Ok(())
    })();

    if let Err(reason) = outcome {
        result.failure = Some(reason);
    } else {
        let program = parse(&result.code).expect("every segment was parsed");
        result.executable = true;
        match interpret(&program, &mut world, registry) {
            Ok(trace) => result.trace = Some(trace),
            Err(failure) => {
                result.failure = Some(failure.diagnostic.to_string());
                result.trace = Some(failure.trace);
            }
        }
    }

    match evaluate(&world, &task.goal, cfg.epsilon) {
        Ok((err, ok)) => {
            result.err_value = err;
            result.success = result.executable && ok;
        }
        Err(e) => {
            result.success = false;
            result.failure = Some(match result.failure.take() {
                Some(prev) => format!("{prev}; {e}"),
                None => e.to_string(),
            });
        }
    }
    (result, world)
}

/// Asks the summary backend for a reusable API and demonstration, then
/// supervises and applies it. Returns what was learned, if anything.
#[allow(clippy::too_many_arguments)]
pub fn summarize_success(
    backend: &dyn ChatBackend,
    templates: &Templates,
    registry: &mut ApiRegistry,
    library: &mut DemoLibrary,
    x_low_joined: &str,
    code: &str,
    cfg: &PipelineConfig,
) -> Option<Learned> {
    let mode = cfg.update_mode.upsert_mode()?;
    let prompt = match build_summary_prompt(&templates.summarize, &registry.docs(), x_low_joined, code) {
        Ok(p) => p,
        Err(e) => {
            log::warn!("summary skipped: {e}");
            return None;
        }
    };
    let reply = match backend.complete(&prompt.messages()) {
        Ok(r) => r,
        Err(e) => {
            log::warn!("summary backend failed: {e}");
            return None;
        }
    };
    let (funcdef, demo) = match parse_summary(&reply) {
        Ok(SummaryProposal::Skip) => return None,
        Ok(SummaryProposal::Proposal { funcdef, demo }) => (funcdef, demo),
        Err(e) => {
            log::info!("summary rejected: {e}");
            return None;
        }
    };
    if let Verdict::Reject(reason) = supervise(backend, &templates.supervise, &funcdef, &demo, registry) {
        log::info!("summary rejected: {reason}");
        return None;
    }
    let mut next_registry = registry.clone();
    let api_name = match next_registry.register_api(&funcdef) {
        Ok(api) => api.name.clone(),
        Err(d) => {
            log::info!("summary rejected: {d}");
            return None;
        }
    };
    match library.upsert(demo, cfg.theta_dup, mode) {
        Ok(outcome) => {
            if !outcome.removed.is_empty() {
                log::info!("demonstrations {:?} replaced by {}", outcome.removed, outcome.id);
            }
            *registry = next_registry;
            Some(Learned {
                api_name,
                demo_id: outcome.id,
            })
        }
        Err(e) => {
            log::warn!("demonstration not stored: {e}");
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{spawn_world, ScenarioConfig, Vec3};

    #[test]
    fn evaluate_hand_computed() {
        let w = spawn_world(ScenarioConfig::Observable, 7);
        let goal = GoalState::from_world(&w, false);
        assert_eq!(evaluate(&w, &goal, 0.03).unwrap(), (0.0, true));

        let names: Vec<String> = goal.object_targets.keys().take(2).cloned().collect();
        let mut g = goal.clone();
        let t0 = g.object_targets.get_mut(&names[0]).unwrap();
        *t0 = *t0 + Vec3::new(0.03, 0.0, 0.0);
        let t1 = g.object_targets.get_mut(&names[1]).unwrap();
        *t1 = *t1 + Vec3::new(0.0, 0.04, 0.0);
        let (err, ok) = evaluate(&w, &g, 0.03).unwrap();
        assert!((err - 0.07).abs() < 1e-12);
        assert!(!ok);

        let mut g = goal.clone();
        let t0 = g.object_targets.get_mut(&names[0]).unwrap();
        *t0 = *t0 + Vec3::new(0.001, 0.0, 0.0);
        let (err, ok) = evaluate(&w, &g, 0.03).unwrap();
        assert!((err - 0.001).abs() < 1e-12);
        assert!(ok);

        let mut g = goal;
        g.object_targets.insert("ghost".into(), Vec3::default());
        assert_eq!(evaluate(&w, &g, 0.03), Err(EvalError("ghost".into())));
    }

    #[test]
    fn gripper_and_hand_terms() {
        let mut w = spawn_world(ScenarioConfig::Observable, 7);
        let mut goal = GoalState::from_world(&w, true);
        goal.gripper_target = Some(w.gripper.position + Vec3::new(0.0, 0.0, 0.02));
        let (err, _) = evaluate(&w, &goal, 0.03).unwrap();
        assert!((err - 0.02).abs() < 1e-12);

        let goal = GoalState::from_world(&w, false);
        let block = w.objects.values().find(|o| !o.fixed).unwrap().name.clone();
        w.pick(&block).unwrap();
        let (err, ok) = evaluate(&w, &goal, 0.03).unwrap();
        assert!(err >= 0.5 && !ok);
    }
}
