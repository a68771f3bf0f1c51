//! A ten-task scenario that separates the three library update modes.
//!
//! Five simple tasks (three stacks, two cup placements) are solvable with
//! core APIs. Five composite tasks are solved correctly only when the
//! demonstration of a learned API is retrieved, and a stale seed
//! demonstration, whose description equals the learned stacking demo, steers
//! the solver to wrong code whenever it is in the prompt. The first simple
//! stack and the first simple cup task teach the two APIs.

use std::sync::Arc;

use super::assign_complexity;
use crate::gateway::{ScriptEntry, ScriptedBackend};
use crate::lang::{interpret, parse, ApiRegistry};
use crate::pipeline::TaskSpec;
use crate::store::{DemoLibrary, DemoSource, Demonstration, EmbeddingProvider};
use crate::world::{spawn_world, GoalState, ScenarioConfig};

pub const STACK_DESCRIPTION: &str = "stack one block on top of another block";
pub const CUP_DESCRIPTION: &str = "put one block into a cup";
pub const STALE_MARKER: &str = "legacy stacking routine";
pub const STACK_MARKER: &str = "learned stacking helper";
pub const CUP_MARKER: &str = "learned cup helper";

const STACK_API: &str = "def stack_object_on_object(obj, base):\n    pick(obj)\n    place_on(base)\nend";
const CUP_API: &str = "def put_object_in_cup(obj, cup):\n    pick(obj)\n    place_on(cup)\nend";

const SIMPLE_STACK_SEEDS: [u64; 3] = [101, 102, 103];
const SIMPLE_CUP_SEEDS: [u64; 2] = [201, 202];
const COMPOSITE_STACK_SEEDS: [u64; 3] = [301, 302, 303];
const COMPOSITE_CUP_SEEDS: [u64; 2] = [401, 402];

pub struct AblationScenario {
    pub tasks: Vec<TaskSpec>,
    pub script: ScriptedBackend,
    pub seed_demos: Vec<Demonstration>,
}

impl AblationScenario {
    pub fn seed_library(&self, provider: Arc<dyn EmbeddingProvider>) -> DemoLibrary {
        DemoLibrary::from_demos(provider, self.seed_demos.clone()).expect("scenario demos are valid")
    }
}

struct Names {
    blocks: Vec<String>,
    cups: Vec<String>,
}

fn names(seed: u64) -> Names {
    let w = spawn_world(ScenarioConfig::Observable, seed);
    Names {
        blocks: w.objects.values().filter(|o| !o.is_cup()).map(|o| o.name.clone()).collect(),
        cups: w.objects.values().filter(|o| o.is_cup()).map(|o| o.name.clone()).collect(),
    }
}

fn task(id: String, instruction: String, seed: u64, segments: &[(String, String)]) -> TaskSpec {
    let gt_code: String = segments.iter().map(|(t, c)| format!("# {t}\n{c}\n")).collect();
    let mut world = spawn_world(ScenarioConfig::Observable, seed);
    interpret(&parse(&gt_code).expect("scenario code parses"), &mut world, &ApiRegistry::new())
        .expect("scenario code runs");
    let mut t = TaskSpec {
        id,
        instruction,
        scenario: ScenarioConfig::Observable,
        seed,
        goal: GoalState::from_world(&world, false),
        gt_code: Some(gt_code),
        implication: Default::default(),
        complexity: 1,
    };
    t.complexity = assign_complexity(&t).expect("scenario code runs");
    t
}

fn minimal(x_low: &str) -> String {
    format!("## Minimal task\n{x_low}")
}

fn fenced(code: &str) -> String {
    format!("```\n{code}\n```")
}

fn summary_reply(api: &str, description: &str, marker: &str, example: &str) -> String {
    format!("API:\n{api}\nTASK_DESCRIPTION:\n{description}\nTHOUGHT:\nUse the {marker}; it picks the object and places it in one call.\nEXAMPLES:\n{example}\n")
}

pub fn build() -> AblationScenario {
    let mut tasks = Vec::new();
    let mut script = Vec::new();
    let mut summaries = Vec::new();

    for (i, &seed) in SIMPLE_STACK_SEEDS.iter().enumerate() {
        let n = names(seed);
        let (a, b) = (&n.blocks[0], &n.blocks[1]);
        let x = format!("stack {a} on {b}");
        let code = format!("pick(\"{a}\")\nplace_on(\"{b}\")");
        script.push(ScriptEntry::new(format!("## Instruction\n{x}"), format!("TASK: {x}")));
        script.push(ScriptEntry::new(minimal(&x), fenced(&code)));
        if i == 0 {
            let example = format!("stack_object_on_object(\"{a}\", \"{b}\")");
            summaries.push(ScriptEntry::new(
                format!("## Completed task\n{x}"),
                summary_reply(STACK_API, STACK_DESCRIPTION, STACK_MARKER, &example),
            ));
        }
        tasks.push(task(format!("simple-stack-{i}"), x.clone(), seed, &[(x, code)]));
    }

    for (i, &seed) in SIMPLE_CUP_SEEDS.iter().enumerate() {
        let n = names(seed);
        let (a, c) = (&n.blocks[0], &n.cups[0]);
        let x = format!("put {a} in {c}");
        let code = format!("pick(\"{a}\")\nplace_on(\"{c}\")");
        script.push(ScriptEntry::new(format!("## Instruction\n{x}"), format!("TASK: {x}")));
        script.push(ScriptEntry::new(minimal(&x), fenced(&code)));
        if i == 0 {
            let example = format!("put_object_in_cup(\"{a}\", \"{c}\")");
            summaries.push(ScriptEntry::new(
                format!("## Completed task\n{x}"),
                summary_reply(CUP_API, CUP_DESCRIPTION, CUP_MARKER, &example),
            ));
        }
        tasks.push(task(format!("simple-cup-{i}"), x.clone(), seed, &[(x, code)]));
    }

    for (i, &seed) in COMPOSITE_STACK_SEEDS.iter().enumerate() {
        let n = names(seed);
        let (a, b, c) = (&n.blocks[0], &n.blocks[1], &n.blocks[2]);
        let steps = [(a, b), (c, a)];
        let mut segments = Vec::new();
        let mut lines = Vec::new();
        for (top, base) in steps {
            let x = format!("stack {top} on top of {base}");
            let good = format!("stack_object_on_object(\"{top}\", \"{base}\")");
            let bad = format!("pick(\"{base}\")\nplace_on(\"{top}\")");
            script.push(ScriptEntry::all([STALE_MARKER.to_string(), minimal(&x)], fenced(&bad)));
            script.push(ScriptEntry::all([STACK_MARKER.to_string(), minimal(&x)], fenced(&good)));
            script.push(ScriptEntry::new(minimal(&x), fenced(&bad)));
            lines.push(format!("TASK: {x}"));
            segments.push((x, format!("pick(\"{top}\")\nplace_on(\"{base}\")")));
        }
        let instruction = format!("build a stack of three: {b} at the bottom, then {a}, then {c}");
        script.push(ScriptEntry::new(format!("## Instruction\n{instruction}"), lines.join("\n")));
        tasks.push(task(format!("composite-stack-{i}"), instruction, seed, &segments));
    }

    for (i, &seed) in COMPOSITE_CUP_SEEDS.iter().enumerate() {
        let n = names(seed);
        let pairs = [(&n.blocks[0], &n.cups[0]), (&n.blocks[1], &n.cups[1])];
        let mut segments = Vec::new();
        let mut lines = Vec::new();
        for (block, cup) in pairs {
            let other = if cup == &n.cups[0] { &n.cups[1] } else { &n.cups[0] };
            let x = format!("put {block} into {cup}");
            let good = format!("put_object_in_cup(\"{block}\", \"{cup}\")");
            let bad = format!("pick(\"{block}\")\nplace_on(\"{other}\")");
            script.push(ScriptEntry::all([CUP_MARKER.to_string(), minimal(&x)], fenced(&good)));
            script.push(ScriptEntry::new(minimal(&x), fenced(&bad)));
            lines.push(format!("TASK: {x}"));
            segments.push((x, format!("pick(\"{block}\")\nplace_on(\"{cup}\")")));
        }
        let instruction = format!(
            "fill both cups: {} goes into {}, {} goes into {}",
            pairs[0].0, pairs[0].1, pairs[1].0, pairs[1].1
        );
        script.push(ScriptEntry::new(format!("## Instruction\n{instruction}"), lines.join("\n")));
        tasks.push(task(format!("composite-cup-{i}"), instruction, seed, &segments));
    }

    script.extend(summaries);
    script.push(ScriptEntry::new("## Successful code", "SKIP"));

    let demo = |id, desc: &str, thought: &str, examples: &str| Demonstration {
        id,
        task_description: desc.into(),
        thought: thought.into(),
        examples: examples.into(),
        source: DemoSource::Seed,
    };
    let seed_demos = vec![
        demo(
            1,
            STACK_DESCRIPTION,
            &format!("Follow the {STALE_MARKER}: lift the base block first, then put it on the other block."),
            "pick(\"yellow_block\")\nplace_on(\"green_block\")\n",
        ),
        demo(
            2,
            "move the gripper a distance in a direction",
            "Forward is +x, left is +y, up is +z; distances are meters.",
            "move(0, 0.05, 0)\n",
        ),
        demo(
            3,
            "read the mass of a block",
            "Store each reading in a variable.",
            "m1 = get_obj_mass(\"block1\")\n",
        ),
    ];

    AblationScenario {
        tasks,
        script: ScriptedBackend::new(script),
        seed_demos,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{run_epoch_loop, Backends, Pipeline, PipelineConfig, UpdateMode};
    use crate::store::{cosine_sim, HashedEmbedder};

    fn frozen_successes(mode: UpdateMode, epochs: u32) -> usize {
        let s = build();
        let provider: Arc<dyn EmbeddingProvider> = Arc::new(HashedEmbedder::default());
        let cfg = PipelineConfig {
            update_mode: mode,
            epochs,
            ..PipelineConfig::default()
        };
        let pipeline = Pipeline::new(Backends::uniform(Arc::new(s.script.clone())), cfg);
        let out = run_epoch_loop(&pipeline, &s.tasks, ApiRegistry::new(), s.seed_library(provider)).unwrap();
        out.metrics.counts.successes
    }

    #[test]
    fn ordering_of_update_modes() {
        assert_eq!(frozen_successes(UpdateMode::None, 0), 5);
        assert_eq!(frozen_successes(UpdateMode::Append, 1), 7);
        assert_eq!(frozen_successes(UpdateMode::AppendDelete, 1), 10);
    }

    #[test]
    fn cup_demo_is_not_a_duplicate_of_seed_demos() {
        let e = HashedEmbedder::default();
        let cup = e.embed(CUP_DESCRIPTION).unwrap();
        for d in build().seed_demos {
            assert!(cosine_sim(&cup, &e.embed(&d.task_description).unwrap()) < 0.9);
        }
    }
}
