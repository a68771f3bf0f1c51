//! Seeded task generator. Instructions are built clause by clause; every
//! clause is simulated on the evolving world before it is accepted, so the
//! ground-truth code always runs and the goal is its final state.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use super::{assign_complexity, Dataset, DATASET_VERSION};
use crate::lang::{format, interpret, parse, ApiRegistry};
use crate::pipeline::{Implication, TaskSpec};
use crate::world::{spawn_world, GoalState, ScenarioConfig, WorldState, BLOCK_HEIGHT};

const MAX_CLAUSES: usize = 4;
const CLAUSE_ATTEMPTS: usize = 40;

/// Paraphrases for colors and shapes, keyed by their canonical names.
#[derive(Debug, Clone, Deserialize)]
pub struct Lexicon {
    pub colors: BTreeMap<String, Vec<String>>,
    pub shapes: BTreeMap<String, Vec<String>>,
}

impl Lexicon {
    pub fn bundled() -> Self {
        serde_json::from_str(include_str!("../../assets/lexicon.json")).expect("bundled lexicon is valid")
    }
}

#[derive(Debug, Clone)]
struct Segment {
    task: String,
    code: String,
}

#[derive(Debug, Clone)]
struct Clause {
    text: String,
    segments: Vec<Segment>,
    tags: BTreeSet<Implication>,
    moves_gripper: bool,
    mass_template: Option<MassTemplate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum MassTemplate {
    LightestToCup,
    HeaviestOnFixed,
    LightestOnHeaviest,
}

struct Ctx<'a> {
    initial: &'a WorldState,
    lex: &'a Lexicon,
}

fn seg(task: impl Into<String>, code: impl Into<String>) -> Segment {
    Segment {
        task: task.into(),
        code: code.into(),
    }
}

fn movable_blocks(w: &WorldState) -> Vec<String> {
    w.objects
        .values()
        .filter(|o| !o.is_cup() && !o.fixed)
        .map(|o| o.name.clone())
        .collect()
}

fn all_blocks(w: &WorldState) -> Vec<String> {
    w.objects.values().filter(|o| !o.is_cup()).map(|o| o.name.clone()).collect()
}

fn cups(w: &WorldState) -> Vec<String> {
    w.objects.values().filter(|o| o.is_cup()).map(|o| o.name.clone()).collect()
}

/// Name of the block that is strictly extreme under `key`, if unique.
fn unique_extreme(w: &WorldState, key: impl Fn(&crate::world::ObjectState) -> f64) -> Option<String> {
    let mut scored: Vec<(f64, &str)> = w
        .objects
        .values()
        .filter(|o| !o.is_cup())
        .map(|o| (key(o), o.name.as_str()))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    match scored.as_slice() {
        [first, second, ..] if first.0 - second.0 > 1e-9 => Some(first.1.to_string()),
        [only] => Some(only.1.to_string()),
        _ => None,
    }
}

impl Ctx<'_> {
    /// A noun phrase for block `name`, with the implication it introduces.
    fn refer_block(&self, rng: &mut ChaCha8Rng, name: &str) -> (String, Option<Implication>) {
        let obj = &self.initial.objects[name];
        let mut options: Vec<(String, Option<Implication>)> = vec![(name.to_string(), None)];
        if let Some(words) = self.lex.colors.get(obj.color.as_str()) {
            let w = words.choose(rng).expect("non-empty paraphrase list");
            options.push((format!("the {w} block"), Some(Implication::Color)));
        }
        let same_shape = self
            .initial
            .objects
            .values()
            .filter(|o| !o.is_cup() && o.shape == obj.shape)
            .count();
        if same_shape == 1 {
            if let Some(words) = self.lex.shapes.get(obj.shape.as_str()) {
                let w = words.choose(rng).expect("non-empty paraphrase list");
                options.push((format!("the {w} block"), Some(Implication::Geometry)));
            }
        }
        let robot_dist = |o: &crate::world::ObjectState| o.position.x.hypot(o.position.y);
        let relative: [(&str, Option<String>); 4] = [
            ("the leftmost block", unique_extreme(self.initial, |o| o.position.y)),
            ("the rightmost block", unique_extreme(self.initial, |o| -o.position.y)),
            ("the block closest to the robot", unique_extreme(self.initial, |o| -robot_dist(o))),
            ("the block farthest from the robot", unique_extreme(self.initial, robot_dist)),
        ];
        for (phrase, who) in relative {
            if who.as_deref() == Some(name) {
                options.push((phrase.to_string(), Some(Implication::RelativePosition)));
            }
        }
        options.choose(rng).cloned().expect("at least the plain name")
    }

    fn refer_cup(&self, rng: &mut ChaCha8Rng, name: &str) -> (String, Option<Implication>) {
        let obj = &self.initial.objects[name];
        if rng.gen_bool(0.5) {
            if let Some(words) = self.lex.colors.get(obj.color.as_str()) {
                let w = words.choose(rng).expect("non-empty paraphrase list");
                return (format!("the {w} cup"), Some(Implication::Color));
            }
        }
        (name.to_string(), None)
    }
}

fn clause(text: String, segments: Vec<Segment>, tags: impl IntoIterator<Item = Option<Implication>>) -> Clause {
    Clause {
        text,
        segments,
        tags: tags.into_iter().flatten().collect(),
        moves_gripper: false,
        mass_template: None,
    }
}

fn place_in_cup(ctx: &Ctx, rng: &mut ChaCha8Rng, sim: &WorldState) -> Option<Clause> {
    let block = movable_blocks(sim).choose(rng)?.clone();
    let cup = cups(sim).choose(rng)?.clone();
    let (bref, bt) = ctx.refer_block(rng, &block);
    let (cref, ct) = ctx.refer_cup(rng, &cup);
    Some(clause(
        format!("put {bref} in {cref}"),
        vec![
            seg(format!("pick up {block}"), format!("pick(\"{block}\")")),
            seg(format!("place it in {cup}"), format!("place_on(\"{cup}\")")),
        ],
        [bt, ct],
    ))
}

fn stack(ctx: &Ctx, rng: &mut ChaCha8Rng, sim: &WorldState) -> Option<Clause> {
    let top = movable_blocks(sim).choose(rng)?.clone();
    let bases: Vec<String> = all_blocks(sim).into_iter().filter(|b| *b != top).collect();
    let base = bases.choose(rng)?.clone();
    let (tref, tt) = ctx.refer_block(rng, &top);
    let (bref, bt) = ctx.refer_block(rng, &base);
    if tref == bref {
        return None;
    }
    Some(clause(
        format!("stack {tref} on {bref}"),
        vec![
            seg(format!("pick up {top}"), format!("pick(\"{top}\")")),
            seg(format!("place it on {base}"), format!("place_on(\"{base}\")")),
        ],
        [tt, bt],
    ))
}

fn shift(ctx: &Ctx, rng: &mut ChaCha8Rng, sim: &WorldState) -> Option<Clause> {
    let on_table: Vec<String> = movable_blocks(sim)
        .into_iter()
        .filter(|b| (sim.objects[b].position.z - BLOCK_HEIGHT / 2.0).abs() < 1e-9)
        .collect();
    let block = on_table.choose(rng)?.clone();
    let d: f64 = *[0.05, 0.1].choose(rng)?;
    let (dir, phrase, dx, dy) = *[
        ("forward", "forward", d, 0.0),
        ("backward", "backward", -d, 0.0),
        ("left", "to the left", 0.0, d),
        ("right", "to the right", 0.0, -d),
    ]
    .choose(rng)?;
    let (bref, bt) = ctx.refer_block(rng, &block);
    Some(clause(
        format!("slide {bref} {} cm {phrase}", (d * 100.0).round() as i64),
        vec![
            seg(format!("pick up {block}"), format!("pick(\"{block}\")")),
            seg(format!("Move the gripper {d} m {dir}"), format!("move({dx}, {dy}, 0)")),
            seg(
                format!("put {block} down at the gripper position"),
                format!("pose = get_obj_pose(\"{block}\")\nplace_at(pose.x, pose.y, pose.z)"),
            ),
        ],
        [bt],
    ))
}

fn raise(_ctx: &Ctx, rng: &mut ChaCha8Rng, _sim: &WorldState) -> Option<Clause> {
    let d: f64 = *[0.05, 0.1].choose(rng)?;
    let mut c = clause(
        format!("raise the gripper {} cm", (d * 100.0).round() as i64),
        vec![seg(format!("Move the gripper {d} m up"), format!("move(0, 0, {d})"))],
        [],
    );
    c.moves_gripper = true;
    Some(c)
}

fn tower(ctx: &Ctx, rng: &mut ChaCha8Rng, sim: &WorldState) -> Option<Clause> {
    let mut movable = movable_blocks(sim);
    movable.shuffle(rng);
    let (mid, top) = (movable.first()?.clone(), movable.get(1)?.clone());
    let bases: Vec<String> = all_blocks(sim).into_iter().filter(|b| *b != mid && *b != top).collect();
    let base = bases.choose(rng)?.clone();
    let refs: Vec<(String, Option<Implication>)> = [&base, &mid, &top].iter().map(|b| ctx.refer_block(rng, b)).collect();
    if refs[0].0 == refs[1].0 || refs[1].0 == refs[2].0 || refs[0].0 == refs[2].0 {
        return None;
    }
    Some(clause(
        format!(
            "build a tower with {} at the bottom, {} in the middle and {} on top",
            refs[0].0, refs[1].0, refs[2].0
        ),
        vec![
            seg(format!("pick up {mid}"), format!("pick(\"{mid}\")")),
            seg(format!("place it on {base}"), format!("place_on(\"{base}\")")),
            seg(format!("pick up {top}"), format!("pick(\"{top}\")")),
            seg(format!("place it on {mid}"), format!("place_on(\"{mid}\")")),
        ],
        refs.into_iter().map(|r| r.1),
    ))
}

fn weigh() -> Segment {
    seg(
        "read the masses of block1, block2 and block3",
        "m1 = get_obj_mass(\"block1\")\nm2 = get_obj_mass(\"block2\")\nm3 = get_obj_mass(\"block3\")",
    )
}

/// Nested comparison picking the extreme block; `op` is `<` for the
/// lightest and `>` for the heaviest.
fn extreme_pick(op: &str) -> String {
    format!(
        "if m1 {op} m2:\n    if m1 {op} m3:\n        pick(\"block1\")\n    else:\n        pick(\"block3\")\n    end\nelse:\n    if m2 {op} m3:\n        pick(\"block2\")\n    else:\n        pick(\"block3\")\n    end\nend"
    )
}

fn mass_clause(ctx: &Ctx, rng: &mut ChaCha8Rng, sim: &WorldState, which: MassTemplate) -> Option<Clause> {
    let mut c = match which {
        MassTemplate::LightestToCup => {
            let cup = cups(sim).choose(rng)?.clone();
            let (cref, ct) = ctx.refer_cup(rng, &cup);
            clause(
                format!("put the lightest block in {cref}"),
                vec![
                    weigh(),
                    seg("pick up the lightest of block1, block2 and block3", extreme_pick("<")),
                    seg(format!("place it in {cup}"), format!("place_on(\"{cup}\")")),
                ],
                [Some(Implication::Mass), ct],
            )
        }
        MassTemplate::HeaviestOnFixed => {
            let (fref, ft) = ctx.refer_block(rng, "fixed_block");
            clause(
                format!("stack the heaviest of the movable blocks on {fref}"),
                vec![
                    weigh(),
                    seg("pick up the heaviest of block1, block2 and block3", extreme_pick(">")),
                    seg("place it on fixed_block", "place_on(\"fixed_block\")"),
                ],
                [Some(Implication::Mass), ft],
            )
        }
        MassTemplate::LightestOnHeaviest => clause(
            "put the lightest movable block on top of the heaviest movable block".into(),
            vec![
                weigh(),
                seg(
                    "find the lightest and the heaviest of block1, block2 and block3",
                    "light = \"block1\"\nlm = m1\nheavy = \"block1\"\nhm = m1\n\
                     if m2 < lm:\n    light = \"block2\"\n    lm = m2\nend\n\
                     if m3 < lm:\n    light = \"block3\"\n    lm = m3\nend\n\
                     if m2 > hm:\n    heavy = \"block2\"\n    hm = m2\nend\n\
                     if m3 > hm:\n    heavy = \"block3\"\n    hm = m3\nend",
                ),
                seg("pick up the lightest block", "pick(light)"),
                seg("place it on the heaviest block", "place_on(heavy)"),
            ],
            [Some(Implication::Mass)],
        ),
    };
    c.mass_template = Some(which);
    Some(c)
}

fn sample_clause(
    ctx: &Ctx,
    rng: &mut ChaCha8Rng,
    sim: &WorldState,
    scenario: ScenarioConfig,
    need_mass: bool,
    used_mass: &[MassTemplate],
) -> Option<Clause> {
    let mass_left: Vec<MassTemplate> = [
        MassTemplate::LightestToCup,
        MassTemplate::HeaviestOnFixed,
        MassTemplate::LightestOnHeaviest,
    ]
    .into_iter()
    .filter(|t| !used_mass.contains(t))
    .collect();
    let use_mass = scenario == ScenarioConfig::Partial && !mass_left.is_empty() && (need_mass || rng.gen_bool(0.3));
    if use_mass {
        let which = *mass_left.choose(rng)?;
        return mass_clause(ctx, rng, sim, which);
    }
    match rng.gen_range(0..10) {
        0..=2 => place_in_cup(ctx, rng, sim),
        3..=5 => stack(ctx, rng, sim),
        6 | 7 => shift(ctx, rng, sim),
        8 => raise(ctx, rng, sim),
        _ => tower(ctx, rng, sim),
    }
}

fn clause_code(c: &Clause) -> String {
    c.segments.iter().map(|s| format!("{}\n", s.code)).collect()
}

/// Runs the clause on a copy of `sim`; returns the new world if it executed
/// and changed something.
fn simulate(c: &Clause, sim: &WorldState) -> Option<WorldState> {
    let program = parse(&clause_code(c)).ok()?;
    let mut next = sim.clone();
    interpret(&program, &mut next, &ApiRegistry::new()).ok()?;
    let moved = next
        .objects
        .iter()
        .any(|(name, o)| o.position != sim.objects[name].position);
    let gripper_moved = next.gripper.position != sim.gripper.position;
    (moved || (c.moves_gripper && gripper_moved)).then_some(next)
}

fn join_instruction(parts: &[String]) -> String {
    parts.join(", then ")
}

/// Builds one task, or `None` if no clause could be placed.
fn generate_task(
    ctx_lex: &Lexicon,
    rng: &mut ChaCha8Rng,
    id: String,
    scenario: ScenarioConfig,
    world_seed: u64,
) -> Option<TaskSpec> {
    let initial = spawn_world(scenario, world_seed);
    let ctx = Ctx {
        initial: &initial,
        lex: ctx_lex,
    };
    let target = rng.gen_range(1..=MAX_CLAUSES);
    let mut sim = initial.clone();
    let mut accepted: Vec<Clause> = Vec::new();
    let mut code_for: BTreeMap<String, String> = BTreeMap::new();

    while accepted.len() < target {
        let used: Vec<MassTemplate> = accepted.iter().filter_map(|c| c.mass_template).collect();
        let need_mass = scenario == ScenarioConfig::Partial && used.is_empty();
        let mut placed = false;
        for _ in 0..CLAUSE_ATTEMPTS {
            let Some(c) = sample_clause(&ctx, rng, &sim, scenario, need_mass, &used) else {
                continue;
            };
            let consistent = c
                .segments
                .iter()
                .all(|s| code_for.get(&s.task).is_none_or(|code| *code == s.code));
            if !consistent {
                continue;
            }
            if let Some(next) = simulate(&c, &sim) {
                for s in &c.segments {
                    code_for.insert(s.task.clone(), s.code.clone());
                }
                sim = next;
                accepted.push(c);
                placed = true;
                break;
            }
        }
        if !placed {
            break;
        }
    }
    if accepted.is_empty() {
        return None;
    }

    let raw: String = accepted
        .iter()
        .flat_map(|c| c.segments.iter())
        .map(|s| format!("# {}\n{}\n", s.task, s.code))
        .collect();
    let gt_code = format(&parse(&raw).expect("generated code parses"));
    let mut final_world = initial.clone();
    interpret(&parse(&gt_code).expect("formatted code parses"), &mut final_world, &ApiRegistry::new())
        .expect("simulated clauses replay");
    let track_gripper = accepted.iter().any(|c| c.moves_gripper);
    let texts: Vec<String> = accepted.iter().map(|c| c.text.clone()).collect();
    let mut task = TaskSpec {
        id,
        instruction: join_instruction(&texts),
        scenario,
        seed: world_seed,
        goal: GoalState::from_world(&final_world, track_gripper),
        gt_code: Some(gt_code),
        implication: accepted.iter().flat_map(|c| c.tags.iter().copied()).collect(),
        complexity: 1,
    };
    task.complexity = assign_complexity(&task).expect("ground truth runs");
    Some(task)
}

/// Generates `n_observable` observable tasks followed by `n_partial`
/// partially observable ones. Output depends only on the arguments.
pub fn generate(seed: u64, n_observable: usize, n_partial: usize) -> Dataset {
    let lexicon = Lexicon::bundled();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tasks = Vec::with_capacity(n_observable + n_partial);
    let plan = std::iter::repeat_n((ScenarioConfig::Observable, "obs"), n_observable)
        .chain(std::iter::repeat_n((ScenarioConfig::Partial, "par"), n_partial));
    let mut counters: BTreeMap<&str, usize> = BTreeMap::new();
    for (scenario, prefix) in plan {
        let n = counters.entry(prefix).or_insert(0);
        let id = format!("{prefix}-{:04}", *n);
        *n += 1;
        loop {
            let world_seed = u64::from(rng.gen::<u32>());
            if let Some(task) = generate_task(&lexicon, &mut rng, id.clone(), scenario, world_seed) {
                tasks.push(task);
                break;
            }
        }
    }
    Dataset {
        version: DATASET_VERSION,
        generator_seed: seed,
        tasks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{Color, Observability, Shape};

    #[test]
    fn deterministic() {
        assert_eq!(generate(3, 5, 3), generate(3, 5, 3));
        assert_ne!(generate(3, 5, 3), generate(4, 5, 3));
    }

    #[test]
    fn partial_tasks_read_masses_and_branch() {
        let d = generate(11, 0, 20);
        for t in &d.tasks {
            assert!(t.implication.contains(&Implication::Mass), "{}", t.instruction);
            let code = t.gt_code.as_ref().unwrap();
            assert!(code.matches("get_obj_mass").count() >= 3);
            assert!(code.contains("if "));
            assert_eq!(spawn_world(t.scenario, t.seed).observability, Observability::Partial);
        }
        assert!(d.tasks.iter().any(|t| t.instruction.contains("lightest")));
    }

    #[test]
    fn banana_means_yellow() {
        let d = generate(5, 150, 0);
        let banana: Vec<&TaskSpec> = d
            .tasks
            .iter()
            .filter(|t| t.instruction.contains("banana colored block"))
            .collect();
        assert!(!banana.is_empty());
        for t in banana {
            assert!(t.gt_code.as_ref().unwrap().contains(&format!("\"{}_block\"", Color::Yellow.as_str())));
            assert!(t.implication.contains(&Implication::Color));
        }
    }

    #[test]
    fn shape_references_are_unique() {
        let d = generate(9, 80, 0);
        let lex = Lexicon::bundled();
        for t in &d.tasks {
            let w = spawn_world(t.scenario, t.seed);
            for (shape, words) in &lex.shapes {
                for word in words {
                    if t.instruction.contains(&format!("the {word} block")) {
                        let n = w.objects.values().filter(|o| o.shape.as_str() == shape && o.shape != Shape::Cup).count();
                        assert_eq!(n, 1, "{}", t.instruction);
                    }
                }
            }
        }
    }

    #[test]
    fn clause_counts_and_levels_in_range() {
        let d = generate(21, 40, 10);
        for t in &d.tasks {
            let clauses = t.instruction.matches(", then ").count() + 1;
            assert!((1..=MAX_CLAUSES).contains(&clauses));
            assert!((1..=7).contains(&t.complexity));
        }
    }
}
