//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use triples_core::bench::{ablation, compute_metrics, generate, verify_dataset};
use triples_core::gateway::{ChatBackend, ChatMessage, FaultyBackend, OracleBackend, RemoteBackend, RemoteConfig};
use triples_core::lang::{format, interpret, parse, static_check, ApiRegistry, DiagnosticCode};
use triples_core::pipeline::{
    evaluate, run_episode, run_epoch_loop, Backends, EpisodeResult, Pipeline, PipelineConfig, RunReport, TaskSpec,
    UpdateMode,
};
use triples_core::store::{seed_library, DemoLibrary, DemoSource, Demonstration, EmbeddingProvider, HashedEmbedder};
use triples_core::world::{spawn_world, GoalState, ScenarioConfig, Vec3, WorldState};

const ORACLE_SEED: u64 = 7;
const ORACLE_OBSERVABLE: usize = 60;
const ORACLE_PARTIAL: usize = 20;
const ORACLE_TIME_LIMIT: Duration = Duration::from_secs(30);
const EQ_TOLERANCE: f64 = 1e-9;
const EVAL_PAIRS: usize = 1_000;
const RETRIEVAL_LIBRARIES: usize = 500;
const RETRIEVAL_MAX_N: usize = 1_000;
const LAW_TRIALS: usize = 2_000;
const CORPUS_SIZE: usize = 50;
const FUZZ_CASES: usize = 10_000;
const GENERATOR_SEEDS: usize = 20;
const GENERATOR_SIZES: (usize, usize) = (100, 30);

type Check = fn() -> Result<String, String>;

fn main() {
    let criteria: [(&str, Check); 10] = [
        ("oracle end-to-end", oracle_end_to_end),
        ("evaluation matches brute force", evaluation_equivalence),
        ("retrieval matches exhaustive scan", retrieval_equivalence),
        ("compiler feedback loop", feedback_loop),
        ("library update ordering", update_ordering),
        ("SR/ESR law", sr_esr_law),
        ("parser round trip and checker soundness", parser_suite),
        ("bench determinism", determinism),
        ("generator soundness", generator_soundness),
        ("remote backend conformance", remote_conformance),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            Err(format!("panic: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(reason) => {
                failed += 1;
                println!("FAIL  {name}: {reason}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn provider() -> Arc<dyn EmbeddingProvider> {
    Arc::new(HashedEmbedder::default())
}

fn oracle_pipeline(config: PipelineConfig) -> Pipeline {
    Pipeline::new(Backends::uniform(Arc::new(OracleBackend::new())), config)
}

fn oracle_end_to_end() -> Result<String, String> {
    let dataset = generate(ORACLE_SEED, ORACLE_OBSERVABLE, ORACLE_PARTIAL);
    let cfg = PipelineConfig::default();
    let eps = cfg.epsilon;
    let pipeline = oracle_pipeline(cfg);
    let start = Instant::now();
    let out = run_epoch_loop(&pipeline, &dataset.tasks, ApiRegistry::new(), seed_library(provider()))?;
    let elapsed = start.elapsed();
    let m = &out.metrics;
    ensure(m.counts.total == ORACLE_OBSERVABLE + ORACLE_PARTIAL, || format!("{} tasks", m.counts.total))?;
    ensure(m.sr == 1.0 && m.esr == 1.0, || format!("SR {} ESR {}", m.sr, m.esr))?;
    if let Some(r) = out.results.iter().find(|r| r.err_value > eps) {
        return Err(format!("task {} has Err {} > {eps}", r.task_id, r.err_value));
    }
    ensure(elapsed < ORACLE_TIME_LIMIT, || format!("took {elapsed:?}"))?;
    Ok(format!("SR 1.0, ESR 1.0 on {} tasks in {:.2?}", m.counts.total, elapsed))
}

fn random_point(rng: &mut ChaCha8Rng) -> Vec3 {
    Vec3::new(rng.gen_range(0.0..0.6), rng.gen_range(-0.3..0.3), rng.gen_range(0.0..0.4))
}

fn brute_force_error(world: &WorldState, goal: &GoalState) -> f64 {
    let mut total = 0.0;
    for (name, g) in &goal.object_targets {
        let p = world.objects[name].position;
        let (dx, dy, dz) = (p.x - g.x, p.y - g.y, p.z - g.z);
        total += (dx * dx + dy * dy + dz * dz).sqrt();
    }
    if let Some(g) = goal.gripper_target {
        let p = world.gripper.position;
        total += ((p.x - g.x).powi(2) + (p.y - g.y).powi(2) + (p.z - g.z).powi(2)).sqrt();
    }
    if goal.require_empty_hand && world.gripper.holding.is_some() {
        total += 0.5;
    }
    total
}

fn evaluation_equivalence() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    let mut successes = 0;
    for i in 0..EVAL_PAIRS {
        let scenario = if rng.gen_bool(0.5) { ScenarioConfig::Observable } else { ScenarioConfig::Partial };
        let mut world = spawn_world(scenario, rng.gen());
        let names: Vec<String> = world.objects.keys().cloned().collect();
        for name in &names {
            if rng.gen_bool(0.5) {
                world.objects.get_mut(name).unwrap().position = random_point(&mut rng);
            }
        }
        world.gripper.position = random_point(&mut rng);
        if rng.gen_bool(0.3) {
            world.gripper.holding = names.choose(&mut rng).cloned();
        }
        let mut goal = GoalState::from_world(&world, rng.gen_bool(0.5));
        goal.require_empty_hand = rng.gen_bool(0.5);
        for target in goal.object_targets.values_mut() {
            if rng.gen_bool(0.3) {
                *target = random_point(&mut rng);
            } else if rng.gen_bool(0.3) {
                target.x += rng.gen_range(-0.01..0.01);
            }
        }
        let keep: BTreeMap<String, Vec3> = goal
            .object_targets
            .iter()
            .filter(|_| rng.gen_bool(0.8))
            .map(|(k, v)| (k.clone(), *v))
            .collect();
        goal.object_targets = keep;
        let eps = rng.gen_range(0.0..0.1);
        let (err, ok) = evaluate(&world, &goal, eps).map_err(|e| e.to_string())?;
        let expected = brute_force_error(&world, &goal);
        let diff = (err - expected).abs();
        worst = worst.max(diff);
        ensure(diff <= EQ_TOLERANCE, || format!("pair {i}: {err} vs {expected}"))?;
        ensure(ok == (expected <= eps), || format!("pair {i}: success flag disagrees"))?;
        successes += usize::from(ok);
    }
    Ok(format!("{EVAL_PAIRS} pairs, max deviation {worst:e}, {successes} within epsilon"))
}

const VOCAB: [&str; 12] = [
    "stack", "block", "red", "blue", "cup", "place", "pick", "lighter", "heavy", "move", "left", "onto",
];

fn random_text(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(1..=4);
    (0..n).map(|_| *VOCAB.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn retrieval_equivalence() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let embedder = HashedEmbedder::default();
    let mut queries = 0;
    for lib_i in 0..RETRIEVAL_LIBRARIES {
        let n = if lib_i % 50 == 0 { RETRIEVAL_MAX_N } else { rng.gen_range(1..=200) };
        let mut ids: Vec<u64> = (0..(n as u64 * 3)).collect();
        ids.shuffle(&mut rng);
        let demos: Vec<Demonstration> = ids[..n]
            .iter()
            .map(|&id| Demonstration {
                id,
                task_description: random_text(&mut rng),
                thought: "t".into(),
                examples: "pick(\"red_block\")\n".into(),
                source: DemoSource::Seed,
            })
            .collect();
        let library = DemoLibrary::from_demos(provider(), demos.clone()).map_err(|e| e.to_string())?;
        let query = random_text(&mut rng);
        let q = embedder.embed(&query).map_err(|e| e.to_string())?;
        let mut scored: Vec<(f64, u64)> = demos
            .iter()
            .map(|d| {
                let e = embedder.embed(&d.task_description).unwrap();
                (dot(q.components(), e.components()), d.id)
            })
            .collect();
        scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        for k in [1, 3, 10, n + 5] {
            let got: Vec<u64> = library
                .retrieve_top_k(&query, k)
                .map_err(|e| e.to_string())?
                .iter()
                .map(|d| d.id)
                .collect();
            let want: Vec<u64> = scored.iter().take(k).map(|s| s.1).collect();
            ensure(got == want, || format!("library {lib_i} (n={n}, k={k}): {got:?} != {want:?}"))?;
            queries += 1;
        }
    }
    Ok(format!("{RETRIEVAL_LIBRARIES} libraries, {queries} queries identical"))
}

fn feedback_task() -> TaskSpec {
    generate(ORACLE_SEED, 3, 0).tasks.remove(0)
}

fn feedback_loop() -> Result<String, String> {
    let task = feedback_task();
    let cfg = PipelineConfig {
        max_retries: 3,
        ..PipelineConfig::default()
    };
    let mut seen = Vec::new();
    for faults in 1..=4usize {
        let faulty = Arc::new(FaultyBackend::new(Arc::new(OracleBackend::new()), faults));
        let pipeline = Pipeline::new(Backends::uniform(faulty), cfg.clone());
        let (r, _) = run_episode(&pipeline, &task, &ApiRegistry::new(), &seed_library(provider()));
        if faults <= 3 {
            ensure(r.success && r.retries_used == faults as u32, || {
                format!("n={faults}: success {} retries {}", r.success, r.retries_used)
            })?;
        } else {
            ensure(!r.executable && !r.success, || format!("n=4 was executable ({:?})", r.failure))?;
        }
        seen.push(format!("n={faults}:{}", if r.executable { r.retries_used.to_string() } else { "non-exec".into() }));
    }
    Ok(seen.join(" "))
}

fn ablation_successes(mode: UpdateMode, epochs: u32) -> Result<usize, String> {
    let scenario = ablation::build();
    let cfg = PipelineConfig {
        update_mode: mode,
        epochs,
        ..PipelineConfig::default()
    };
    let pipeline = Pipeline::new(Backends::uniform(Arc::new(scenario.script.clone())), cfg);
    let out = run_epoch_loop(&pipeline, &scenario.tasks, ApiRegistry::new(), scenario.seed_library(provider()))?;
    Ok(out.metrics.counts.successes)
}

fn update_ordering() -> Result<String, String> {
    let none = ablation_successes(UpdateMode::None, 0)?;
    let append = ablation_successes(UpdateMode::Append, 1)?;
    let delete = ablation_successes(UpdateMode::AppendDelete, 1)?;
    let line = format!("none {none}/10, append {append}/10, append_delete {delete}/10");
    ensure(none < append && append < delete && delete == 10, || line.clone())?;
    Ok(line)
}

fn random_result(rng: &mut ChaCha8Rng, i: usize) -> EpisodeResult {
    let executable = rng.gen_bool(0.8);
    EpisodeResult {
        task_id: format!("t{i}"),
        minimal_tasks: Vec::new(),
        code: String::new(),
        executable,
        success: executable && rng.gen_bool(0.7),
        err_value: rng.gen_range(0.0..0.2),
        retries_used: 0,
        trace: None,
        learned: None,
        failure: None,
    }
}

fn sr_esr_law() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut perfect = 0;
    for trial in 0..LAW_TRIALS {
        let n = rng.gen_range(1..=12);
        let results: Vec<EpisodeResult> = (0..n).map(|i| random_result(&mut rng, i)).collect();
        let levels: Vec<u8> = (0..n).map(|_| rng.gen_range(1..=7)).collect();
        let m = compute_metrics(&results, &levels).map_err(|e| e.to_string())?;
        ensure(m.sr <= m.esr + 1e-12, || format!("trial {trial}: SR {} > ESR {}", m.sr, m.esr))?;
        if m.sr == 1.0 {
            perfect += 1;
            ensure(m.esr == 1.0, || format!("trial {trial}: SR 1 with ESR {}", m.esr))?;
        }
    }
    Ok(format!("{LAW_TRIALS} result sets, {perfect} with SR = 1"))
}

fn load_corpus() -> Vec<(String, String)> {
    let text = include_str!("data/roundtrip_corpus.txt");
    let mut out: Vec<(String, String)> = Vec::new();
    for line in text.lines() {
        if let Some(name) = line.strip_prefix("=== ") {
            out.push((name.to_string(), String::new()));
        } else if let Some((_, body)) = out.last_mut() {
            body.push_str(line);
            body.push('\n');
        }
    }
    out
}

const FUZZ_FUNCS: [(&str, usize); 9] = [
    ("pick", 1),
    ("place_on", 1),
    ("place_at", 3),
    ("move", 3),
    ("get_obj_pose", 1),
    ("get_obj_mass", 1),
    ("stack_object_on_object", 2),
    ("helper", 1),
    ("teleport", 1),
];

/// Random program source over the objects of one world. Most calls are well
/// formed; a minority use unknown names, wrong arities or stray types.
struct Fuzzer<'a> {
    rng: &'a mut ChaCha8Rng,
    objects: Vec<String>,
}

impl Fuzzer<'_> {
    fn object(&mut self) -> String {
        if self.rng.gen_bool(0.05) {
            "\"ghost_block\"".into()
        } else if self.rng.gen_bool(0.2) {
            "obj".into()
        } else {
            format!("\"{}\"", self.objects.choose(self.rng).unwrap())
        }
    }

    fn number(&mut self, depth: u32) -> String {
        match self.rng.gen_range(0..if depth > 1 { 2 } else { 5 }) {
            0 => format!("{}", self.rng.gen_range(-5..5) as f64 / 100.0),
            1 => format!("p.{}", ["x", "y", "z"].choose(self.rng).unwrap()),
            2 => "m".into(),
            3 => format!("get_obj_mass({})", self.object()),
            _ => format!("{} + {}", self.number(depth + 1), self.number(depth + 1)),
        }
    }

    fn any_expr(&mut self, depth: u32) -> String {
        match self.rng.gen_range(0..4) {
            0 => self.object(),
            1 => self.number(depth),
            2 => "p".into(),
            _ => self.call(depth + 1),
        }
    }

    fn call(&mut self, depth: u32) -> String {
        let (name, arity) = *FUZZ_FUNCS.choose(self.rng).unwrap();
        if self.rng.gen_bool(0.1) {
            let n = self.rng.gen_range(0..=3);
            let args: Vec<String> = (0..n).map(|_| self.any_expr(depth + 1)).collect();
            return format!("{name}({})", args.join(", "));
        }
        let args: Vec<String> = match name {
            "place_at" | "move" => (0..arity).map(|_| self.number(depth + 1)).collect(),
            _ => (0..arity).map(|_| self.object()).collect(),
        };
        format!("{name}({})", args.join(", "))
    }

    fn block(&mut self, indent: usize, depth: u32, out: &mut String) {
        let pad = "    ".repeat(indent);
        for _ in 0..self.rng.gen_range(1..=4) {
            match self.rng.gen_range(0..10) {
                0..=5 => {
                    let c = self.call(depth);
                    out.push_str(&format!("{pad}{c}\n"));
                }
                6 => {
                    let o = self.object();
                    out.push_str(&format!("{pad}p = get_obj_pose({o})\n"));
                }
                7 => {
                    let n = self.number(depth);
                    out.push_str(&format!("{pad}m = {n}\n"));
                }
                8 if depth < 2 => {
                    let (a, b) = (self.number(depth + 1), self.number(depth + 1));
                    out.push_str(&format!("{pad}if {a} < {b}:\n"));
                    self.block(indent + 1, depth + 1, out);
                    if self.rng.gen_bool(0.5) {
                        out.push_str(&format!("{pad}else:\n"));
                        self.block(indent + 1, depth + 1, out);
                    }
                    out.push_str(&format!("{pad}end\n"));
                }
                _ => out.push_str(&format!("{pad}# note\n")),
            }
        }
    }

    fn program(&mut self) -> String {
        let first = self.objects[0].clone();
        let mut src = format!("p = get_obj_pose(\"{first}\")\nm = 0.02\nobj = \"{first}\"\n");
        let def_at = self.rng.gen_range(0..3);
        for part in 0..3 {
            if part == def_at && self.rng.gen_bool(0.6) {
                src.push_str("def helper(obj):\n    p = get_obj_pose(obj)\n    m = 0.02\n");
                self.block(1, 1, &mut src);
                src.push_str("end\n");
            }
            self.block(0, 0, &mut src);
        }
        src
    }
}

fn parser_suite() -> Result<String, String> {
    let corpus = load_corpus();
    ensure(corpus.len() == CORPUS_SIZE, || format!("corpus has {} programs", corpus.len()))?;
    for (name, src) in &corpus {
        let p = parse(src).map_err(|d| format!("'{name}' does not parse: {d}"))?;
        let printed = format(&p);
        let q = parse(&printed).map_err(|d| format!("'{name}' reprint does not parse: {d}"))?;
        ensure(p == q, || format!("'{name}' changed after printing"))?;
        ensure(format(&q) == printed, || format!("'{name}' printing is not idempotent"))?;
    }

    let mut registry = ApiRegistry::new();
    registry
        .register_api("def stack_object_on_object(obj, base):\n    pick(obj)\n    place_on(base)\nend")
        .map_err(|d| d.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut parsed, mut clean, mut executed_clean) = (0, 0, 0);
    for case in 0..FUZZ_CASES {
        let scenario = if rng.gen_bool(0.5) { ScenarioConfig::Observable } else { ScenarioConfig::Partial };
        let mut world = spawn_world(scenario, rng.gen());
        let objects = world.objects.keys().cloned().collect();
        let src = Fuzzer { rng: &mut rng, objects }.program();
        let Ok(program) = parse(&src) else { continue };
        parsed += 1;
        let diags = static_check(&program, &registry, &world);
        let call_checked = diags
            .iter()
            .any(|d| matches!(d.code, DiagnosticCode::UnknownApi | DiagnosticCode::Arity));
        if diags.is_empty() {
            clean += 1;
        }
        if let Err(f) = interpret(&program, &mut world, &registry) {
            let code = f.diagnostic.code;
            if matches!(code, DiagnosticCode::UnknownApi | DiagnosticCode::Arity) {
                ensure(call_checked, || {
                    format!("case {case}: runtime {} not caught statically\n{src}", code.as_str())
                })?;
            }
        } else if diags.is_empty() {
            executed_clean += 1;
        }
    }
    ensure(parsed == FUZZ_CASES, || format!("only {parsed} of {FUZZ_CASES} fuzz programs parsed"))?;
    Ok(format!(
        "{CORPUS_SIZE} programs round-trip; {FUZZ_CASES} fuzz cases, {clean} statically clean, {executed_clean} ran to completion"
    ))
}

fn report_json(cfg: PipelineConfig, backend: Arc<dyn ChatBackend>, tasks: &[TaskSpec], library: DemoLibrary) -> Result<String, String> {
    let pipeline = Pipeline::new(Backends::uniform(backend), cfg.clone());
    let out = run_epoch_loop(&pipeline, tasks, ApiRegistry::new(), library)?;
    Ok(RunReport::new(&cfg, &out, true).to_json())
}

fn determinism() -> Result<String, String> {
    let dataset = generate(11, 20, 10);
    let parallel = PipelineConfig {
        sequential: false,
        update_mode: UpdateMode::AppendDelete,
        epochs: 1,
        ..PipelineConfig::default()
    };
    let a = report_json(parallel.clone(), Arc::new(OracleBackend::new()), &dataset.tasks, seed_library(provider()))?;
    let b = report_json(parallel, Arc::new(OracleBackend::new()), &dataset.tasks, seed_library(provider()))?;
    ensure(a == b, || "oracle reports differ".into())?;

    let scenario = ablation::build();
    let cfg = PipelineConfig {
        update_mode: UpdateMode::Append,
        epochs: 2,
        ..PipelineConfig::default()
    };
    let run = || {
        let s = ablation::build();
        report_json(cfg.clone(), Arc::new(s.script.clone()), &s.tasks, s.seed_library(provider()))
    };
    let (c, d) = (run()?, run()?);
    ensure(c == d, || "scripted reports differ".into())?;
    ensure(scenario.tasks.len() == 10, || "unexpected scenario size".into())?;
    Ok(format!("oracle report {} bytes, scripted report {} bytes, both identical on repeat", a.len(), c.len()))
}

fn generator_soundness() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let eps = PipelineConfig::default().epsilon;
    let mut seeds = Vec::new();
    for _ in 0..GENERATOR_SEEDS {
        let seed: u64 = rng.gen();
        let dataset = generate(seed, GENERATOR_SIZES.0, GENERATOR_SIZES.1);
        ensure(dataset.tasks.len() == GENERATOR_SIZES.0 + GENERATOR_SIZES.1, || format!("seed {seed}: wrong size"))?;
        let problems = verify_dataset(&dataset, eps);
        ensure(problems.is_empty(), || format!("seed {seed}: {}", problems.join("; ")))?;
        seeds.push(seed);
    }
    Ok(format!("{GENERATOR_SEEDS} seeds x {} tasks verified", GENERATOR_SIZES.0 + GENERATOR_SIZES.1))
}

/// Minimal OpenAI-compatible server answering from an oracle that knows `task`.
fn mock_endpoint(task: TaskSpec) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").expect("bind mock server");
    let addr = listener.local_addr().unwrap();
    std::thread::spawn(move || {
        let oracle = OracleBackend::new();
        oracle.on_task_start(&task);
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0usize;
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap_or(0) == 0 {
                    break;
                }
                let lower = line.to_ascii_lowercase();
                if let Some(v) = lower.strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap_or(0);
                }
                if line == "\r\n" {
                    break;
                }
            }
            let mut body = vec![0u8; len];
            if reader.read_exact(&mut body).is_err() {
                continue;
            }
            let request: serde_json::Value = serde_json::from_slice(&body).unwrap_or_default();
            let messages: Vec<ChatMessage> =
                serde_json::from_value(request["messages"].clone()).unwrap_or_default();
            let content = oracle.complete(&messages).unwrap_or_else(|e| e.to_string());
            let reply = serde_json::json!({
                "id": "mock",
                "object": "chat.completion",
                "choices": [{"index": 0, "message": {"role": "assistant", "content": content}, "finish_reason": "stop"}]
            })
            .to_string();
            let _ = write!(
                stream,
                "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}",
                reply.len()
            );
        }
    });
    format!("http://{addr}")
}

fn remote_episode(endpoint: String, model: Option<String>, task: &TaskSpec) -> Result<RunReport, String> {
    let mut config = RemoteConfig {
        endpoint,
        max_retries: 1,
        base_delay_ms: 50,
        ..RemoteConfig::default()
    };
    if let Some(m) = model {
        config.model = m;
    }
    let backend = RemoteBackend::new(&config).map_err(|e| e.to_string())?;
    let cfg = PipelineConfig::default();
    let pipeline = Pipeline::new(Backends::uniform(Arc::new(backend)), cfg.clone());
    let out = run_epoch_loop(&pipeline, std::slice::from_ref(task), ApiRegistry::new(), seed_library(provider()))?;
    let report = RunReport::new(&cfg, &out, true);
    let round: RunReport = serde_json::from_str(&report.to_json()).map_err(|e| e.to_string())?;
    ensure(round == report, || "report does not survive JSON round trip".into())?;
    ensure(report.per_task.len() == 1, || "report must hold one episode".into())?;
    Ok(report)
}

fn remote_conformance() -> Result<String, String> {
    let task = feedback_task();
    let mock = remote_episode(mock_endpoint(task.clone()), None, &task)?;
    ensure(mock.per_task[0].success, || format!("mock episode failed: {:?}", mock.per_task[0].failure))?;
    let live = match std::env::var("TRIPLES_ENDPOINT").ok().filter(|e| !e.is_empty()) {
        Some(endpoint) => {
            let r = remote_episode(endpoint, std::env::var("TRIPLES_MODEL").ok(), &task)?;
            format!("live endpoint episode reported (success={})", r.per_task[0].success)
        }
        None => "live endpoint not configured (set TRIPLES_ENDPOINT)".into(),
    };
    Ok(format!("mock endpoint episode succeeded; {live}"))
}
