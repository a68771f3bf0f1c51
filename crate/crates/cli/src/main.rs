//! `triples`: run instructions, benchmarks, dataset generation and
//! library inspection from the command line.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 task executed but failed
//! (or dataset verification found problems), 3 task code not executable.

mod backend;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use triples_core::bench::{ablation, generate, verify_dataset, Dataset};
use triples_core::lang::ApiRegistry;
use triples_core::pipeline::{
    run_episode, run_epoch_loop, summarize_success, Pipeline, RunReport, TaskSpec,
};
use triples_core::store::{seed_library, DemoLibrary, EmbeddingProvider, HashedEmbedder};
use triples_core::world::{GoalState, ScenarioConfig};

use backend::BackendSpec;
use config::{FileConfig, TunableFlags};

#[derive(Parser, Debug)]
#[command(
    name = "triples",
    version,
    about = "Policy-code generation pipeline for implicative tabletop tasks"
)]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one instruction through the pipeline and print the episode result.
    Run(RunArgs),
    /// Run a dataset with optional library-update epochs and write a report.
    Bench(BenchArgs),
    /// Generate a benchmark dataset (or the update-mode ablation scenario).
    Gen(GenArgs),
    /// Check that every task's ground-truth code reaches its goal.
    Verify(VerifyArgs),
    /// Inspect or export a demonstration library and API registry.
    Lib(LibArgs),
}

#[derive(Args, Debug, Clone)]
struct PipelineArgs {
    /// oracle | scripted:PATH | remote | faulty:N (oracle with N corrupted solve replies per task)
    #[arg(long, default_value = "oracle")]
    backend: String,
    /// OpenAI-compatible endpoint for the remote backend.
    #[arg(long, env = "TRIPLES_ENDPOINT")]
    endpoint: Option<String>,
    /// Model name sent to the remote backend [default: gpt-3.5-turbo]
    #[arg(long)]
    model: Option<String>,
    /// TOML file with pipeline and remote settings; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory with simplify.txt, solve.txt, summarize.txt, supervise.txt overrides.
    #[arg(long)]
    templates: Option<PathBuf>,
    /// Demonstration library to start from [default: bundled seed library]
    #[arg(long)]
    library: Option<PathBuf>,
    /// API registry to start from [default: core APIs only]
    #[arg(long)]
    registry: Option<PathBuf>,
    /// Write the final library here.
    #[arg(long)]
    save_library: Option<PathBuf>,
    /// Write the final registry here.
    #[arg(long)]
    save_registry: Option<PathBuf>,
    #[command(flatten)]
    tunables: TunableFlags,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Instruction text. Overrides the dataset task's instruction when both are given.
    #[arg(long)]
    task: Option<String>,
    /// observable | partial
    #[arg(long, default_value = "observable")]
    scenario: ScenarioConfig,
    /// World seed when no dataset task is given.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Dataset holding the task (required for the oracle backend and for scoring).
    #[arg(long, requires = "task_id")]
    dataset: Option<PathBuf>,
    #[arg(long, requires = "dataset")]
    task_id: Option<String>,
    /// Include the execution trace in the printed result.
    #[arg(long)]
    trace: bool,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Where to write the JSON run report.
    #[arg(long)]
    report: PathBuf,
    /// Worker threads for the frozen pass (1 keeps it sequential).
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Include execution traces in the report.
    #[arg(long)]
    trace: bool,
    /// Directory receiving the library and registry after every pass.
    #[arg(long)]
    snapshots: Option<PathBuf>,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    observable: usize,
    #[arg(long, default_value_t = 20)]
    partial: usize,
    /// Dataset output path.
    #[arg(long)]
    out: PathBuf,
    /// Write the ten-task update-mode ablation instead; also needs --script-out and --library-out.
    #[arg(long, requires_all = ["script_out", "library_out"])]
    ablation: bool,
    #[arg(long)]
    script_out: Option<PathBuf>,
    #[arg(long)]
    library_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    dataset: PathBuf,
    #[arg(long, default_value_t = 0.03)]
    epsilon: f64,
}

#[derive(Args, Debug)]
struct LibArgs {
    /// Library file [default: bundled seed library]
    #[arg(long, global = true)]
    library: Option<PathBuf>,
    /// Registry file [default: core APIs only]
    #[arg(long, global = true)]
    registry: Option<PathBuf>,
    #[command(subcommand)]
    action: LibAction,
}

#[derive(Subcommand, Debug)]
enum LibAction {
    /// List demonstrations and API signatures.
    List,
    /// Print one demonstration in full.
    Show { id: u64 },
    /// Write the library (and optionally the registry) as JSON.
    Export {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        registry_out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(command: Command) -> Result<u8> {
    match command {
        Command::Run(args) => cmd_run(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Gen(args) => cmd_gen(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Lib(args) => cmd_lib(args),
    }
}

fn provider() -> Arc<dyn EmbeddingProvider> {
    Arc::new(HashedEmbedder::default())
}

fn load_stores(
    library: Option<&Path>,
    registry: Option<&Path>,
) -> Result<(DemoLibrary, ApiRegistry)> {
    let lib = match library {
        Some(p) => DemoLibrary::load(p, provider())
            .with_context(|| format!("loading library {}", p.display()))?,
        None => seed_library(provider()),
    };
    let reg = match registry {
        Some(p) => {
            ApiRegistry::load(p).with_context(|| format!("loading registry {}", p.display()))?
        }
        None => ApiRegistry::new(),
    };
    Ok((lib, reg))
}

fn save_stores(args: &PipelineArgs, library: &DemoLibrary, registry: &ApiRegistry) -> Result<()> {
    if let Some(p) = &args.save_library {
        library
            .save(p)
            .with_context(|| format!("writing library {}", p.display()))?;
    }
    if let Some(p) = &args.save_registry {
        registry
            .save(p)
            .with_context(|| format!("writing registry {}", p.display()))?;
    }
    Ok(())
}

/// Resolves flags, config file and defaults into a ready pipeline.
fn build_pipeline(args: &PipelineArgs, jobs: usize) -> Result<Pipeline> {
    let file = match &args.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let mut cfg = args.tunables.apply(file.pipeline);
    cfg.sequential = jobs <= 1;
    cfg.validate().map_err(anyhow::Error::msg)?;

    let mut remote = file.remote;
    if let Some(e) = &args.endpoint {
        remote.endpoint = e.clone();
    }
    if let Some(m) = &args.model {
        remote.model = m.clone();
    }
    let spec: BackendSpec = args.backend.parse()?;
    let backends = spec.build(&remote)?;
    let mut pipeline = Pipeline::new(backends, cfg);
    if let Some(dir) = &args.templates {
        pipeline.templates = triples_core::gateway::Templates::load_dir(dir)
            .with_context(|| format!("loading templates from {}", dir.display()))?;
    }
    Ok(pipeline)
}

fn cmd_run(args: RunArgs) -> Result<u8> {
    let pipeline = build_pipeline(&args.pipeline, 1)?;
    let task = match (&args.dataset, &args.task_id) {
        (Some(path), Some(id)) => {
            let dataset = Dataset::load(path)
                .with_context(|| format!("loading dataset {}", path.display()))?;
            let mut task = dataset
                .task(id)
                .cloned()
                .with_context(|| format!("task '{id}' not found in {}", path.display()))?;
            if let Some(text) = &args.task {
                task.instruction = text.clone();
            }
            task
        }
        _ => {
            let Some(text) = &args.task else {
                bail!("give --task, or --dataset with --task-id");
            };
            TaskSpec {
                id: "cli".into(),
                instruction: text.clone(),
                scenario: args.scenario,
                seed: args.seed,
                goal: GoalState::default(),
                gt_code: None,
                implication: Default::default(),
                complexity: 1,
            }
        }
    };

    let (mut library, mut registry) = load_stores(
        args.pipeline.library.as_deref(),
        args.pipeline.registry.as_deref(),
    )?;
    let (mut result, _) = run_episode(&pipeline, &task, &registry, &library);
    if result.success && pipeline.config.update_mode.upsert_mode().is_some() {
        result.learned = summarize_success(
            pipeline.backends.summarize.as_ref(),
            &pipeline.templates,
            &mut registry,
            &mut library,
            &result.minimal_tasks.join("\n"),
            &result.code,
            &pipeline.config,
        );
    }
    save_stores(&args.pipeline, &library, &registry)?;
    if !args.trace {
        result.trace = None;
    }
    emit(&serde_json::to_string_pretty(&result)?)?;
    Ok(match (result.success, result.executable) {
        (true, _) => 0,
        (false, true) => 2,
        (false, false) => 3,
    })
}

/// Prints a line to stdout, treating a closed pipe as success.
fn emit(text: &str) -> Result<()> {
    use std::io::Write;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn cmd_bench(args: BenchArgs) -> Result<u8> {
    if args.jobs == 0 {
        bail!("--jobs must be at least 1");
    }
    let pipeline = build_pipeline(&args.pipeline, args.jobs)?;
    let dataset = Dataset::load(&args.dataset)
        .with_context(|| format!("loading dataset {}", args.dataset.display()))?;
    let (library, registry) = load_stores(
        args.pipeline.library.as_deref(),
        args.pipeline.registry.as_deref(),
    )?;
    if args.jobs > 1 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(args.jobs)
            .build_global()
            .context("configuring worker threads")?;
    }

    let outcome =
        run_epoch_loop(&pipeline, &dataset.tasks, registry, library).map_err(anyhow::Error::msg)?;
    let mut report = RunReport::new(&pipeline.config, &outcome, args.trace);
    report.generated_at = chrono::Utc::now().to_rfc3339();
    std::fs::write(&args.report, report.to_json())
        .with_context(|| format!("writing report {}", args.report.display()))?;

    if let Some(dir) = &args.snapshots {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for snap in &outcome.history {
            snap.library
                .save(&dir.join(format!("{}.library.json", snap.summary.pass)))?;
            snap.registry
                .save(&dir.join(format!("{}.registry.json", snap.summary.pass)))?;
        }
    }
    save_stores(&args.pipeline, &outcome.library, &outcome.registry)?;

    emit(outcome.metrics.table().trim_end())?;
    for pass in &report.library_digests {
        emit(&format!(
            "pass {:<10} successes {:>4}  demos {:>4}  learned [{}]",
            pass.pass,
            pass.successes,
            pass.demos,
            pass.learned_apis.join(", ")
        ))?;
    }
    emit(&format!("report written to {}", args.report.display()))?;
    Ok(0)
}

fn cmd_gen(args: GenArgs) -> Result<u8> {
    if args.ablation {
        let scenario = ablation::build();
        let dataset = Dataset {
            version: triples_core::bench::DATASET_VERSION,
            generator_seed: 0,
            tasks: scenario.tasks.clone(),
        };
        dataset.save(&args.out)?;
        let script = args.script_out.as_ref().expect("required by clap");
        std::fs::write(script, scenario.script.to_json())
            .with_context(|| format!("writing {}", script.display()))?;
        let lib = args.library_out.as_ref().expect("required by clap");
        scenario.seed_library(provider()).save(lib)?;
        emit(&format!(
            "wrote ablation scenario: {} tasks",
            dataset.tasks.len()
        ))?;
        return Ok(0);
    }
    let dataset = generate(args.seed, args.observable, args.partial);
    dataset.save(&args.out)?;
    emit(&format!(
        "wrote {} tasks to {}",
        dataset.tasks.len(),
        args.out.display()
    ))?;
    Ok(0)
}

fn cmd_verify(args: VerifyArgs) -> Result<u8> {
    let dataset = Dataset::load(&args.dataset)
        .with_context(|| format!("loading dataset {}", args.dataset.display()))?;
    let problems = verify_dataset(&dataset, args.epsilon);
    if problems.is_empty() {
        emit(&format!("{} tasks verified", dataset.tasks.len()))?;
        return Ok(0);
    }
    for p in &problems {
        emit(&p.to_string())?;
    }
    eprintln!(
        "{} of {} tasks failed verification",
        problems.len(),
        dataset.tasks.len()
    );
    Ok(2)
}

fn cmd_lib(args: LibArgs) -> Result<u8> {
    let (library, registry) = load_stores(args.library.as_deref(), args.registry.as_deref())?;
    match args.action {
        LibAction::List => {
            emit(&format!("demonstrations ({}):", library.len()))?;
            for d in library.demos() {
                let source = serde_json::to_value(d.source)?;
                emit(&format!(
                    "  {:>4}  {:<7}  {}",
                    d.id,
                    source.as_str().unwrap_or(""),
                    d.task_description
                ))?;
            }
            emit("apis:")?;
            for doc in registry.docs() {
                emit(&format!("  {doc}"))?;
            }
        }
        LibAction::Show { id } => {
            let d = library
                .get(id)
                .with_context(|| format!("no demonstration with id {id}"))?;
            emit(&format!(
                "[task description]\n{}\n\n[thought]\n{}\n\n[examples]\n{}",
                d.task_description,
                d.thought,
                d.examples.trim_end()
            ))?;
        }
        LibAction::Export { out, registry_out } => {
            library.save(&out)?;
            if let Some(p) = registry_out {
                registry.save(&p)?;
            }
            emit(&format!("exported {} demonstrations", library.len()))?;
        }
    }
    Ok(0)
}
