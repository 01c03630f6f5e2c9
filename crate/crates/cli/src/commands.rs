use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use skillrouter_core::artifacts::RoutingResultFile;
use skillrouter_core::{
    budget_result_file, budget_route, compute_capabilities, default_taxonomy, explain_global,
    explain_local, objective_result_file, objective_route, sweep_summary, to_canonical_json,
    BenchmarkInput, BenchmarkRecord, Explanation, ExplainBackend, ExplanationLog, FixtureStore,
    HttpChatClient, Money, PenaltyFixture, PenaltySource, ProfileSet, Profiler, ProfilerClient,
    RoutingMode, SkillTaxonomy, SkillVector, Workflow, DEFAULT_KAPPA,
};

use crate::report;

#[derive(Subcommand)]
pub enum Command {
    /// Build capability profiles and/or fill in workflow metadata.
    Profile(ProfileArgs),
    /// Route a workflow's subtasks to models and write the trace artifacts.
    Route(RouteArgs),
    /// Route once per setting in a cost-sensitivity or budget ladder.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Objective,
    Budget,
}

#[derive(Args)]
pub struct ProfileArgs {
    /// Skill taxonomy file; the built-in eight-skill taxonomy when omitted.
    #[arg(long)]
    skills: Option<PathBuf>,
    #[arg(long)]
    models: Option<PathBuf>,
    /// Benchmark records (weights may be missing; scores required to compute
    /// capabilities).
    #[arg(long)]
    benchmarks: Option<PathBuf>,
    /// Existing profiles file to validate and recalibrate instead of
    /// computing from benchmark scores.
    #[arg(long)]
    profiles: Option<PathBuf>,
    #[arg(long)]
    workflow: Option<PathBuf>,
    /// Directory of profiler fixtures for offline operation.
    #[arg(long)]
    fixtures: Option<PathBuf>,
    /// Calibration factor applied to raw capabilities.
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
pub struct RouteArgs {
    #[arg(long)]
    skills: Option<PathBuf>,
    #[arg(long)]
    models: PathBuf,
    #[arg(long)]
    profiles: PathBuf,
    #[arg(long)]
    workflow: PathBuf,
    #[arg(long, value_enum)]
    mode: Mode,
    /// Global cost sensitivity in [0, 1] (objective mode).
    #[arg(long)]
    cost_sensitivity: Option<f64>,
    /// Dollar budget for `runs` pipeline executions (budget mode).
    #[arg(long)]
    budget: Option<String>,
    #[arg(long, default_value_t = 1000)]
    runs: u64,
    /// Recalibrate profiles with this factor instead of the file's kappa.
    #[arg(long)]
    kappa: Option<f64>,
    /// Per-task quality-sensitivity override, NAME=VALUE. Repeatable.
    #[arg(long = "override-quality", value_name = "NAME=VALUE")]
    override_quality: Vec<String>,
    /// Load cost penalties from this file instead of computing them.
    #[arg(long)]
    penalty_fixture: Option<PathBuf>,
    /// Render explanations through the configured LLM client.
    #[arg(long)]
    explain: bool,
    /// Write the fully rendered explanation prompts instead of calling out.
    #[arg(long)]
    dry_run_explain: bool,
    #[arg(long)]
    fixtures: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
pub struct SweepArgs {
    #[arg(long)]
    skills: Option<PathBuf>,
    #[arg(long)]
    models: PathBuf,
    #[arg(long)]
    profiles: PathBuf,
    #[arg(long)]
    workflow: PathBuf,
    /// Comma-separated cost sensitivities, e.g. 0,0.05,0.5,0.95,1.0.
    #[arg(long)]
    sweep_cost: Option<String>,
    /// Comma-separated budgets in dollars, e.g. 5,50,100.
    #[arg(long)]
    sweep_budget: Option<String>,
    #[arg(long, default_value_t = 1000)]
    runs: u64,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long = "override-quality", value_name = "NAME=VALUE")]
    override_quality: Vec<String>,
    #[arg(long)]
    penalty_fixture: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Profile(args) => cmd_profile(args),
        Command::Route(args) => cmd_route(args),
        Command::Sweep(args) => cmd_sweep(args),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_artifact(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn load_taxonomy(path: &Option<PathBuf>) -> Result<SkillTaxonomy> {
    match path {
        Some(p) => Ok(SkillTaxonomy::from_json(&read(p)?)?),
        None => Ok(default_taxonomy()),
    }
}

fn load_workflow_with_overrides(
    path: &Path,
    taxonomy: &SkillTaxonomy,
    overrides: &[String],
) -> Result<Workflow> {
    let mut workflow = Workflow::from_json(&read(path)?, taxonomy)?;
    for spec in overrides {
        let (task, value) = spec
            .split_once('=')
            .ok_or_else(|| anyhow!("--override-quality expects NAME=VALUE, got {spec:?}"))?;
        let q: f64 = value
            .parse()
            .map_err(|_| anyhow!("--override-quality {spec:?}: value is not a number"))?;
        workflow = workflow.with_quality_override(task, q)?;
    }
    Ok(workflow)
}

fn profiler_client(fixtures: &Option<PathBuf>) -> Result<ProfilerClient> {
    match fixtures {
        Some(dir) => Ok(ProfilerClient::Fixture(FixtureStore::dir(dir))),
        None => Ok(ProfilerClient::Http(HttpChatClient::from_env()?)),
    }
}

// ---------------------------------------------------------------------------
// profile
// ---------------------------------------------------------------------------

/// Benchmark inputs may arrive without skill weights (the profiler fills
/// them), without a published max score (recomputed from the local scores),
/// and with optional example items.
#[derive(Debug, Deserialize)]
struct BenchmarkInputRecord {
    name: String,
    description: String,
    #[serde(default)]
    skill_weights: Option<SkillVector>,
    #[serde(default)]
    max_score: Option<f64>,
    #[serde(default)]
    scores: BTreeMap<String, f64>,
    #[serde(default)]
    example_items: Vec<String>,
}

#[derive(Debug, Default, Serialize)]
struct ProfilingAudit {
    schema_version: u32,
    /// Raw profiler completions, keyed by benchmark name.
    benchmarks: BTreeMap<String, String>,
    /// Raw profiler completions, keyed by subtask name.
    subtasks: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pipeline_metadata: Option<String>,
}

fn cmd_profile(args: ProfileArgs) -> Result<()> {
    let taxonomy = load_taxonomy(&args.skills)?;
    let kappa = args.kappa.unwrap_or(DEFAULT_KAPPA);
    let mut audit = ProfilingAudit { schema_version: 1, ..Default::default() };
    let mut wrote_anything = false;

    if let Some(profiles_path) = &args.profiles {
        let set = ProfileSet::from_json(&read(profiles_path)?, Some(kappa))?;
        let path = write_artifact(&args.out, "profiles.json", &to_canonical_json(&set)?)?;
        println!("wrote {}", path.display());
        wrote_anything = true;
    } else if let Some(bench_path) = &args.benchmarks {
        let models_path = args
            .models
            .as_ref()
            .ok_or_else(|| anyhow!("--benchmarks requires --models to score against"))?;
        let models = skillrouter_core::load_models(&read(models_path)?)?;
        let inputs: Vec<BenchmarkInputRecord> = serde_json::from_str(&read(bench_path)?)
            .with_context(|| format!("parsing {}", bench_path.display()))?;

        // Fill in any missing skill decompositions first.
        let needing: Vec<&BenchmarkInputRecord> =
            inputs.iter().filter(|b| b.skill_weights.is_none()).collect();
        let mut profiled_weights: BTreeMap<String, SkillVector> = BTreeMap::new();
        if !needing.is_empty() {
            let client = profiler_client(&args.fixtures)?;
            let profiler = Profiler::new(client, taxonomy.clone());
            let requests: Vec<BenchmarkInput> = needing
                .iter()
                .map(|b| BenchmarkInput {
                    name: b.name.clone(),
                    description: b.description.clone(),
                    example_items: b.example_items.clone(),
                })
                .collect();
            let responses = profiler.profile_benchmarks(&requests)?;
            for (record, response) in needing.iter().zip(responses) {
                audit
                    .benchmarks
                    .insert(record.name.clone(), response.raw_text.clone());
                profiled_weights.insert(record.name.clone(), response.skill_weights);
            }
        }

        let missing_scores: Vec<&str> = inputs
            .iter()
            .filter(|b| b.scores.is_empty())
            .map(|b| b.name.as_str())
            .collect();
        if !missing_scores.is_empty() {
            bail!(skillrouter_core::Error::Config(format!(
                "no scores for benchmark(s): {}; supply scores or a profiles file",
                missing_scores.join(", ")
            )));
        }

        let records: Vec<BenchmarkRecord> = inputs
            .iter()
            .map(|b| {
                let weights = b
                    .skill_weights
                    .clone()
                    .or_else(|| profiled_weights.get(&b.name).cloned())
                    .expect("weights present or profiled");
                // Published max wins; otherwise the local best defines 1.0.
                let max_score = b.max_score.unwrap_or_else(|| {
                    b.scores.values().cloned().fold(f64::NEG_INFINITY, f64::max)
                });
                BenchmarkRecord {
                    name: b.name.clone(),
                    description: b.description.clone(),
                    skill_weights: weights,
                    max_score,
                    scores: b.scores.clone(),
                }
            })
            .collect();
        let mut issues = Vec::new();
        for record in &records {
            let (mut record_issues, warnings) = record.validate(&taxonomy);
            issues.append(&mut record_issues);
            for warning in warnings {
                eprintln!("warning: {warning}");
            }
        }
        if !issues.is_empty() {
            bail!(skillrouter_core::Error::validation(issues));
        }
        let records_json = to_canonical_json(&records)?;
        let profiles = compute_capabilities(&records, &models, &taxonomy)?;
        let set = ProfileSet::new(profiles, kappa)?;
        let path = write_artifact(&args.out, "profiles.json", &to_canonical_json(&set)?)?;
        println!("wrote {}", path.display());
        let path = write_artifact(&args.out, "benchmarks_profiled.json", &records_json)?;
        println!("wrote {}", path.display());
        wrote_anything = true;
    }

    if let Some(workflow_path) = &args.workflow {
        let workflow = Workflow::from_json(&read(workflow_path)?, &taxonomy)?;
        if workflow.unprofiled().is_empty() {
            println!("workflow already fully profiled; nothing to fill");
        } else {
            let client = profiler_client(&args.fixtures)?;
            let profiler = Profiler::new(client, taxonomy.clone());
            let profiled = profiler.profile_subtasks(&workflow)?;
            for (task, response) in &profiled.responses {
                audit.subtasks.insert(task.clone(), response.raw_text.clone());
            }
            if let Some(meta) = &profiled.metadata {
                audit.pipeline_metadata = Some(meta.raw_text.clone());
            }
            let path = write_artifact(
                &args.out,
                "workflow_profiled.json",
                &to_canonical_json(&profiled.workflow)?,
            )?;
            println!("wrote {}", path.display());
        }
        wrote_anything = true;
    }

    if !wrote_anything {
        bail!("nothing to do: pass --profiles, --benchmarks, and/or --workflow");
    }
    if !audit.benchmarks.is_empty() || !audit.subtasks.is_empty() || audit.pipeline_metadata.is_some()
    {
        let path = write_artifact(&args.out, "profiling_audit.json", &to_canonical_json(&audit)?)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// route
// ---------------------------------------------------------------------------

struct RouteContext {
    models: Vec<skillrouter_core::ModelRecord>,
    profiles: ProfileSet,
    workflow: Workflow,
    penalty_fixture: Option<PenaltyFixture>,
    runs: u64,
}

impl RouteContext {
    fn penalty_source(&self) -> PenaltySource<'_> {
        match &self.penalty_fixture {
            Some(fixture) => PenaltySource::Fixture(fixture),
            None => PenaltySource::Computed,
        }
    }
}

struct ContextArgs<'a> {
    skills: &'a Option<PathBuf>,
    models: &'a Path,
    profiles: &'a Path,
    workflow: &'a Path,
    kappa: Option<f64>,
    overrides: &'a [String],
    penalty_fixture: &'a Option<PathBuf>,
    runs: u64,
}

fn route_context(args: ContextArgs<'_>) -> Result<RouteContext> {
    let taxonomy = load_taxonomy(args.skills)?;
    let models = skillrouter_core::load_models(&read(args.models)?)?;
    let profiles = ProfileSet::from_json(&read(args.profiles)?, args.kappa)?;
    let workflow = load_workflow_with_overrides(args.workflow, &taxonomy, args.overrides)?;
    let penalty_fixture = match args.penalty_fixture {
        Some(path) => Some(PenaltyFixture::from_json(&read(path)?)?),
        None => None,
    };
    Ok(RouteContext { models, profiles, workflow, penalty_fixture, runs: args.runs })
}

fn route_once(
    ctx: &RouteContext,
    mode: Mode,
    c_global: Option<f64>,
    budget: Option<Money>,
) -> Result<(RoutingResultFile, ExplanationLog)> {
    match mode {
        Mode::Objective => {
            let c = c_global.ok_or_else(|| {
                anyhow!("--mode objective requires --cost-sensitivity")
            })?;
            let decisions = objective_route(
                &ctx.workflow,
                &ctx.profiles,
                &ctx.models,
                c,
                ctx.penalty_source(),
            )?;
            let result = objective_result_file(
                &decisions,
                &ctx.workflow,
                &ctx.models,
                c,
                ctx.runs,
                ctx.profiles.kappa,
            )?;
            let log = ExplanationLog::from_objective(
                &ctx.workflow,
                &ctx.models,
                &decisions,
                c,
                ctx.runs,
                ctx.profiles.kappa,
            )?;
            Ok((result, log))
        }
        Mode::Budget => {
            let budget =
                budget.ok_or_else(|| anyhow!("--mode budget requires --budget"))?;
            let plan = budget_route(&ctx.workflow, &ctx.profiles, &ctx.models, budget, ctx.runs)?;
            let result = budget_result_file(&plan, ctx.profiles.kappa);
            let log = ExplanationLog::from_budget(&ctx.workflow, &plan, ctx.profiles.kappa)?;
            report::print_budget_plan_summary(&plan);
            Ok((result, log))
        }
    }
}

fn explanation_block(explanation: &Explanation) -> String {
    let scope = match &explanation.scope {
        skillrouter_core::ExplainScope::Global => "global".to_string(),
        skillrouter_core::ExplainScope::Local { task } => format!("local task={task}"),
    };
    let mut block = format!(
        "=== scope: {scope} digest: {} ===\n{}\n",
        explanation.source_log_digest, explanation.text
    );
    for warning in &explanation.grounding_warnings {
        block.push_str(&format!("!! grounding warning: {warning}\n"));
    }
    block
}

fn render_explanations(
    log: &ExplanationLog,
    backend: &ExplainBackend<'_>,
) -> Result<Vec<Explanation>> {
    let mut blocks = vec![explain_global(log, backend, None)?];
    for task in log.task_names() {
        blocks.push(explain_local(log, &task, backend, None)?);
    }
    Ok(blocks)
}

fn write_explanations(
    out: &Path,
    log: &ExplanationLog,
    explain: bool,
    dry_run: bool,
    fixtures: &Option<PathBuf>,
) -> Result<()> {
    if !explain && !dry_run {
        return Ok(());
    }
    if dry_run {
        let blocks = render_explanations(log, &ExplainBackend::DryRun)?;
        let text: String = blocks.iter().map(explanation_block).collect::<Vec<_>>().join("\n");
        let path = write_artifact(out, "explanations_dryrun.txt", &text)?;
        println!("wrote {}", path.display());
    }
    if explain {
        let client = profiler_client(fixtures)?;
        let blocks = render_explanations(log, &ExplainBackend::Client(&client))?;
        for block in &blocks {
            for warning in &block.grounding_warnings {
                eprintln!("warning: {warning}");
            }
        }
        let text: String = blocks.iter().map(explanation_block).collect::<Vec<_>>().join("\n");
        let path = write_artifact(out, "explanations.txt", &text)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_route(args: RouteArgs) -> Result<()> {
    match (args.mode, args.cost_sensitivity.is_some(), args.budget.is_some()) {
        (Mode::Objective, _, true) => bail!("--budget is a budget-mode flag; objective mode takes --cost-sensitivity"),
        (Mode::Budget, true, _) => bail!("--cost-sensitivity is an objective-mode flag; budget mode takes --budget"),
        _ => {}
    }
    let ctx = route_context(ContextArgs {
        skills: &args.skills,
        models: &args.models,
        profiles: &args.profiles,
        workflow: &args.workflow,
        kappa: args.kappa,
        overrides: &args.override_quality,
        penalty_fixture: &args.penalty_fixture,
        runs: args.runs,
    })?;
    let budget = args.budget.as_deref().map(Money::parse).transpose()?;
    let (result, log) = route_once(&ctx, args.mode, args.cost_sensitivity, budget)?;

    report::print_result_table(&result);
    let path = write_artifact(&args.out, "routing_result.json", &to_canonical_json(&result)?)?;
    println!("wrote {}", path.display());
    let path = write_artifact(&args.out, "explanation_log.json", &log.to_canonical_json()?)?;
    println!("wrote {}", path.display());
    write_explanations(&args.out, &log, args.explain, args.dry_run_explain, &args.fixtures)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

fn parse_list(list: &str, what: &str) -> Result<Vec<String>> {
    let items: Vec<String> = list
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    if items.is_empty() {
        bail!("empty {what} list");
    }
    Ok(items)
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let (mode, settings) = match (&args.sweep_cost, &args.sweep_budget) {
        (Some(_), Some(_)) => bail!("pass exactly one of --sweep-cost / --sweep-budget"),
        (Some(list), None) => (Mode::Objective, parse_list(list, "cost-sensitivity")?),
        (None, Some(list)) => (Mode::Budget, parse_list(list, "budget")?),
        (None, None) => bail!("pass one of --sweep-cost / --sweep-budget"),
    };
    let ctx = route_context(ContextArgs {
        skills: &args.skills,
        models: &args.models,
        profiles: &args.profiles,
        workflow: &args.workflow,
        kappa: args.kappa,
        overrides: &args.override_quality,
        penalty_fixture: &args.penalty_fixture,
        runs: args.runs,
    })?;

    let mut results: Vec<(String, RoutingResultFile)> = Vec::new();
    for setting in &settings {
        let (label, file_tag, result) = match mode {
            Mode::Objective => {
                let c: f64 = setting
                    .parse()
                    .map_err(|_| anyhow!("bad cost sensitivity {setting:?}"))?;
                let (result, _log) = route_once(&ctx, mode, Some(c), None)?;
                (format!("c={c:.2}"), format!("c_{c:.2}"), result)
            }
            Mode::Budget => {
                let budget = Money::parse(setting)?;
                let (result, _log) = route_once(&ctx, mode, None, Some(budget))?;
                (
                    format!("budget=${}", budget.to_decimal_string()),
                    format!("budget_{}", budget.to_decimal_string()),
                    result,
                )
            }
        };
        println!("--- {label} ---");
        report::print_result_table(&result);
        let path = write_artifact(
            &args.out,
            &format!("routing_result_{file_tag}.json"),
            &to_canonical_json(&result)?,
        )?;
        println!("wrote {}", path.display());
        results.push((label, result));
    }

    let summary_mode = match mode {
        Mode::Objective => RoutingMode::Objective,
        Mode::Budget => RoutingMode::Budget,
    };
    let summary = sweep_summary(summary_mode, results);
    for point in &summary.points {
        if !point.changes_from_previous.is_empty() {
            println!("changes at {}:", point.setting);
            for change in &point.changes_from_previous {
                println!("  {}: {} -> {}", change.task, change.from, change.to);
            }
        }
    }
    let path = write_artifact(&args.out, "sweep_summary.json", &to_canonical_json(&summary)?)?;
    println!("wrote {}", path.display());
    Ok(())
}

