//! A routing engine for agentic workflows. Subtasks and models share one
//! human-interpretable skill taxonomy: benchmarks are decomposed into skill
//! weights, model capabilities are aggregated from normalized benchmark
//! scores, and tasks declare skill requirements plus complexity, quality
//! sensitivity and token estimates. The engine assigns a model to every
//! subtask either by a per-task quality/cost objective or by a dollar-budget
//! dynamic program, and emits a lossless numeric trace from which local and
//! global natural-language explanations are rendered.
//!
//! Everything outside the optional LLM profiling calls is deterministic:
//! identical inputs produce byte-identical artifacts.

pub mod artifacts;
pub mod cost;
pub mod error;
pub mod explain;
pub mod money;
pub mod profiler;
pub mod profiles;
pub mod routing;
pub mod taxonomy;
pub mod workflow;

pub use error::{Error, Result, ValidationIssue};
pub use money::Money;
pub use taxonomy::{default_taxonomy, Skill, SkillTaxonomy, SkillVector};
pub use profiles::{
    compute_capabilities, load_benchmarks, load_models, BenchmarkRecord, CapabilityProfile,
    ModelRecord, ProfileSet, DEFAULT_KAPPA,
};
pub use workflow::{SubtaskProfile, Workflow};
pub use cost::{cost_abs, cost_penalty, cost_rel, skew, CostQuote};
pub use routing::{
    break_tie, budget_route, match_score, objective_route, objective_totals, Assignment,
    BudgetCandidate, BudgetPlan, CandidateScore, DecisiveFactor, MatchBreakdown, PenaltyFixture,
    PenaltySource, RoutingDecision, EPSILON, TIE_TOLERANCE,
};
pub use artifacts::{
    budget_result_file, diff_assignments, objective_result_file, sweep_summary, to_canonical_json,
    RoutingMode, RoutingResultFile, SweepSummaryFile,
};
pub use explain::{
    explain_global, explain_local, validate_entities, ExplainBackend, ExplainScope, Explanation,
    ExplanationLog,
};
pub use profiler::{
    fixture_key, render_prompt, BenchmarkInput, Bindings, FixtureStore, HttpChatClient,
    ProfiledWorkflow, Profiler, ProfilerClient, ProfilerResponse, TemplateId, PROMPT_VERSION,
};
