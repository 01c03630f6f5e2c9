//! Explanation machinery: a lossless, digest-addressed log of everything the
//! router computed, plus local (per-task) and global prose rendering through
//! the LLM client. Every number in the log is the engine's value bit for bit;
//! nothing is re-derived here.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::artifacts::{
    budget_decision_rows, objective_decision_rows, to_canonical_json, DecisionRow, RoutingMode,
    RoutingResultFile, RunSettings, Totals, SCHEMA_VERSION,
};
use crate::error::{Error, Result};
use crate::money::Money;
use crate::profiles::ModelRecord;
use crate::profiler::{render_prompt, Bindings, ProfilerClient, TemplateId, PROMPT_VERSION};
use crate::routing::{objective_totals, BudgetPlan, RoutingDecision, EPSILON};
use crate::taxonomy::SkillVector;
use crate::workflow::Workflow;

/// Effective quality sensitivity per task, with the profiled original kept
/// beside any user override so explanations can state both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityEntry {
    pub task: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profiled: Option<f64>,
    #[serde(rename = "override", skip_serializing_if = "Option::is_none")]
    pub override_value: Option<f64>,
    pub effective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubtaskSpecRow {
    pub name: String,
    pub description: String,
    pub requirements: SkillVector,
    pub complexity: f64,
    pub est_input_tokens: u64,
    pub est_output_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderMeta {
    pub prompt_template: String,
    pub prompt_version: String,
}

/// The structured explanation log: user configuration, every intermediate
/// candidate score, and the final assignments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationLog {
    pub schema_version: u32,
    pub mode: RoutingMode,
    pub config: RunSettings,
    pub quality_sensitivity: Vec<QualityEntry>,
    pub subtasks: Vec<SubtaskSpecRow>,
    pub decisions: Vec<DecisionRow>,
    /// Present on full logs, absent on task-local slices.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub totals: Option<Totals>,
    pub render: RenderMeta,
}

fn quality_entries(workflow: &Workflow, tasks: &[String]) -> Result<Vec<QualityEntry>> {
    tasks
        .iter()
        .map(|name| {
            let task = workflow
                .get(name)
                .ok_or_else(|| Error::UnknownTask { task: name.clone() })?;
            Ok(QualityEntry {
                task: name.clone(),
                profiled: task.quality_sensitivity,
                override_value: task.quality_override,
                effective: task.effective_quality().ok_or_else(|| Error::UnprofiledTask {
                    task: name.clone(),
                    missing: "quality_sensitivity".into(),
                })?,
            })
        })
        .collect()
}

fn subtask_rows(workflow: &Workflow, tasks: &[String]) -> Result<Vec<SubtaskSpecRow>> {
    tasks
        .iter()
        .map(|name| {
            let t = workflow
                .get(name)
                .ok_or_else(|| Error::UnknownTask { task: name.clone() })?;
            let missing = t.missing_fields();
            if !missing.is_empty() {
                return Err(Error::UnprofiledTask {
                    task: name.clone(),
                    missing: missing.join(", "),
                });
            }
            Ok(SubtaskSpecRow {
                name: t.name.clone(),
                description: t.description.clone(),
                requirements: t.requirements.clone().unwrap(),
                complexity: t.complexity.unwrap(),
                est_input_tokens: t.est_input_tokens.unwrap(),
                est_output_tokens: t.est_output_tokens.unwrap(),
            })
        })
        .collect()
}

fn check_decisions_complete(workflow: &Workflow, rows: &[DecisionRow]) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::IncompleteTrace("no routing decisions".into()));
    }
    for row in rows {
        if row.candidates.is_empty() {
            return Err(Error::IncompleteTrace(format!(
                "task {:?} has no candidate scores",
                row.task
            )));
        }
    }
    let decided: BTreeSet<&str> = rows.iter().map(|r| r.task.as_str()).collect();
    for task in &workflow.subtasks {
        if !decided.contains(task.name.as_str()) {
            return Err(Error::IncompleteTrace(format!(
                "no decision recorded for task {:?}",
                task.name
            )));
        }
    }
    Ok(())
}

fn render_meta() -> RenderMeta {
    RenderMeta {
        prompt_template: TemplateId::RoutingExplanation.as_str().into(),
        prompt_version: PROMPT_VERSION.into(),
    }
}

impl ExplanationLog {
    /// Builds the full log for an objective-mode run. Decisions must cover
    /// every workflow task, each with its complete candidate list.
    pub fn from_objective(
        workflow: &Workflow,
        models: &[ModelRecord],
        decisions: &[RoutingDecision],
        c_global: f64,
        runs: u64,
        kappa: f64,
    ) -> Result<ExplanationLog> {
        let rows = objective_decision_rows(decisions, true);
        check_decisions_complete(workflow, &rows)?;
        let tasks: Vec<String> = rows.iter().map(|r| r.task.clone()).collect();
        let (cost, quality) = objective_totals(decisions, workflow, models, runs)?;
        Ok(ExplanationLog {
            schema_version: SCHEMA_VERSION,
            mode: RoutingMode::Objective,
            config: RunSettings {
                c_global: Some(c_global),
                budget: None,
                runs,
                kappa,
                epsilon: EPSILON,
            },
            quality_sensitivity: quality_entries(workflow, &tasks)?,
            subtasks: subtask_rows(workflow, &tasks)?,
            decisions: rows,
            totals: Some(Totals { cost_usd: cost, quality }),
            render: render_meta(),
        })
    }

    pub fn from_budget(workflow: &Workflow, plan: &BudgetPlan, kappa: f64) -> Result<ExplanationLog> {
        let rows = budget_decision_rows(plan, true);
        check_decisions_complete(workflow, &rows)?;
        let tasks: Vec<String> = rows.iter().map(|r| r.task.clone()).collect();
        Ok(ExplanationLog {
            schema_version: SCHEMA_VERSION,
            mode: RoutingMode::Budget,
            config: RunSettings {
                c_global: None,
                budget: Some(plan.budget),
                runs: plan.runs,
                kappa,
                epsilon: EPSILON,
            },
            quality_sensitivity: quality_entries(workflow, &tasks)?,
            subtasks: subtask_rows(workflow, &tasks)?,
            decisions: rows,
            totals: Some(Totals { cost_usd: plan.total_cost, quality: plan.total_quality }),
            render: render_meta(),
        })
    }

    pub fn to_canonical_json(&self) -> Result<String> {
        to_canonical_json(self)
    }

    pub fn from_json(json: &str) -> Result<ExplanationLog> {
        Ok(serde_json::from_str(json)?)
    }

    /// Content hash of the canonical serialization; the tamper-evidence
    /// anchor every rendered explanation carries.
    pub fn digest(&self) -> String {
        let json = self.to_canonical_json().expect("log serializes");
        let mut hasher = Sha256::new();
        hasher.update(json.as_bytes());
        hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// The per-task slice a local explanation is grounded in: the shared
    /// config plus only that task's rows. Totals are global and are dropped.
    pub fn local_slice(&self, task: &str) -> Result<ExplanationLog> {
        let decision = self
            .decisions
            .iter()
            .find(|d| d.task == task)
            .cloned()
            .ok_or_else(|| Error::UnknownTask { task: task.to_string() })?;
        Ok(ExplanationLog {
            schema_version: self.schema_version,
            mode: self.mode,
            config: self.config.clone(),
            quality_sensitivity: self
                .quality_sensitivity
                .iter()
                .filter(|q| q.task == task)
                .cloned()
                .collect(),
            subtasks: self.subtasks.iter().filter(|s| s.name == task).cloned().collect(),
            decisions: vec![decision],
            totals: None,
            render: self.render.clone(),
        })
    }

    /// Projects the log back down to the routing result file it extends.
    pub fn routing_result(&self) -> RoutingResultFile {
        let strip = |row: &crate::artifacts::CandidateRow| {
            let mut row = row.clone();
            row.per_skill = None;
            row.uncapped_match = None;
            row
        };
        RoutingResultFile {
            schema_version: self.schema_version,
            mode: self.mode,
            config: self.config.clone(),
            decisions: self
                .decisions
                .iter()
                .map(|d| DecisionRow {
                    task: d.task.clone(),
                    winner: strip(&d.winner),
                    runner_up: d.runner_up.as_ref().map(&strip),
                    margin: d.margin,
                    decisive_factor: d.decisive_factor,
                    candidates: d.candidates.iter().map(&strip).collect(),
                })
                .collect(),
            totals: self.totals.clone().unwrap_or(Totals {
                cost_usd: Money::ZERO,
                quality: 0.0,
            }),
        }
    }

    pub fn model_names(&self) -> BTreeSet<String> {
        self.decisions
            .iter()
            .flat_map(|d| d.candidates.iter().map(|c| c.model.clone()))
            .collect()
    }

    pub fn task_names(&self) -> BTreeSet<String> {
        self.decisions.iter().map(|d| d.task.clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scope", rename_all = "lowercase")]
pub enum ExplainScope {
    Global,
    Local { task: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    #[serde(flatten)]
    pub scope: ExplainScope,
    pub text: String,
    /// Hash of the exact log slice the text was rendered from.
    pub source_log_digest: String,
    /// Entity-grounding violations found in the rendered text, if any.
    pub grounding_warnings: Vec<String>,
}

/// How to turn a prompt into prose: return the rendered prompt itself
/// (dry-run) or call the configured completion client.
pub enum ExplainBackend<'a> {
    DryRun,
    Client(&'a ProfilerClient),
}

fn normalize_entity(s: &str) -> String {
    s.chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .map(|c| c.to_ascii_lowercase())
        .collect()
}

fn family_of(model: &str) -> String {
    normalize_entity(model.split(['-', ' ']).next().unwrap_or(model))
}

/// Checks that every model or task name mentioned in `text` exists in the
/// log slice the explanation claims to describe. Family-name mentions
/// ("Claude" for "Claude-Opus-4.5") count as mentions; a family shared with
/// an allowed model is not flagged.
pub fn validate_entities(
    text: &str,
    allowed_models: &BTreeSet<String>,
    allowed_tasks: &BTreeSet<String>,
    universe_models: &BTreeSet<String>,
    universe_tasks: &BTreeSet<String>,
) -> Vec<String> {
    let text_norm = normalize_entity(text);
    let allowed_families: BTreeSet<String> =
        allowed_models.iter().map(|m| family_of(m)).collect();
    let mut warnings = Vec::new();
    for model in universe_models {
        if allowed_models.contains(model) {
            continue;
        }
        let full = normalize_entity(model);
        let family = family_of(model);
        let mentioned = text_norm.contains(&full)
            || (!allowed_families.contains(&family) && text_norm.contains(&family));
        if mentioned {
            warnings.push(format!(
                "model {model:?} is mentioned but absent from the log slice"
            ));
        }
    }
    for task in universe_tasks {
        if allowed_tasks.contains(task) {
            continue;
        }
        if text_norm.contains(&normalize_entity(task)) {
            warnings.push(format!(
                "task {task:?} is mentioned but absent from the log slice"
            ));
        }
    }
    warnings
}

fn verify_digest(log: &ExplanationLog, expected: Option<&str>) -> Result<String> {
    let actual = log.digest();
    if let Some(expected) = expected {
        if expected != actual {
            return Err(Error::LogIntegrity {
                expected: expected.to_string(),
                actual,
            });
        }
    }
    Ok(actual)
}

fn render_explanation(
    slice: &ExplanationLog,
    backend: &ExplainBackend<'_>,
    scope: ExplainScope,
    universe_models: &BTreeSet<String>,
    universe_tasks: &BTreeSet<String>,
) -> Result<Explanation> {
    let digest = slice.digest();
    let bindings = Bindings::from([(
        "explain_log".to_string(),
        slice.to_canonical_json()?,
    )]);
    let prompt = render_prompt(TemplateId::RoutingExplanation, &bindings)?;
    let (text, warnings) = match backend {
        ExplainBackend::DryRun => (prompt, Vec::new()),
        ExplainBackend::Client(client) => {
            let text = client.complete_text(TemplateId::RoutingExplanation, &bindings, &prompt)?;
            let warnings = validate_entities(
                &text,
                &slice.model_names(),
                &slice.task_names(),
                universe_models,
                universe_tasks,
            );
            (text, warnings)
        }
    };
    Ok(Explanation { scope, text, source_log_digest: digest, grounding_warnings: warnings })
}

/// Cross-task strategy summary over the whole log.
pub fn explain_global(
    log: &ExplanationLog,
    backend: &ExplainBackend<'_>,
    expected_digest: Option<&str>,
) -> Result<Explanation> {
    verify_digest(log, expected_digest)?;
    render_explanation(
        log,
        backend,
        ExplainScope::Global,
        &log.model_names(),
        &log.task_names(),
    )
}

/// Why one specific task went to one specific model, grounded only in that
/// task's slice of the log.
pub fn explain_local(
    log: &ExplanationLog,
    task: &str,
    backend: &ExplainBackend<'_>,
    expected_digest: Option<&str>,
) -> Result<Explanation> {
    verify_digest(log, expected_digest)?;
    let slice = log.local_slice(task)?;
    render_explanation(
        &slice,
        backend,
        ExplainScope::Local { task: task.to_string() },
        &log.model_names(),
        &log.task_names(),
    )
}
