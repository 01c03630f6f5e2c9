//! Serializable output schemas. Everything the engine emits is canonical
//! JSON: sorted map keys, fixed field order, pretty-printed with a trailing
//! newline, so identical inputs produce byte-identical files.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::money::Money;
use crate::profiles::ModelRecord;
use crate::routing::{
    objective_totals, BudgetPlan, DecisiveFactor, RoutingDecision, SkillFulfillment,
};
use crate::workflow::Workflow;

pub const SCHEMA_VERSION: u32 = 1;

pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoutingMode {
    Objective,
    Budget,
}

/// The `config` block of a result file: exactly one of `c_global` / `budget`
/// is set depending on the mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_global: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<Money>,
    pub runs: u64,
    pub kappa: f64,
    pub epsilon: f64,
}

/// `penalty_or_cost` in a candidate row: the min-max penalty in objective
/// mode, the exact absolute cost in budget mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PenaltyOrCost {
    Penalty(f64),
    Cost(Money),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRow {
    pub model: String,
    #[serde(rename = "match")]
    pub match_total: f64,
    pub penalty_or_cost: PenaltyOrCost,
    pub objective: f64,
    pub capped_skills: Vec<String>,
    /// Per-skill fulfillment detail; carried by explanation logs, omitted
    /// from routing results.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_skill: Option<std::collections::BTreeMap<String, SkillFulfillment>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uncapped_match: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRow {
    pub task: String,
    pub winner: CandidateRow,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runner_up: Option<CandidateRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decisive_factor: Option<DecisiveFactor>,
    pub candidates: Vec<CandidateRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub cost_usd: Money,
    pub quality: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingResultFile {
    pub schema_version: u32,
    pub mode: RoutingMode,
    pub config: RunSettings,
    pub decisions: Vec<DecisionRow>,
    pub totals: Totals,
}

fn capped_vec(set: &BTreeSet<String>) -> Vec<String> {
    set.iter().cloned().collect()
}

fn objective_candidate_row(
    c: &crate::routing::CandidateScore,
    with_breakdown: bool,
) -> CandidateRow {
    CandidateRow {
        model: c.model.clone(),
        match_total: c.match_total,
        penalty_or_cost: PenaltyOrCost::Penalty(c.penalty),
        objective: c.objective,
        capped_skills: capped_vec(&c.capped_skills),
        per_skill: with_breakdown.then(|| c.breakdown.per_skill.clone()),
        uncapped_match: with_breakdown.then_some(c.uncapped_match),
    }
}

pub fn objective_decision_rows(
    decisions: &[RoutingDecision],
    with_breakdown: bool,
) -> Vec<DecisionRow> {
    decisions
        .iter()
        .map(|d| DecisionRow {
            task: d.task.clone(),
            winner: objective_candidate_row(&d.winner, with_breakdown),
            runner_up: d
                .runner_up
                .as_ref()
                .map(|r| objective_candidate_row(r, with_breakdown)),
            margin: d.margin,
            decisive_factor: Some(d.decisive_factor),
            candidates: d
                .all_candidates
                .iter()
                .map(|c| objective_candidate_row(c, with_breakdown))
                .collect(),
        })
        .collect()
}

pub fn objective_result_file(
    decisions: &[RoutingDecision],
    workflow: &Workflow,
    models: &[ModelRecord],
    c_global: f64,
    runs: u64,
    kappa: f64,
) -> Result<RoutingResultFile> {
    let (cost, quality) = objective_totals(decisions, workflow, models, runs)?;
    Ok(RoutingResultFile {
        schema_version: SCHEMA_VERSION,
        mode: RoutingMode::Objective,
        config: RunSettings {
            c_global: Some(c_global),
            budget: None,
            runs,
            kappa,
            epsilon: crate::routing::EPSILON,
        },
        decisions: objective_decision_rows(decisions, false),
        totals: Totals { cost_usd: cost, quality },
    })
}

fn budget_candidate_row(c: &crate::routing::BudgetCandidate, with_breakdown: bool) -> CandidateRow {
    CandidateRow {
        model: c.model.clone(),
        match_total: c.match_total,
        penalty_or_cost: PenaltyOrCost::Cost(c.cost),
        objective: c.quality,
        capped_skills: capped_vec(&c.capped_skills),
        per_skill: with_breakdown.then(|| c.breakdown.per_skill.clone()),
        uncapped_match: with_breakdown.then_some(c.uncapped_match),
    }
}

pub fn budget_decision_rows(plan: &BudgetPlan, with_breakdown: bool) -> Vec<DecisionRow> {
    plan.traces
        .iter()
        .map(|trace| {
            let winner = trace
                .candidates
                .iter()
                .find(|c| c.model == trace.chosen)
                .expect("chosen model is among the candidates");
            DecisionRow {
                task: trace.task.clone(),
                winner: budget_candidate_row(winner, with_breakdown),
                runner_up: None,
                margin: None,
                decisive_factor: None,
                candidates: trace
                    .candidates
                    .iter()
                    .map(|c| budget_candidate_row(c, with_breakdown))
                    .collect(),
            }
        })
        .collect()
}

pub fn budget_result_file(plan: &BudgetPlan, kappa: f64) -> RoutingResultFile {
    RoutingResultFile {
        schema_version: SCHEMA_VERSION,
        mode: RoutingMode::Budget,
        config: RunSettings {
            c_global: None,
            budget: Some(plan.budget),
            runs: plan.runs,
            kappa,
            epsilon: crate::routing::EPSILON,
        },
        decisions: budget_decision_rows(plan, false),
        totals: Totals { cost_usd: plan.total_cost, quality: plan.total_quality },
    }
}

/// One task whose assigned model changed between two consecutive sweep
/// settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentChange {
    pub task: String,
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    /// Human-readable setting label ("c=0.50", "budget=$100.00").
    pub setting: String,
    pub result: RoutingResultFile,
    pub changes_from_previous: Vec<AssignmentChange>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummaryFile {
    pub schema_version: u32,
    pub mode: RoutingMode,
    pub points: Vec<SweepPoint>,
}

pub fn assignments_of(result: &RoutingResultFile) -> Vec<(String, String)> {
    result
        .decisions
        .iter()
        .map(|d| (d.task.clone(), d.winner.model.clone()))
        .collect()
}

pub fn diff_assignments(
    prev: &RoutingResultFile,
    next: &RoutingResultFile,
) -> Vec<AssignmentChange> {
    let before: std::collections::BTreeMap<_, _> = assignments_of(prev).into_iter().collect();
    assignments_of(next)
        .into_iter()
        .filter_map(|(task, to)| {
            before
                .get(&task)
                .filter(|from| **from != to)
                .map(|from| AssignmentChange { task, from: from.clone(), to })
        })
        .collect()
}

pub fn sweep_summary(mode: RoutingMode, results: Vec<(String, RoutingResultFile)>) -> SweepSummaryFile {
    let mut points: Vec<SweepPoint> = Vec::with_capacity(results.len());
    for (setting, result) in results {
        let changes = points
            .last()
            .map(|prev: &SweepPoint| diff_assignments(&prev.result, &result))
            .unwrap_or_default();
        points.push(SweepPoint { setting, result, changes_from_previous: changes });
    }
    SweepSummaryFile { schema_version: SCHEMA_VERSION, mode, points }
}
