//! The routing engine. Scores every (model, task) pair with a capped skill
//! fulfillment match, then assigns models either independently per task
//! (objective mode: weighted quality/cost trade-off with epsilon floors) or
//! globally under a dollar budget (dynamic program over tasks x discretized
//! remaining budget, assignments recovered by backtracing).

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::cost::{cost_abs, cost_penalty, cost_rel, skew};
use crate::error::{Error, Result};
use crate::money::Money;
use crate::profiles::{CapabilityProfile, ModelRecord, ProfileSet};
use crate::taxonomy::SkillVector;
use crate::workflow::{SubtaskProfile, Workflow};

/// Floor keeping both objective-mode weights alive at extreme settings.
pub const EPSILON: f64 = 0.01;
/// Objective scores closer than this are a tie and go to the tie-break.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Per-skill outcome of the capped fulfillment computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillFulfillment {
    /// min(1, C' / (k * R))
    pub ratio: f64,
    /// ratio * R
    pub contribution: f64,
    pub capped: bool,
}

/// Full trace of one model's match against one task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchBreakdown {
    pub model: String,
    pub task: String,
    pub per_skill: BTreeMap<String, SkillFulfillment>,
    /// Sum of contributions, in [0, 1] for normalized requirements.
    pub total: f64,
    /// Same sum without the min clamp; the tie-break's headroom signal.
    pub uncapped_total: f64,
    pub capped_skills: BTreeSet<String>,
}

/// Capped skill fulfillment: each required skill contributes
/// min(1, C'/(k*R)) * R. Exceeding a requirement earns no extra credit.
pub fn match_score(profile: &CapabilityProfile, task: &SubtaskProfile) -> Result<MatchBreakdown> {
    let requirements = task.requirements.as_ref().ok_or_else(|| Error::UnprofiledTask {
        task: task.name.clone(),
        missing: "requirements".into(),
    })?;
    let complexity = task.complexity.ok_or_else(|| Error::UnprofiledTask {
        task: task.name.clone(),
        missing: "complexity".into(),
    })?;
    match_score_inner(profile, &task.name, requirements, complexity)
}

pub(crate) fn match_score_inner(
    profile: &CapabilityProfile,
    task_name: &str,
    requirements: &SkillVector,
    complexity: f64,
) -> Result<MatchBreakdown> {
    if complexity <= 0.0 {
        return Err(Error::Domain(format!(
            "task {task_name:?}: complexity must be > 0 for matching, got {complexity}"
        )));
    }
    let mut per_skill = BTreeMap::new();
    let mut capped_skills = BTreeSet::new();
    let mut total = 0.0;
    let mut uncapped_total = 0.0;
    let mut all_saturated = true;
    for (skill, weight) in requirements.support() {
        let capability = profile.calibrated_for(skill).ok_or_else(|| Error::MissingCapability {
            model: profile.model.clone(),
            skill: skill.to_string(),
        })?;
        let raw_ratio = capability / (complexity * weight);
        let capped = raw_ratio >= 1.0;
        let ratio = if capped { 1.0 } else { raw_ratio };
        if capped {
            capped_skills.insert(skill.to_string());
        } else {
            all_saturated = false;
        }
        total += ratio * weight;
        uncapped_total += raw_ratio * weight;
        per_skill.insert(
            skill.to_string(),
            SkillFulfillment { ratio, contribution: ratio * weight, capped },
        );
    }
    // Normalized requirements sum to 1, so full saturation means the match is
    // exactly 1 by definition; short-circuiting avoids the rounding residue
    // of summing the weights again.
    if all_saturated && !per_skill.is_empty() {
        total = 1.0;
    }
    Ok(MatchBreakdown {
        model: profile.model.clone(),
        task: task_name.to_string(),
        per_skill,
        total,
        uncapped_total,
        capped_skills,
    })
}

/// One scored candidate for a task in objective mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub model: String,
    pub match_total: f64,
    /// Min-max cost penalty at the task's skew.
    pub penalty: f64,
    /// The routed objective: q_eff * max(1-c, eps) * match - c * max(1-q_eff, eps) * penalty.
    pub objective: f64,
    pub uncapped_match: f64,
    pub capped_skills: BTreeSet<String>,
    pub breakdown: MatchBreakdown,
}

/// Which term or tie-break determined a winner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecisiveFactor {
    MatchDominant,
    CostDominant,
    TiebreakUncapped,
    TiebreakCost,
    QualityWeightDecisive,
}

impl std::fmt::Display for DecisiveFactor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            DecisiveFactor::MatchDominant => "match-dominant",
            DecisiveFactor::CostDominant => "cost-dominant",
            DecisiveFactor::TiebreakUncapped => "tiebreak-uncapped",
            DecisiveFactor::TiebreakCost => "tiebreak-cost",
            DecisiveFactor::QualityWeightDecisive => "quality-weight-decisive",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingDecision {
    pub task: String,
    pub winner: CandidateScore,
    pub runner_up: Option<CandidateScore>,
    /// winner.objective - runner_up.objective, clamped at 0 inside a tie group.
    pub margin: Option<f64>,
    pub decisive_factor: DecisiveFactor,
    /// Every candidate, best first (tie groups ordered by the tie-break).
    pub all_candidates: Vec<CandidateScore>,
}

/// Where objective-mode cost penalties come from: computed from prices, or
/// injected from a fixture file for regression against published traces.
#[derive(Debug, Clone, Copy)]
pub enum PenaltySource<'a> {
    Computed,
    Fixture(&'a PenaltyFixture),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyFixture {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub source: String,
    /// task name -> model name -> penalty
    pub penalties: BTreeMap<String, BTreeMap<String, f64>>,
}

fn default_schema_version() -> u32 {
    1
}

impl PenaltyFixture {
    pub fn from_json(json: &str) -> Result<PenaltyFixture> {
        let fixture: PenaltyFixture = serde_json::from_str(json)?;
        for (task, by_model) in &fixture.penalties {
            for (model, penalty) in by_model {
                if !(0.0..=1.0).contains(penalty) {
                    return Err(Error::Config(format!(
                        "penalty fixture: task {task:?}, model {model:?} has penalty {penalty} outside [0, 1]"
                    )));
                }
            }
        }
        Ok(fixture)
    }

    fn get(&self, task: &str, model: &str) -> Result<f64> {
        self.penalties
            .get(task)
            .and_then(|m| m.get(model))
            .copied()
            .ok_or_else(|| Error::PenaltyFixtureMiss {
                task: task.to_string(),
                model: model.to_string(),
            })
    }
}

/// Fully profiled view of a subtask, resolved once per routing run.
pub(crate) struct ResolvedTask<'a> {
    pub name: &'a str,
    pub requirements: &'a SkillVector,
    pub complexity: f64,
    pub quality_effective: f64,
    pub tokens_in: u64,
    pub tokens_out: u64,
}

pub(crate) fn resolve_tasks(workflow: &Workflow) -> Result<Vec<ResolvedTask<'_>>> {
    workflow
        .subtasks
        .iter()
        .map(|t| {
            let missing = t.missing_fields();
            if !missing.is_empty() {
                return Err(Error::UnprofiledTask {
                    task: t.name.clone(),
                    missing: missing.join(", "),
                });
            }
            Ok(ResolvedTask {
                name: &t.name,
                requirements: t.requirements.as_ref().unwrap(),
                complexity: t.complexity.unwrap(),
                quality_effective: t.effective_quality().unwrap(),
                tokens_in: t.est_input_tokens.unwrap(),
                tokens_out: t.est_output_tokens.unwrap(),
            })
        })
        .collect()
}

fn profile_for<'a>(profiles: &'a ProfileSet, model: &str) -> Result<&'a CapabilityProfile> {
    profiles
        .get(model)
        .ok_or_else(|| Error::UnknownModel { model: model.to_string() })
}

/// Ordered tie-break among candidates with indistinguishable objectives:
/// highest uncapped match, then lowest cost penalty, then lexicographic
/// model name as a determinism backstop.
pub fn break_tie<'a>(candidates: &[&'a CandidateScore]) -> &'a CandidateScore {
    candidates
        .iter()
        .copied()
        .min_by(|a, b| tie_break_cmp(a, b))
        .expect("break_tie requires at least one candidate")
}

fn tie_break_cmp(a: &CandidateScore, b: &CandidateScore) -> std::cmp::Ordering {
    b.uncapped_match
        .total_cmp(&a.uncapped_match)
        .then(a.penalty.total_cmp(&b.penalty))
        .then(a.model.cmp(&b.model))
}

/// Orders candidates best-first: descending objective, tie groups (within
/// TIE_TOLERANCE) resolved by the tie-break chain. Order-independent of the
/// input permutation.
fn rank_candidates(mut candidates: Vec<CandidateScore>) -> Vec<CandidateScore> {
    let mut ordered = Vec::with_capacity(candidates.len());
    while !candidates.is_empty() {
        let best = candidates
            .iter()
            .map(|c| c.objective)
            .fold(f64::NEG_INFINITY, f64::max);
        let pick = {
            let group: Vec<&CandidateScore> = candidates
                .iter()
                .filter(|c| c.objective >= best - TIE_TOLERANCE)
                .collect();
            break_tie(&group).model.clone()
        };
        let idx = candidates.iter().position(|c| c.model == pick).unwrap();
        ordered.push(candidates.remove(idx));
    }
    ordered
}

fn classify_decision(
    winner: &CandidateScore,
    runner_up: &CandidateScore,
    quality_weight: f64,
    cost_weight: f64,
    c_global: f64,
) -> DecisiveFactor {
    if winner.objective - runner_up.objective <= TIE_TOLERANCE {
        // A formal tie: name the criterion that actually discriminated.
        // When penalties are equal too, the lexicographic backstop decided,
        // which the taxonomy folds into the cost tie-break.
        if (winner.uncapped_match - runner_up.uncapped_match).abs() > 1e-12 {
            return DecisiveFactor::TiebreakUncapped;
        }
        return DecisiveFactor::TiebreakCost;
    }
    let quality_gain = quality_weight * (winner.match_total - runner_up.match_total);
    let cost_gain = cost_weight * (runner_up.penalty - winner.penalty);
    if quality_gain >= cost_gain {
        if c_global > 0.5 {
            DecisiveFactor::QualityWeightDecisive
        } else {
            DecisiveFactor::MatchDominant
        }
    } else {
        DecisiveFactor::CostDominant
    }
}

/// Routes every task independently by maximizing
/// q_eff * max(1-c, eps) * Match - c * max(1-q_eff, eps) * penalty.
pub fn objective_route(
    workflow: &Workflow,
    profiles: &ProfileSet,
    models: &[ModelRecord],
    c_global: f64,
    penalty_source: PenaltySource<'_>,
) -> Result<Vec<RoutingDecision>> {
    if models.is_empty() {
        return Err(Error::EmptyModelSet);
    }
    if !(0.0..=1.0).contains(&c_global) {
        return Err(Error::Domain(format!(
            "cost sensitivity must be in [0, 1], got {c_global}"
        )));
    }
    let tasks = resolve_tasks(workflow)?;
    let mut decisions = Vec::with_capacity(tasks.len());
    for task in &tasks {
        let task_skew = skew(task.tokens_in, task.tokens_out)?;
        let penalties: BTreeMap<String, f64> = match penalty_source {
            PenaltySource::Computed => cost_penalty(models, task_skew)?,
            PenaltySource::Fixture(fixture) => models
                .iter()
                .map(|m| Ok((m.name.clone(), fixture.get(task.name, &m.name)?)))
                .collect::<Result<_>>()?,
        };
        let quality_weight = task.quality_effective * (1.0 - c_global).max(EPSILON);
        let cost_weight = c_global * (1.0 - task.quality_effective).max(EPSILON);

        let mut candidates = Vec::with_capacity(models.len());
        for model in models {
            let profile = profile_for(profiles, &model.name)?;
            let breakdown =
                match_score_inner(profile, task.name, task.requirements, task.complexity)?;
            let penalty = penalties[&model.name];
            let objective = quality_weight * breakdown.total - cost_weight * penalty;
            candidates.push(CandidateScore {
                model: model.name.clone(),
                match_total: breakdown.total,
                penalty,
                objective,
                uncapped_match: breakdown.uncapped_total,
                capped_skills: breakdown.capped_skills.clone(),
                breakdown,
            });
        }
        let ordered = rank_candidates(candidates);
        let winner = ordered[0].clone();
        let runner_up = ordered.get(1).cloned();
        let margin = runner_up
            .as_ref()
            .map(|r| (winner.objective - r.objective).max(0.0));
        let decisive_factor = match &runner_up {
            Some(r) => classify_decision(&winner, r, quality_weight, cost_weight, c_global),
            None => DecisiveFactor::MatchDominant,
        };
        decisions.push(RoutingDecision {
            task: task.name.to_string(),
            winner,
            runner_up,
            margin,
            decisive_factor,
            all_candidates: ordered,
        });
    }
    Ok(decisions)
}

/// One candidate in budget mode: exact cost plus the quality the DP optimizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetCandidate {
    pub model: String,
    pub match_total: f64,
    pub cost: Money,
    /// q_eff * match: the task's contribution to plan quality.
    pub quality: f64,
    pub uncapped_match: f64,
    pub capped_skills: BTreeSet<String>,
    pub breakdown: MatchBreakdown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetTaskTrace {
    pub task: String,
    pub chosen: String,
    pub candidates: Vec<BudgetCandidate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub task: String,
    pub model: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DpTableSummary {
    pub tasks: usize,
    pub budget_cents: u64,
    pub step_cents: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetPlan {
    /// Task order matches the workflow sequence.
    pub assignments: Vec<Assignment>,
    pub total_cost: Money,
    pub total_quality: f64,
    pub budget: Money,
    pub runs: u64,
    pub dp_table_summary: DpTableSummary,
    pub traces: Vec<BudgetTaskTrace>,
}

impl BudgetPlan {
    pub fn assignment_for(&self, task: &str) -> Option<&str> {
        self.assignments
            .iter()
            .find(|a| a.task == task)
            .map(|a| a.model.as_str())
    }
}

#[derive(Clone, Copy)]
struct DpCell {
    quality: f64,
    cost_cents: u64,
    model: usize,
}

/// Maximizes total q_eff * Match subject to an absolute dollar budget over
/// `runs` executions of the whole pipeline. Budget axis is discretized to
/// whole cents with per-task costs rounded up, so a reported plan can never
/// overspend. Among equal-quality plans the cheaper one wins, then the
/// lexicographically smaller model name, making the result independent of
/// model ordering.
pub fn budget_route(
    workflow: &Workflow,
    profiles: &ProfileSet,
    models: &[ModelRecord],
    budget: Money,
    runs: u64,
) -> Result<BudgetPlan> {
    if models.is_empty() {
        return Err(Error::EmptyModelSet);
    }
    if !budget.is_positive() {
        return Err(Error::Domain(format!("budget must be > 0, got {budget}")));
    }
    if runs == 0 {
        return Err(Error::Domain("runs must be >= 1".into()));
    }
    let tasks = resolve_tasks(workflow)?;

    // Score every pair up front.
    let mut costs: Vec<Vec<Money>> = Vec::with_capacity(tasks.len());
    let mut cents: Vec<Vec<u64>> = Vec::with_capacity(tasks.len());
    let mut qualities: Vec<Vec<f64>> = Vec::with_capacity(tasks.len());
    let mut traces: Vec<Vec<BudgetCandidate>> = Vec::with_capacity(tasks.len());
    for task in &tasks {
        let mut row_cost = Vec::with_capacity(models.len());
        let mut row_cents = Vec::with_capacity(models.len());
        let mut row_quality = Vec::with_capacity(models.len());
        let mut row_trace = Vec::with_capacity(models.len());
        for model in models {
            let profile = profile_for(profiles, &model.name)?;
            let breakdown =
                match_score_inner(profile, task.name, task.requirements, task.complexity)?;
            let cost = cost_abs(model, task.tokens_in, task.tokens_out, runs)?;
            let quality = task.quality_effective * breakdown.total;
            row_cost.push(cost);
            row_cents.push(cost.cents_ceil() as u64);
            row_quality.push(quality);
            row_trace.push(BudgetCandidate {
                model: model.name.clone(),
                match_total: breakdown.total,
                cost,
                quality,
                uncapped_match: breakdown.uncapped_total,
                capped_skills: breakdown.capped_skills.clone(),
                breakdown,
            });
        }
        costs.push(row_cost);
        cents.push(row_cents);
        qualities.push(row_quality);
        traces.push(row_trace);
    }

    let cheapest_plan_cost: Money = costs
        .iter()
        .map(|row| *row.iter().min().expect("non-empty model set"))
        .sum();
    let cheapest_cents: u64 = cents
        .iter()
        .map(|row| *row.iter().min().expect("non-empty model set"))
        .sum();
    let budget_cents_full = budget.cents_floor();
    if budget_cents_full < 0 || (budget_cents_full as u64) < cheapest_cents {
        return Err(Error::InfeasibleBudget {
            budget: budget.to_string(),
            cheapest_plan_cost: cheapest_plan_cost.to_string(),
        });
    }
    // Beyond the cost of taking the priciest model everywhere the constraint
    // is slack; capping keeps the table small for generous budgets.
    let max_cents: u64 = cents
        .iter()
        .map(|row| *row.iter().max().expect("non-empty model set"))
        .sum();
    let cap = (budget_cents_full as u64).min(max_cents);

    const MAX_DP_CELLS: u64 = 20_000_000;
    if (cap + 1).saturating_mul(tasks.len() as u64) > MAX_DP_CELLS {
        return Err(Error::Domain(format!(
            "budget table would need {} cells ({} tasks x {} cent columns); \
             reduce runs or the budget so the cent-discretized table stays tractable",
            (cap + 1) * tasks.len() as u64,
            tasks.len(),
            cap + 1
        )));
    }

    let width = cap as usize + 1;
    let mut prev: Vec<Option<DpCell>> =
        vec![Some(DpCell { quality: 0.0, cost_cents: 0, model: usize::MAX }); width];
    let mut rows: Vec<Vec<Option<DpCell>>> = Vec::with_capacity(tasks.len());
    for i in 0..tasks.len() {
        let mut row: Vec<Option<DpCell>> = vec![None; width];
        for (m, model) in models.iter().enumerate() {
            let cc = cents[i][m] as usize;
            let q = qualities[i][m];
            for c in cc..width {
                if let Some(p) = prev[c - cc] {
                    let cand = DpCell {
                        quality: p.quality + q,
                        cost_cents: p.cost_cents + cc as u64,
                        model: m,
                    };
                    let better = match row[c] {
                        None => true,
                        Some(cur) => {
                            cand.quality > cur.quality
                                || (cand.quality == cur.quality
                                    && (cand.cost_cents < cur.cost_cents
                                        || (cand.cost_cents == cur.cost_cents
                                            && model.name < models[cur.model].name)))
                        }
                    };
                    if better {
                        row[c] = Some(cand);
                    }
                }
            }
        }
        rows.push(row.clone());
        prev = row;
    }

    // Backtrace from the full-budget column.
    let mut c = cap as usize;
    let final_cell = rows[tasks.len() - 1][c].ok_or_else(|| Error::InfeasibleBudget {
        budget: budget.to_string(),
        cheapest_plan_cost: cheapest_plan_cost.to_string(),
    })?;
    let mut chosen = vec![usize::MAX; tasks.len()];
    for i in (0..tasks.len()).rev() {
        let cell = rows[i][c].expect("backtrace hit an unreachable cell");
        chosen[i] = cell.model;
        c -= cents[i][cell.model] as usize;
    }

    let total_cost: Money = chosen
        .iter()
        .enumerate()
        .map(|(i, &m)| costs[i][m])
        .sum();
    debug_assert!(total_cost <= budget, "discretized plan overspent the budget");
    let total_quality: f64 = chosen
        .iter()
        .enumerate()
        .map(|(i, &m)| qualities[i][m])
        .sum();
    debug_assert!((total_quality - final_cell.quality).abs() < 1e-9);

    let assignments = tasks
        .iter()
        .zip(&chosen)
        .map(|(t, &m)| Assignment { task: t.name.to_string(), model: models[m].name.clone() })
        .collect();
    let traces = tasks
        .iter()
        .zip(traces)
        .zip(&chosen)
        .map(|((t, candidates), &m)| BudgetTaskTrace {
            task: t.name.to_string(),
            chosen: models[m].name.clone(),
            candidates,
        })
        .collect();

    Ok(BudgetPlan {
        assignments,
        total_cost,
        total_quality,
        budget,
        runs,
        dp_table_summary: DpTableSummary { tasks: tasks.len(), budget_cents: cap, step_cents: 1 },
        traces,
    })
}

/// Objective-mode totals: the exact absolute cost of executing each winner
/// `runs` times, plus the quality sum the budget objective would report.
pub fn objective_totals(
    decisions: &[RoutingDecision],
    workflow: &Workflow,
    models: &[ModelRecord],
    runs: u64,
) -> Result<(Money, f64)> {
    let mut cost = Money::ZERO;
    let mut quality = 0.0;
    for decision in decisions {
        let task = workflow
            .get(&decision.task)
            .ok_or_else(|| Error::UnknownTask { task: decision.task.clone() })?;
        let model = models
            .iter()
            .find(|m| m.name == decision.winner.model)
            .ok_or_else(|| Error::UnknownModel { model: decision.winner.model.clone() })?;
        cost += cost_abs(
            model,
            task.est_input_tokens.unwrap_or(0),
            task.est_output_tokens.unwrap_or(0),
            runs,
        )?;
        quality += task.effective_quality().unwrap_or(0.0) * decision.winner.match_total;
    }
    Ok((cost, quality))
}

/// Relative rate for one model at one task's skew; exposed for reporting.
pub fn task_rate(model: &ModelRecord, tokens_in: u64, tokens_out: u64) -> Result<f64> {
    cost_rel(model, skew(tokens_in, tokens_out)?)
}
