//! Human-readable stdout rendering: one trace table per routing run,
//! mirroring the columns of the engine's decision rows.

use skillrouter_core::artifacts::{PenaltyOrCost, RoutingResultFile};
use skillrouter_core::{BudgetPlan, RoutingMode};

fn penalty_or_cost_text(value: &PenaltyOrCost) -> String {
    match value {
        PenaltyOrCost::Penalty(p) => format!("{p:.3}"),
        PenaltyOrCost::Cost(c) => format!("${}", c.to_decimal_string()),
    }
}

pub fn print_result_table(result: &RoutingResultFile) {
    let header = match result.mode {
        RoutingMode::Objective => format!(
            "mode=objective  c_global={:.2}  kappa={}  runs={}",
            result.config.c_global.unwrap_or_default(),
            result.config.kappa,
            result.config.runs,
        ),
        RoutingMode::Budget => format!(
            "mode=budget  budget=${}  kappa={}  runs={}",
            result
                .config
                .budget
                .map(|b| b.to_decimal_string())
                .unwrap_or_default(),
            result.config.kappa,
            result.config.runs,
        ),
    };
    println!("{header}");
    println!(
        "{:<24} {:<18} {:>7} {:>9} {:>8} {:>7}  decisive factor",
        "task", "model", "match", "cost/pen", "score", "margin",
    );
    for row in &result.decisions {
        let margin = row
            .margin
            .map(|m| format!("{m:.3}"))
            .unwrap_or_else(|| "-".into());
        let factor = row
            .decisive_factor
            .map(|f| f.to_string())
            .unwrap_or_else(|| "budget-plan".into());
        println!(
            "{:<24} {:<18} {:>7.3} {:>9} {:>8.3} {:>7}  {}",
            row.task,
            row.winner.model,
            row.winner.match_total,
            penalty_or_cost_text(&row.winner.penalty_or_cost),
            row.winner.objective,
            margin,
            factor,
        );
    }
    println!(
        "totals: cost=${}  quality={:.4}",
        result.totals.cost_usd.to_decimal_string(),
        result.totals.quality
    );
}

pub fn print_budget_plan_summary(plan: &BudgetPlan) {
    println!(
        "plan uses ${} of ${} across {} tasks (dp: {} columns at {}-cent steps)",
        plan.total_cost.to_decimal_string(),
        plan.budget.to_decimal_string(),
        plan.dp_table_summary.tasks,
        plan.dp_table_summary.budget_cents + 1,
        plan.dp_table_summary.step_cents,
    );
}
