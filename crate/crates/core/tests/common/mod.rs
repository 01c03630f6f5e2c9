//! Shared fixtures for integration tests: loaders for the case-study files,
//! the published routing traces frozen as data, a brute-force assignment
//! oracle independent of the DP, and a deterministic instance generator.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use skillrouter_core::{
    Money, ModelRecord, PenaltyFixture, ProfileSet, SkillTaxonomy, Workflow,
};

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/case_study")
}

fn read(name: &str) -> String {
    let path = fixture_dir().join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("reading {}: {e}", path.display()))
}

pub struct CaseStudy {
    pub taxonomy: SkillTaxonomy,
    pub models: Vec<ModelRecord>,
    pub profiles: ProfileSet,
    pub workflow: Workflow,
    pub penalties: PenaltyFixture,
}

pub fn case_study() -> CaseStudy {
    let taxonomy = SkillTaxonomy::from_json(&read("skills.json")).expect("skills fixture");
    let models = skillrouter_core::load_models(&read("models.json")).expect("models fixture");
    let profiles = ProfileSet::from_json(&read("profiles.json"), None).expect("profiles fixture");
    let workflow = Workflow::from_json(&read("workflow.json"), &taxonomy).expect("workflow fixture");
    let penalties = PenaltyFixture::from_json(&read("penalties.json")).expect("penalties fixture");
    CaseStudy { taxonomy, models, profiles, workflow, penalties }
}

pub const TC: &str = "Ticket Classification";
pub const KB: &str = "Knowledge Base Search";
pub const TD: &str = "Technical Diagnosis";
pub const RC: &str = "Refund Calculation";
pub const RD: &str = "Response Drafting";
pub const ES: &str = "Escalation Summary";

pub const CLAUDE: &str = "Claude-Opus-4.5";
pub const GEMINI: &str = "Gemini-3-Pro";
pub const GPT: &str = "GPT-5.2";
pub const LLAMA: &str = "Llama-4-Maverick";
pub const MISTRAL: &str = "Mistral-Small-3.1";

/// One published (model, match, penalty, score) cell.
#[derive(Debug, Clone, Copy)]
pub struct PublishedCell {
    pub model: &'static str,
    pub m: f64,
    pub c: f64,
    pub s: f64,
}

/// Runner-up column: either a concrete model cell or "all tied" at the
/// winner's score.
#[derive(Debug, Clone, Copy)]
pub enum PublishedRunnerUp {
    Cell(PublishedCell),
    AllTied { s: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct PublishedRow {
    pub c_global: f64,
    pub task: &'static str,
    pub winner: PublishedCell,
    pub runner_up: PublishedRunnerUp,
    pub delta: f64,
}

const fn cell(model: &'static str, m: f64, c: f64, s: f64) -> PublishedCell {
    PublishedCell { model, m, c, s }
}

const fn row(
    c_global: f64,
    task: &'static str,
    winner: PublishedCell,
    runner_up: PublishedRunnerUp,
    delta: f64,
) -> PublishedRow {
    PublishedRow { c_global, task, winner, runner_up, delta }
}

/// The complete published trace across all five cost-sensitivity settings:
/// winner and runner-up with their match, penalty, and objective columns.
pub fn published_rows() -> Vec<PublishedRow> {
    use PublishedRunnerUp::{AllTied, Cell};
    vec![
        // c = 0.00
        row(0.00, TC, cell(GEMINI, 1.00, 0.143, 0.650), AllTied { s: 0.650 }, 0.000),
        row(0.00, KB, cell(CLAUDE, 0.995, 1.00, 0.547), Cell(cell(GEMINI, 0.981, 0.154, 0.540)), 0.007),
        row(0.00, TD, cell(CLAUDE, 0.711, 1.00, 0.711), Cell(cell(GEMINI, 0.709, 0.144, 0.709)), 0.002),
        row(0.00, RC, cell(GEMINI, 0.697, 0.142, 0.662), Cell(cell(GPT, 0.691, 0.145, 0.657)), 0.005),
        row(0.00, RD, cell(GEMINI, 0.661, 0.145, 0.595), Cell(cell(CLAUDE, 0.649, 1.00, 0.584)), 0.011),
        row(0.00, ES, cell(GEMINI, 1.00, 0.137, 0.400), AllTied { s: 0.400 }, 0.000),
        // c = 0.05
        row(0.05, TC, cell(MISTRAL, 1.00, 0.000, 0.618), Cell(cell(LLAMA, 1.00, 0.009, 0.617)), 0.001),
        row(0.05, KB, cell(GEMINI, 0.981, 0.154, 0.509), Cell(cell(CLAUDE, 0.995, 1.00, 0.498)), 0.011),
        row(0.05, TD, cell(CLAUDE, 0.711, 1.00, 0.675), Cell(cell(GEMINI, 0.709, 0.144, 0.673)), 0.002),
        row(0.05, RC, cell(GEMINI, 0.697, 0.142, 0.629), Cell(cell(GPT, 0.691, 0.145, 0.624)), 0.005),
        row(0.05, RD, cell(GEMINI, 0.661, 0.145, 0.564), Cell(cell(CLAUDE, 0.649, 1.00, 0.550)), 0.014),
        row(0.05, ES, cell(MISTRAL, 1.00, 0.000, 0.380), Cell(cell(LLAMA, 1.00, 0.009, 0.380)), 0.000),
        // c = 0.50
        row(0.50, TC, cell(MISTRAL, 1.00, 0.000, 0.325), Cell(cell(LLAMA, 1.00, 0.009, 0.324)), 0.001),
        row(0.50, KB, cell(GEMINI, 0.981, 0.154, 0.235), Cell(cell(MISTRAL, 0.818, 0.000, 0.225)), 0.010),
        row(0.50, TD, cell(GEMINI, 0.709, 0.144, 0.354), Cell(cell(CLAUDE, 0.711, 1.00, 0.351)), 0.003),
        row(0.50, RC, cell(GEMINI, 0.697, 0.142, 0.328), Cell(cell(GPT, 0.691, 0.145, 0.325)), 0.003),
        row(0.50, RD, cell(GEMINI, 0.661, 0.145, 0.290), Cell(cell(GPT, 0.625, 0.153, 0.273)), 0.017),
        row(0.50, ES, cell(MISTRAL, 1.00, 0.000, 0.200), Cell(cell(LLAMA, 1.00, 0.009, 0.197)), 0.003),
        // c = 0.95
        row(0.95, TC, cell(MISTRAL, 1.00, 0.000, 0.033), Cell(cell(LLAMA, 1.00, 0.009, 0.030)), 0.003),
        row(0.95, KB, cell(MISTRAL, 0.818, 0.000, 0.022), Cell(cell(LLAMA, 0.789, 0.008, 0.018)), 0.004),
        row(0.95, TD, cell(GEMINI, 0.709, 0.144, 0.034), Cell(cell(GPT, 0.684, 0.152, 0.033)), 0.001),
        row(0.95, RC, cell(GEMINI, 0.697, 0.142, 0.026), Cell(cell(GPT, 0.691, 0.145, 0.026)), 0.000),
        row(0.95, RD, cell(MISTRAL, 0.545, 0.000, 0.025), Cell(cell(LLAMA, 0.523, 0.009, 0.023)), 0.002),
        row(0.95, ES, cell(MISTRAL, 1.00, 0.000, 0.020), Cell(cell(LLAMA, 1.00, 0.009, 0.015)), 0.005),
        // c = 1.00
        row(1.00, TC, cell(MISTRAL, 1.00, 0.000, 0.007), Cell(cell(LLAMA, 1.00, 0.009, 0.003)), 0.004),
        row(1.00, KB, cell(MISTRAL, 0.818, 0.000, 0.005), Cell(cell(LLAMA, 0.789, 0.008, 0.001)), 0.004),
        row(1.00, TD, cell(GEMINI, 0.709, 0.144, 0.006), Cell(cell(GPT, 0.684, 0.152, 0.005)), 0.001),
        row(1.00, RC, cell(MISTRAL, 0.462, 0.000, 0.004), Cell(cell(LLAMA, 0.501, 0.009, 0.004)), 0.000),
        row(1.00, RD, cell(MISTRAL, 0.545, 0.000, 0.005), Cell(cell(LLAMA, 0.523, 0.009, 0.004)), 0.001),
        row(1.00, ES, cell(MISTRAL, 1.00, 0.000, 0.004), Cell(cell(LLAMA, 1.00, 0.009, -0.002)), 0.006),
    ]
}

pub const SWEEP_SETTINGS: [f64; 5] = [0.00, 0.05, 0.50, 0.95, 1.00];

/// Published budget plans (task -> model) at $5 / $50 / $100 per 1000 runs.
pub fn published_budget_plans() -> Vec<(Money, BTreeMap<&'static str, &'static str>)> {
    let plan = |entries: [(&'static str, &'static str); 6]| entries.into_iter().collect();
    vec![
        (
            Money::parse("5").unwrap(),
            plan([(TC, MISTRAL), (KB, MISTRAL), (TD, LLAMA), (RC, LLAMA), (RD, MISTRAL), (ES, MISTRAL)]),
        ),
        (
            Money::parse("50").unwrap(),
            plan([(TC, MISTRAL), (KB, GEMINI), (TD, GEMINI), (RC, GEMINI), (RD, GEMINI), (ES, MISTRAL)]),
        ),
        (
            Money::parse("100").unwrap(),
            plan([(TC, MISTRAL), (KB, GEMINI), (TD, CLAUDE), (RC, GEMINI), (RD, GEMINI), (ES, MISTRAL)]),
        ),
    ]
}

// ---------------------------------------------------------------------------
// Brute-force budget oracle
// ---------------------------------------------------------------------------

/// Exhaustive-enumeration optimum over every task->model assignment, at the
/// same 1-cent discretization as the DP (per-task costs rounded up, budget
/// floored). Independent of the DP implementation: plain nested counters.
pub struct OracleResult {
    pub best_quality: f64,
    /// Exact cost of the best plan (min cost among quality maximizers).
    pub best_cost: Money,
    pub assignment: Vec<usize>,
}

pub fn enumerate_optimum(
    quality: &[Vec<f64>],
    cost: &[Vec<Money>],
    budget: Money,
) -> Option<OracleResult> {
    let tasks = quality.len();
    let models = quality[0].len();
    let budget_cents = budget.cents_floor();
    let cents: Vec<Vec<i128>> = cost
        .iter()
        .map(|row| row.iter().map(|c| c.cents_ceil()).collect())
        .collect();

    let mut counters = vec![0usize; tasks];
    let mut best: Option<OracleResult> = None;
    loop {
        let mut total_cents: i128 = 0;
        for (t, &m) in counters.iter().enumerate() {
            total_cents += cents[t][m];
        }
        if total_cents <= budget_cents {
            let mut q = 0.0;
            let mut exact = Money::ZERO;
            for (t, &m) in counters.iter().enumerate() {
                q += quality[t][m];
                exact += cost[t][m];
            }
            let improves = match &best {
                None => true,
                Some(b) => q > b.best_quality || (q == b.best_quality && exact < b.best_cost),
            };
            if improves {
                best = Some(OracleResult {
                    best_quality: q,
                    best_cost: exact,
                    assignment: counters.clone(),
                });
            }
        }
        // Advance the mixed-radix counter.
        let mut idx = 0;
        loop {
            if idx == tasks {
                return best;
            }
            counters[idx] += 1;
            if counters[idx] < models {
                break;
            }
            counters[idx] = 0;
            idx += 1;
        }
    }
}

// ---------------------------------------------------------------------------
// Deterministic random instances
// ---------------------------------------------------------------------------

/// SplitMix64: tiny, seedable, identical on every platform.
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Rng {
        Rng(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    pub fn range(&mut self, lo: u64, hi_inclusive: u64) -> u64 {
        lo + self.next_u64() % (hi_inclusive - lo + 1)
    }

    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

pub struct RandomInstance {
    pub models: Vec<ModelRecord>,
    pub profiles: ProfileSet,
    pub workflow: Workflow,
}

/// Builds a routable instance with `n_tasks` tasks over `n_models` models
/// and a 3-skill taxonomy. Capabilities are drawn low enough that saturation
/// is partial, keeping match scores informative.
pub fn random_instance(rng: &mut Rng, n_tasks: usize, n_models: usize) -> RandomInstance {
    use skillrouter_core::CapabilityProfile;
    let skills = ["alpha_skill", "beta_skill", "gamma_skill"];

    let mut models = Vec::new();
    for i in 0..n_models {
        let price_in_micro = rng.range(50_000, 9_000_000);
        let price_out_micro = rng.range(price_in_micro, 25_000_000);
        models.push(ModelRecord {
            name: format!("model-{i:02}"),
            price_in_per_mtok: Money::from_picodollars(price_in_micro as i128 * 1_000_000),
            price_out_per_mtok: Money::from_picodollars(price_out_micro as i128 * 1_000_000),
        });
    }

    let mut profiles = Vec::new();
    for model in &models {
        let raw: BTreeMap<String, f64> = skills
            .iter()
            .map(|s| (s.to_string(), 0.05 + 0.55 * rng.unit()))
            .collect();
        profiles.push(CapabilityProfile::raw_only(model.name.clone(), raw));
    }
    let profiles = ProfileSet::new(profiles, 1.0).unwrap();

    let mut subtasks = Vec::new();
    for t in 0..n_tasks {
        let mut weights: Vec<(String, f64)> = skills
            .iter()
            .map(|s| (s.to_string(), rng.unit()))
            .filter(|(_, w)| *w > 0.05)
            .collect();
        if weights.is_empty() {
            weights.push((skills[0].to_string(), 1.0));
        }
        let total: f64 = weights.iter().map(|(_, w)| w).sum();
        let requirements = skillrouter_core::SkillVector::from_pairs(
            weights.into_iter().map(|(s, w)| (s, w / total)),
        );
        subtasks.push(skillrouter_core::SubtaskProfile {
            name: format!("task-{t:02}"),
            description: format!("synthetic task {t}"),
            requirements: Some(requirements),
            complexity: Some(0.1 + 0.9 * rng.unit()),
            quality_sensitivity: Some(rng.unit()),
            est_input_tokens: Some(rng.range(1, 5000)),
            est_output_tokens: Some(rng.range(1, 5000)),
            quality_override: None,
        });
    }
    let workflow = Workflow {
        schema_version: 1,
        name: "synthetic".into(),
        subtasks,
        metadata: None,
    };

    RandomInstance { models, profiles, workflow }
}

/// Per-pair (quality, cost) matrices for an instance, in workflow task order
/// and model order; the oracle's inputs.
pub fn score_matrices(
    instance: &RandomInstance,
    runs: u64,
) -> (Vec<Vec<f64>>, Vec<Vec<Money>>) {
    let mut quality = Vec::new();
    let mut cost = Vec::new();
    for task in &instance.workflow.subtasks {
        let mut qrow = Vec::new();
        let mut crow = Vec::new();
        for model in &instance.models {
            let profile = instance.profiles.get(&model.name).unwrap();
            let breakdown = skillrouter_core::match_score(profile, task).unwrap();
            qrow.push(task.effective_quality().unwrap() * breakdown.total);
            crow.push(
                skillrouter_core::cost_abs(
                    model,
                    task.est_input_tokens.unwrap(),
                    task.est_output_tokens.unwrap(),
                    runs,
                )
                .unwrap(),
            );
        }
        quality.push(qrow);
        cost.push(crow);
    }
    (quality, cost)
}
