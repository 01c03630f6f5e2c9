//! Benchmark inputs: the shipped case study plus a generator for larger
//! synthetic workloads.

use std::collections::BTreeMap;
use std::path::PathBuf;

use skillrouter_core::{
    CapabilityProfile, Money, ModelRecord, ProfileSet, SkillTaxonomy, SkillVector, SubtaskProfile,
    Workflow,
};

pub struct Instance {
    pub taxonomy: SkillTaxonomy,
    pub models: Vec<ModelRecord>,
    pub profiles: ProfileSet,
    pub workflow: Workflow,
}

fn fixture(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/case_study").join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("reading {}: {e}", path.display()))
}

pub fn case_study() -> Instance {
    let taxonomy = SkillTaxonomy::from_json(&fixture("skills.json")).unwrap();
    let workflow = Workflow::from_json(&fixture("workflow.json"), &taxonomy).unwrap();
    Instance {
        taxonomy,
        models: skillrouter_core::load_models(&fixture("models.json")).unwrap(),
        profiles: ProfileSet::from_json(&fixture("profiles.json"), None).unwrap(),
        workflow,
    }
}

/// A deterministic synthetic instance: `n_tasks` tasks over `n_models`
/// models on the eight-skill taxonomy.
pub fn synthetic(n_tasks: usize, n_models: usize) -> Instance {
    let taxonomy = skillrouter_core::default_taxonomy();
    let skill_ids: Vec<&str> = taxonomy.skills().iter().map(|s| s.id.as_str()).collect();
    let mut state = 0x9e3779b97f4a7c15u64;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };

    let mut models = Vec::new();
    let mut profiles = Vec::new();
    for i in 0..n_models {
        let pin = 1 + (next() * 9_000_000.0) as i128;
        let pout = pin + (next() * 20_000_000.0) as i128;
        models.push(ModelRecord {
            name: format!("model-{i:02}"),
            price_in_per_mtok: Money::from_picodollars(pin * 1_000_000),
            price_out_per_mtok: Money::from_picodollars(pout * 1_000_000),
        });
        let raw: BTreeMap<String, f64> = skill_ids
            .iter()
            .map(|s| (s.to_string(), 0.3 + 0.7 * next()))
            .collect();
        profiles.push(CapabilityProfile::raw_only(format!("model-{i:02}"), raw));
    }
    let profiles = ProfileSet::new(profiles, 0.2).unwrap();

    let mut subtasks = Vec::new();
    for t in 0..n_tasks {
        let k = 2 + (next() * 3.0) as usize;
        let start = (next() * skill_ids.len() as f64) as usize;
        let picked: Vec<&str> = (0..k).map(|j| skill_ids[(start + j) % skill_ids.len()]).collect();
        let weights: Vec<f64> = picked.iter().map(|_| 0.1 + next()).collect();
        let total: f64 = weights.iter().sum();
        subtasks.push(SubtaskProfile {
            name: format!("task-{t:03}"),
            description: format!("synthetic stage {t}"),
            requirements: Some(SkillVector::from_pairs(
                picked.iter().zip(&weights).map(|(s, w)| (s.to_string(), w / total)),
            )),
            complexity: Some(0.2 + 0.8 * next()),
            quality_sensitivity: Some(next()),
            est_input_tokens: Some(200 + (next() * 4000.0) as u64),
            est_output_tokens: Some(100 + (next() * 2000.0) as u64),
            quality_override: None,
        });
    }
    Instance {
        taxonomy,
        models,
        profiles,
        workflow: Workflow { schema_version: 1, name: "synthetic".into(), subtasks, metadata: None },
    }
}
