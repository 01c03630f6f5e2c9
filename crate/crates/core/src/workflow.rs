//! An agentic workflow as the router sees it: an ordered list of subtasks
//! with skill requirements, complexity, quality sensitivity and token
//! estimates. Values are immutable after load; quality overrides produce a
//! new workflow and keep the profiled original for the explanation log.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, ValidationIssue};
use crate::taxonomy::{SkillTaxonomy, SkillVector, INGEST_DRIFT_TOLERANCE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubtaskProfile {
    pub name: String,
    pub description: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub requirements: Option<SkillVector>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub complexity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quality_sensitivity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub est_input_tokens: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub est_output_tokens: Option<u64>,
    /// User adjustment of quality sensitivity. Stored beside, not in place
    /// of, the profiled value so explanations can state both.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quality_override: Option<f64>,
}

impl SubtaskProfile {
    /// Fields the profiler client still has to fill in.
    pub fn missing_fields(&self) -> Vec<&'static str> {
        let mut missing = Vec::new();
        if self.requirements.is_none() {
            missing.push("requirements");
        }
        if self.complexity.is_none() {
            missing.push("complexity");
        }
        if self.quality_sensitivity.is_none() {
            missing.push("quality_sensitivity");
        }
        if self.est_input_tokens.is_none() {
            missing.push("est_input_tokens");
        }
        if self.est_output_tokens.is_none() {
            missing.push("est_output_tokens");
        }
        missing
    }

    pub fn needs_profiling(&self) -> bool {
        !self.missing_fields().is_empty()
    }

    /// Override wins when present, else the profiled value.
    pub fn effective_quality(&self) -> Option<f64> {
        self.quality_override.or(self.quality_sensitivity)
    }

    fn validate(&self, taxonomy: &SkillTaxonomy) -> Vec<ValidationIssue> {
        let mut issues = Vec::new();
        let subject = format!("subtask {}", self.name);
        if self.name.trim().is_empty() {
            issues.push(ValidationIssue {
                subject: "workflow".into(),
                message: "empty subtask name".into(),
            });
        }
        if let Some(req) = &self.requirements {
            issues.extend(req.check(Some(taxonomy), INGEST_DRIFT_TOLERANCE, &subject));
        }
        for (label, value) in [
            ("complexity", self.complexity),
            ("quality_sensitivity", self.quality_sensitivity),
            ("quality_override", self.quality_override),
        ] {
            if let Some(v) = value {
                if !(0.0..=1.0).contains(&v) {
                    issues.push(ValidationIssue {
                        subject: subject.clone(),
                        message: format!("{label} must be in [0, 1], got {v}"),
                    });
                }
            }
        }
        for (label, value) in [
            ("est_input_tokens", self.est_input_tokens),
            ("est_output_tokens", self.est_output_tokens),
        ] {
            if let Some(v) = value {
                if v == 0 {
                    issues.push(ValidationIssue {
                        subject: subject.clone(),
                        message: format!("{label} must be >= 1, got 0"),
                    });
                }
            }
        }
        issues
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Workflow {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    pub name: String,
    /// Order is meaningful: budget routing treats this as the task sequence.
    pub subtasks: Vec<SubtaskProfile>,
    /// Opaque caller metadata (branch structure, provenance, ...). Carried
    /// through round trips, never interpreted by routing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<serde_json::Value>,
}

fn default_schema_version() -> u32 {
    1
}

impl Workflow {
    pub fn from_json(json: &str, taxonomy: &SkillTaxonomy) -> Result<Workflow> {
        let mut wf: Workflow = serde_json::from_str(json)?;
        if wf.schema_version != 1 {
            return Err(Error::Config(format!(
                "unsupported workflow schema_version {}",
                wf.schema_version
            )));
        }
        let mut issues = Vec::new();
        if wf.subtasks.is_empty() {
            issues.push(ValidationIssue {
                subject: wf.name.clone(),
                message: "workflow has no subtasks".into(),
            });
        }
        let mut seen = std::collections::BTreeSet::new();
        for task in &wf.subtasks {
            if !seen.insert(task.name.clone()) {
                issues.push(ValidationIssue {
                    subject: task.name.clone(),
                    message: "duplicate subtask name".into(),
                });
            }
            issues.extend(task.validate(taxonomy));
        }
        if !issues.is_empty() {
            return Err(Error::validation(issues));
        }
        for task in &mut wf.subtasks {
            if let Some(req) = &task.requirements {
                task.requirements = Some(req.normalize()?);
            }
        }
        Ok(wf)
    }

    pub fn get(&self, task: &str) -> Option<&SubtaskProfile> {
        self.subtasks.iter().find(|t| t.name == task)
    }

    /// Names of subtasks the profiler still needs to complete.
    pub fn unprofiled(&self) -> Vec<&str> {
        self.subtasks
            .iter()
            .filter(|t| t.needs_profiling())
            .map(|t| t.name.as_str())
            .collect()
    }

    /// Returns a new workflow with the task's effective quality sensitivity
    /// set to `q`. The profiled value is retained.
    pub fn with_quality_override(&self, task: &str, q: f64) -> Result<Workflow> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::QualityOutOfRange { value: q });
        }
        let mut wf = self.clone();
        let slot = wf
            .subtasks
            .iter_mut()
            .find(|t| t.name == task)
            .ok_or_else(|| Error::UnknownTask { task: task.to_string() })?;
        slot.quality_override = Some(q);
        Ok(wf)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy::default_taxonomy;

    fn minimal_workflow_json() -> String {
        serde_json::json!({
            "name": "pipeline",
            "subtasks": [
                {
                    "name": "step one",
                    "description": "does the first thing",
                    "requirements": {"summarization": 1.0},
                    "complexity": 0.5,
                    "quality_sensitivity": 0.4,
                    "est_input_tokens": 100,
                    "est_output_tokens": 50
                }
            ]
        })
        .to_string()
    }

    #[test]
    fn loads_and_flags_nothing_for_complete_tasks() {
        let wf = Workflow::from_json(&minimal_workflow_json(), &default_taxonomy()).unwrap();
        assert!(wf.unprofiled().is_empty());
    }

    #[test]
    fn empty_subtask_list_is_an_error() {
        let json = serde_json::json!({"name": "empty", "subtasks": []}).to_string();
        assert!(Workflow::from_json(&json, &default_taxonomy()).is_err());
    }

    #[test]
    fn unprofiled_subtask_loads_with_flag() {
        let json = serde_json::json!({
            "name": "partial",
            "subtasks": [{"name": "todo", "description": "no metadata yet"}]
        })
        .to_string();
        let wf = Workflow::from_json(&json, &default_taxonomy()).unwrap();
        assert_eq!(wf.unprofiled(), vec!["todo"]);
        let missing = wf.subtasks[0].missing_fields();
        assert!(missing.contains(&"requirements"));
        assert!(missing.contains(&"est_output_tokens"));
    }

    #[test]
    fn duplicate_names_and_bad_ranges_are_itemized() {
        let json = serde_json::json!({
            "name": "broken",
            "subtasks": [
                {"name": "a", "description": "x", "complexity": 1.4},
                {"name": "a", "description": "y", "quality_sensitivity": -0.2,
                 "est_input_tokens": 0}
            ]
        })
        .to_string();
        match Workflow::from_json(&json, &default_taxonomy()) {
            Err(Error::Validation(issues)) => {
                assert!(issues.iter().any(|i| i.message.contains("duplicate")));
                assert!(issues.iter().any(|i| i.message.contains("complexity")));
                assert!(issues.iter().any(|i| i.message.contains("quality_sensitivity")));
                assert!(issues.iter().any(|i| i.message.contains("est_input_tokens")));
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn quality_override_keeps_original() {
        let wf = Workflow::from_json(&minimal_workflow_json(), &default_taxonomy()).unwrap();
        let adjusted = wf.with_quality_override("step one", 0.9).unwrap();
        let task = adjusted.get("step one").unwrap();
        assert_eq!(task.quality_sensitivity, Some(0.4));
        assert_eq!(task.quality_override, Some(0.9));
        assert_eq!(task.effective_quality(), Some(0.9));
        // Original workflow untouched.
        assert_eq!(wf.get("step one").unwrap().quality_override, None);
    }

    #[test]
    fn quality_override_rejects_bad_inputs() {
        let wf = Workflow::from_json(&minimal_workflow_json(), &default_taxonomy()).unwrap();
        assert!(matches!(
            wf.with_quality_override("step one", 1.2),
            Err(Error::QualityOutOfRange { .. })
        ));
        assert!(matches!(
            wf.with_quality_override("nope", 0.5),
            Err(Error::UnknownTask { .. })
        ));
    }

    #[test]
    fn opaque_metadata_round_trips_untouched() {
        let json = serde_json::json!({
            "name": "branchy",
            "metadata": {"branches": [{"from": "step one", "on": "escalate"}]},
            "subtasks": [{"name": "step one", "description": "d"}]
        })
        .to_string();
        let wf = Workflow::from_json(&json, &default_taxonomy()).unwrap();
        let reparsed: Workflow =
            serde_json::from_str(&crate::artifacts::to_canonical_json(&wf).unwrap()).unwrap();
        assert_eq!(reparsed.metadata, wf.metadata);
        assert!(wf.metadata.unwrap()["branches"].is_array());
    }

    #[test]
    fn override_equal_to_original_changes_nothing_effective() {
        let wf = Workflow::from_json(&minimal_workflow_json(), &default_taxonomy()).unwrap();
        let same = wf.with_quality_override("step one", 0.4).unwrap();
        assert_eq!(
            same.get("step one").unwrap().effective_quality(),
            wf.get("step one").unwrap().effective_quality()
        );
    }
}
