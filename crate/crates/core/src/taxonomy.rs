//! The shared skill space. Benchmarks, model capabilities and task
//! requirements are all expressed as weight vectors over one taxonomy, which
//! is what makes them directly comparable.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, ValidationIssue};

/// Sum tolerance for a vector that claims to be normalized.
pub const NORMALIZED_SUM_TOLERANCE: f64 = 1e-6;
/// How far a file-supplied vector's sum may drift from 1.0 before ingest
/// refuses to silently renormalize it.
pub const INGEST_DRIFT_TOLERANCE: f64 = 1e-3;
/// LLM-produced weights drift further than hand-written files; profiling
/// renormalizes anything within this band and errors beyond it.
pub const PROFILER_DRIFT_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skill {
    pub id: String,
    pub description: String,
}

/// A named, described skill set. Immutable once constructed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkillTaxonomy {
    skills: Vec<Skill>,
    ids: BTreeSet<String>,
}

impl SkillTaxonomy {
    pub fn new(skills: Vec<Skill>) -> Result<SkillTaxonomy> {
        let mut issues = Vec::new();
        let mut ids = BTreeSet::new();
        for skill in &skills {
            if skill.id.is_empty() {
                issues.push(ValidationIssue {
                    subject: "taxonomy".into(),
                    message: "empty skill id".into(),
                });
            }
            if skill.description.trim().is_empty() {
                issues.push(ValidationIssue {
                    subject: skill.id.clone(),
                    message: "empty description".into(),
                });
            }
            if !ids.insert(skill.id.clone()) {
                issues.push(ValidationIssue {
                    subject: skill.id.clone(),
                    message: "duplicate skill id".into(),
                });
            }
        }
        if issues.is_empty() {
            Ok(SkillTaxonomy { skills, ids })
        } else {
            Err(Error::validation(issues))
        }
    }

    pub fn from_json(json: &str) -> Result<SkillTaxonomy> {
        let skills: Vec<Skill> = serde_json::from_str(json)?;
        SkillTaxonomy::new(skills)
    }

    pub fn skills(&self) -> &[Skill] {
        &self.skills
    }

    pub fn contains(&self, id: &str) -> bool {
        self.ids.contains(id)
    }

    pub fn len(&self) -> usize {
        self.skills.len()
    }

    pub fn is_empty(&self) -> bool {
        self.skills.is_empty()
    }

    /// One "- id: description" line per skill, in declaration order. This is
    /// the {skill_definitions} block handed to the profiling prompts.
    pub fn definitions_block(&self) -> String {
        self.skills
            .iter()
            .map(|s| format!("- {}: {}", s.id, s.description))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Nonnegative weights over skill ids. Sparse: absent keys mean weight 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(transparent)]
pub struct SkillVector {
    weights: BTreeMap<String, f64>,
}

impl SkillVector {
    pub fn new(weights: BTreeMap<String, f64>) -> SkillVector {
        SkillVector { weights }
    }

    pub fn from_pairs<I, S>(pairs: I) -> SkillVector
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        SkillVector {
            weights: pairs.into_iter().map(|(k, v)| (k.into(), v)).collect(),
        }
    }

    pub fn weights(&self) -> &BTreeMap<String, f64> {
        &self.weights
    }

    pub fn get(&self, skill: &str) -> f64 {
        self.weights.get(skill).copied().unwrap_or(0.0)
    }

    pub fn sum(&self) -> f64 {
        self.weights.values().sum()
    }

    /// Skills with strictly positive weight.
    pub fn support(&self) -> impl Iterator<Item = (&str, f64)> {
        self.weights
            .iter()
            .filter(|(_, w)| **w > 0.0)
            .map(|(k, w)| (k.as_str(), *w))
    }

    pub fn is_normalized(&self) -> bool {
        (self.sum() - 1.0).abs() <= NORMALIZED_SUM_TOLERANCE
    }

    /// Scales the vector so its weights sum to 1. Proportions and support are
    /// preserved; zero entries stay zero. Idempotent.
    pub fn normalize(&self) -> Result<SkillVector> {
        let total = self.sum();
        if total <= 0.0 {
            return Err(Error::ZeroVector);
        }
        if self.is_normalized() {
            // Exact idempotence: re-normalizing an already normalized vector
            // must not perturb weights by another rounding step.
            return Ok(self.clone());
        }
        let weights = self
            .weights
            .iter()
            .map(|(k, w)| (k.clone(), w / total))
            .collect();
        Ok(SkillVector { weights })
    }

    /// Ingest-time cleanup for a vector that should already be normalized:
    /// accepts drift up to `tolerance`, renormalizes silently, and reports
    /// anything worse as a validation issue.
    pub fn renormalized_within(&self, tolerance: f64, subject: &str) -> Result<SkillVector> {
        let issues = self.check(None, tolerance, subject);
        if !issues.is_empty() {
            return Err(Error::validation(issues));
        }
        self.normalize()
    }

    /// Structured validation against an optional taxonomy: unknown ids,
    /// negative weights, normalization drift. Never aborts early.
    pub fn check(
        &self,
        taxonomy: Option<&SkillTaxonomy>,
        drift_tolerance: f64,
        subject: &str,
    ) -> Vec<ValidationIssue> {
        let mut issues = Vec::new();
        for (skill, weight) in &self.weights {
            if let Some(tax) = taxonomy {
                if !tax.contains(skill) {
                    issues.push(ValidationIssue {
                        subject: subject.to_string(),
                        message: format!("unknown skill {skill:?}"),
                    });
                }
            }
            if *weight < 0.0 {
                issues.push(ValidationIssue {
                    subject: subject.to_string(),
                    message: format!("negative weight {weight} for skill {skill:?}"),
                });
            }
            if !weight.is_finite() {
                issues.push(ValidationIssue {
                    subject: subject.to_string(),
                    message: format!("non-finite weight for skill {skill:?}"),
                });
            }
        }
        // Negative entries carry no usable weight, so the drift check runs
        // over the nonnegative mass only.
        let mass: f64 = self.weights.values().filter(|w| **w > 0.0).sum();
        if (mass - 1.0).abs() > drift_tolerance {
            issues.push(ValidationIssue {
                subject: subject.to_string(),
                message: format!("weights sum to {mass}, outside 1.0 +/- {drift_tolerance}"),
            });
        }
        issues
    }

    /// Validates against a taxonomy with the standard ingest drift tolerance.
    pub fn validate_against_taxonomy(&self, taxonomy: &SkillTaxonomy) -> Vec<ValidationIssue> {
        self.check(Some(taxonomy), INGEST_DRIFT_TOLERANCE, "skill vector")
    }

    pub fn dot(&self, other: &SkillVector) -> f64 {
        self.weights
            .iter()
            .map(|(k, w)| w * other.get(k))
            .sum()
    }
}

/// The eight-skill taxonomy the case study ships with.
pub fn default_taxonomy() -> SkillTaxonomy {
    let mk = |id: &str, description: &str| Skill {
        id: id.to_string(),
        description: description.to_string(),
    };
    SkillTaxonomy::new(vec![
        mk(
            "mathematical_reasoning",
            "Solving quantitative problems: arithmetic, algebra, multi-step numeric derivations, and symbolic manipulation.",
        ),
        mk(
            "logical_reasoning",
            "Drawing sound conclusions from premises: deduction, causal analysis, constraint satisfaction, and multi-step inference.",
        ),
        mk(
            "code_generation",
            "Writing, repairing, and reasoning about source code across languages and codebases.",
        ),
        mk(
            "tool_use",
            "Invoking external functions and APIs correctly: argument construction, call sequencing, and deciding when a tool is needed.",
        ),
        mk(
            "factual_knowledge",
            "Recalling accurate world knowledge across domains and grounding answers in it.",
        ),
        mk(
            "writing_quality",
            "Producing clear, well-organized, audience-appropriate prose with good style and tone.",
        ),
        mk(
            "instruction_following",
            "Adhering precisely to stated constraints, formats, and multi-part directions.",
        ),
        mk(
            "summarization",
            "Condensing long or messy content into faithful, concise digests that keep the load-bearing details.",
        ),
    ])
    .expect("default taxonomy is valid")
}
