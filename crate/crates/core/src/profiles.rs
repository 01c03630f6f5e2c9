//! Per-model capability profiles synthesized from public benchmark scores.
//! Each benchmark carries a normalized skill decomposition; a model's
//! per-skill capability is the decomposition-weighted average of its 0-max
//! normalized scores across every benchmark that exercises the skill.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, ValidationIssue};
use crate::money::Money;
use crate::taxonomy::{SkillTaxonomy, SkillVector, INGEST_DRIFT_TOLERANCE};

pub const DEFAULT_KAPPA: f64 = 0.2;

/// A routable model with per-million-token prices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub name: String,
    pub price_in_per_mtok: Money,
    pub price_out_per_mtok: Money,
}

impl ModelRecord {
    pub fn validate(&self) -> Vec<ValidationIssue> {
        let mut issues = Vec::new();
        if self.name.trim().is_empty() {
            issues.push(ValidationIssue {
                subject: "model".into(),
                message: "empty model name".into(),
            });
        }
        for (label, price) in [
            ("price_in_per_mtok", self.price_in_per_mtok),
            ("price_out_per_mtok", self.price_out_per_mtok),
        ] {
            if !price.is_positive() {
                issues.push(ValidationIssue {
                    subject: self.name.clone(),
                    message: format!("{label} must be > 0, got {price}"),
                });
            }
            if price.picodollars() % 1_000_000 != 0 {
                issues.push(ValidationIssue {
                    subject: self.name.clone(),
                    message: format!(
                        "{label} has more than 6 fractional digits; per-token cost would not be exact"
                    ),
                });
            }
        }
        issues
    }

    /// Exact price of a single token, in picodollars.
    pub(crate) fn price_in_per_token_pico(&self) -> i128 {
        self.price_in_per_mtok.picodollars() / 1_000_000
    }

    pub(crate) fn price_out_per_token_pico(&self) -> i128 {
        self.price_out_per_mtok.picodollars() / 1_000_000
    }
}

pub fn load_models(json: &str) -> Result<Vec<ModelRecord>> {
    let models: Vec<ModelRecord> = serde_json::from_str(json)?;
    let mut issues: Vec<ValidationIssue> = models.iter().flat_map(|m| m.validate()).collect();
    let mut seen = std::collections::BTreeSet::new();
    for m in &models {
        if !seen.insert(m.name.clone()) {
            issues.push(ValidationIssue {
                subject: m.name.clone(),
                message: "duplicate model name".into(),
            });
        }
    }
    if issues.is_empty() {
        Ok(models)
    } else {
        Err(Error::validation(issues))
    }
}

/// A public benchmark: its skill decomposition and the raw scores collected
/// for the local model set. `max_score` is the best score any model achieved
/// on the benchmark, which may come from outside the local set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRecord {
    pub name: String,
    pub description: String,
    pub skill_weights: SkillVector,
    pub max_score: f64,
    #[serde(default)]
    pub scores: BTreeMap<String, f64>,
}

impl BenchmarkRecord {
    /// Validates the record; returns warnings separately from hard issues.
    /// A published max_score that disagrees with the observed maximum is a
    /// warning (the file value wins).
    pub fn validate(&self, taxonomy: &SkillTaxonomy) -> (Vec<ValidationIssue>, Vec<String>) {
        let mut issues = self.skill_weights.check(
            Some(taxonomy),
            INGEST_DRIFT_TOLERANCE,
            &format!("benchmark {}", self.name),
        );
        let mut warnings = Vec::new();
        if self.max_score <= 0.0 {
            issues.push(ValidationIssue {
                subject: self.name.clone(),
                message: format!("max_score must be > 0, got {}", self.max_score),
            });
        }
        for (model, score) in &self.scores {
            if *score < 0.0 {
                issues.push(ValidationIssue {
                    subject: self.name.clone(),
                    message: format!("negative score {score} for model {model:?}"),
                });
            } else if *score > self.max_score {
                issues.push(ValidationIssue {
                    subject: self.name.clone(),
                    message: format!(
                        "score {score} for model {model:?} exceeds max_score {}",
                        self.max_score
                    ),
                });
            }
        }
        if !self.scores.is_empty() {
            let observed_max = self.scores.values().cloned().fold(f64::MIN, f64::max);
            if (observed_max - self.max_score).abs() > 1e-6 && observed_max < self.max_score {
                warnings.push(format!(
                    "benchmark {}: published max_score {} is above the local best {observed_max}; keeping the published value",
                    self.name, self.max_score
                ));
            }
        }
        (issues, warnings)
    }

    /// 0-max normalization: raw score divided by the best score on the
    /// benchmark. The best model maps to 1.0.
    pub fn normalize_scores(&self) -> Result<BTreeMap<String, f64>> {
        if self.max_score <= 0.0 {
            return Err(Error::InvalidBenchmark {
                name: self.name.clone(),
                reason: format!("max_score must be > 0, got {}", self.max_score),
            });
        }
        Ok(self
            .scores
            .iter()
            .map(|(model, score)| (model.clone(), score / self.max_score))
            .collect())
    }
}

pub fn load_benchmarks(json: &str, taxonomy: &SkillTaxonomy) -> Result<Vec<BenchmarkRecord>> {
    let mut benches: Vec<BenchmarkRecord> = serde_json::from_str(json)?;
    let mut issues = Vec::new();
    for b in &benches {
        let (mut i, _warnings) = b.validate(taxonomy);
        issues.append(&mut i);
    }
    if !issues.is_empty() {
        return Err(Error::validation(issues));
    }
    for b in &mut benches {
        b.skill_weights = b.skill_weights.normalize()?;
    }
    Ok(benches)
}

/// Per-model, per-skill capability scores plus the calibrated variant used
/// for matching.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapabilityProfile {
    pub model: String,
    pub raw: BTreeMap<String, f64>,
    #[serde(default)]
    pub calibrated: BTreeMap<String, f64>,
    /// Calibration factor the `calibrated` map was produced with. Files may
    /// omit it per profile; the set-level kappa governs.
    #[serde(default = "default_profile_kappa")]
    pub kappa: f64,
}

fn default_profile_kappa() -> f64 {
    1.0
}

impl CapabilityProfile {
    pub fn raw_only(model: String, raw: BTreeMap<String, f64>) -> CapabilityProfile {
        let calibrated = raw.clone();
        CapabilityProfile { model, raw, calibrated, kappa: 1.0 }
    }

    /// Applies the calibration factor: calibrated = kappa * raw, entrywise.
    /// Raw scores are retained.
    pub fn calibrate(&self, kappa: f64) -> Result<CapabilityProfile> {
        if !(kappa > 0.0 && kappa <= 1.0) {
            return Err(Error::InvalidKappa { kappa });
        }
        let calibrated = self.raw.iter().map(|(s, c)| (s.clone(), kappa * c)).collect();
        Ok(CapabilityProfile {
            model: self.model.clone(),
            raw: self.raw.clone(),
            calibrated,
            kappa,
        })
    }

    pub fn calibrated_for(&self, skill: &str) -> Option<f64> {
        self.calibrated.get(skill).copied()
    }
}

/// Capability aggregation: for each model and skill,
/// C = sum_b(normalized_score * weight) / sum_b(weight), over the benchmarks
/// where the model has a score (per-model renormalization, so a model missing
/// one leaderboard entry is not dropped wholesale).
pub fn compute_capabilities(
    benchmarks: &[BenchmarkRecord],
    models: &[ModelRecord],
    taxonomy: &SkillTaxonomy,
) -> Result<Vec<CapabilityProfile>> {
    if models.is_empty() {
        return Err(Error::EmptyModelSet);
    }
    // Skills no benchmark exercises can never be scored; surface them all.
    let uncovered: Vec<String> = taxonomy
        .skills()
        .iter()
        .map(|s| s.id.clone())
        .filter(|id| {
            benchmarks
                .iter()
                .map(|b| b.skill_weights.get(id))
                .sum::<f64>()
                <= 0.0
        })
        .collect();
    if !uncovered.is_empty() {
        return Err(Error::UncoveredSkills { skills: uncovered });
    }

    let normalized: Vec<BTreeMap<String, f64>> = benchmarks
        .iter()
        .map(|b| b.normalize_scores())
        .collect::<Result<_>>()?;

    let mut profiles = Vec::with_capacity(models.len());
    for model in models {
        let mut raw = BTreeMap::new();
        for skill in taxonomy.skills() {
            let mut weighted = 0.0;
            let mut weight_total = 0.0;
            for (bench, scores) in benchmarks.iter().zip(&normalized) {
                let w = bench.skill_weights.get(&skill.id);
                if w <= 0.0 {
                    continue;
                }
                if let Some(score) = scores.get(&model.name) {
                    weighted += score * w;
                    weight_total += w;
                }
            }
            if weight_total > 0.0 {
                // Clamp defends the [0, 1] contract against rounding overshoot.
                raw.insert(skill.id.clone(), (weighted / weight_total).clamp(0.0, 1.0));
            }
        }
        profiles.push(CapabilityProfile::raw_only(model.name.clone(), raw));
    }
    Ok(profiles)
}

/// The profiles file: a calibration factor and one profile per model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSet {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    pub kappa: f64,
    pub profiles: Vec<CapabilityProfile>,
}

fn default_schema_version() -> u32 {
    1
}

impl ProfileSet {
    pub fn new(profiles: Vec<CapabilityProfile>, kappa: f64) -> Result<ProfileSet> {
        let profiles = profiles
            .into_iter()
            .map(|p| p.calibrate(kappa))
            .collect::<Result<Vec<_>>>()?;
        Ok(ProfileSet { schema_version: 1, kappa, profiles })
    }

    pub fn get(&self, model: &str) -> Option<&CapabilityProfile> {
        self.profiles.iter().find(|p| p.model == model)
    }

    /// Parses a profiles file and recalibrates from raw scores under
    /// `kappa_override` (or the file's own kappa). A stored calibrated map
    /// that disagrees with kappa * raw is reported as a validation error.
    pub fn from_json(json: &str, kappa_override: Option<f64>) -> Result<ProfileSet> {
        let parsed: ProfileSet = serde_json::from_str(json)?;
        if parsed.schema_version != 1 {
            return Err(Error::Config(format!(
                "unsupported profiles schema_version {}",
                parsed.schema_version
            )));
        }
        let kappa = kappa_override.unwrap_or(parsed.kappa);
        let mut issues = Vec::new();
        for p in &parsed.profiles {
            for (skill, value) in &p.calibrated {
                let expect = parsed.kappa * p.raw.get(skill).copied().unwrap_or(f64::NAN);
                if (expect - value).abs() > 1e-6 || expect.is_nan() {
                    issues.push(ValidationIssue {
                        subject: p.model.clone(),
                        message: format!(
                            "stored calibrated value for {skill:?} is {value}, expected kappa*raw = {expect}"
                        ),
                    });
                }
            }
            for (skill, value) in &p.raw {
                if !(0.0..=1.0).contains(value) {
                    issues.push(ValidationIssue {
                        subject: p.model.clone(),
                        message: format!("raw capability for {skill:?} is {value}, outside [0, 1]"),
                    });
                }
            }
        }
        if !issues.is_empty() {
            return Err(Error::validation(issues));
        }
        ProfileSet::new(
            parsed
                .profiles
                .into_iter()
                .map(|p| CapabilityProfile::raw_only(p.model, p.raw))
                .collect(),
            kappa,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy::default_taxonomy;

    fn model(name: &str, pin: &str, pout: &str) -> ModelRecord {
        ModelRecord {
            name: name.into(),
            price_in_per_mtok: Money::parse(pin).unwrap(),
            price_out_per_mtok: Money::parse(pout).unwrap(),
        }
    }

    fn bench(name: &str, weights: &[(&str, f64)], max: f64, scores: &[(&str, f64)]) -> BenchmarkRecord {
        BenchmarkRecord {
            name: name.into(),
            description: format!("{name} benchmark"),
            skill_weights: SkillVector::from_pairs(weights.iter().map(|(s, w)| (*s, *w))),
            max_score: max,
            scores: scores.iter().map(|(m, s)| (m.to_string(), *s)).collect(),
        }
    }

    #[test]
    fn normalize_scores_maps_best_model_to_one() {
        let b = bench(
            "MATH-500",
            &[("mathematical_reasoning", 0.7), ("logical_reasoning", 0.3)],
            96.4,
            &[("top", 96.4), ("mid", 48.2), ("zero", 0.0)],
        );
        let n = b.normalize_scores().unwrap();
        assert_eq!(n["top"], 1.0);
        assert!((n["mid"] - 0.5).abs() < 1e-12);
        assert_eq!(n["zero"], 0.0);
    }

    #[test]
    fn normalize_scores_rejects_nonpositive_max() {
        let b = bench("broken", &[("tool_use", 1.0)], 0.0, &[("m", 0.0)]);
        assert!(matches!(b.normalize_scores(), Err(Error::InvalidBenchmark { .. })));
    }

    #[test]
    fn single_benchmark_at_max_gives_capability_one() {
        let tax = SkillTaxonomy::new(vec![crate::taxonomy::Skill {
            id: "mathematical_reasoning".into(),
            description: "math".into(),
        }])
        .unwrap();
        let benches = vec![bench(
            "only",
            &[("mathematical_reasoning", 1.0)],
            50.0,
            &[("m", 50.0)],
        )];
        let models = vec![model("m", "1.00", "2.00")];
        let profiles = compute_capabilities(&benches, &models, &tax).unwrap();
        assert_eq!(profiles[0].raw["mathematical_reasoning"], 1.0);
    }

    #[test]
    fn capability_is_weighted_average_of_normalized_scores() {
        let tax = SkillTaxonomy::new(vec![
            crate::taxonomy::Skill { id: "mathematical_reasoning".into(), description: "math".into() },
            crate::taxonomy::Skill { id: "logical_reasoning".into(), description: "logic".into() },
        ])
        .unwrap();
        let benches = vec![
            bench("a", &[("mathematical_reasoning", 0.5), ("logical_reasoning", 0.5)], 10.0, &[("m", 8.0)]),
            bench("b", &[("mathematical_reasoning", 0.5), ("logical_reasoning", 0.5)], 10.0, &[("m", 6.0)]),
        ];
        let models = vec![model("m", "1.00", "2.00")];
        let profiles = compute_capabilities(&benches, &models, &tax).unwrap();
        // (0.8*0.5 + 0.6*0.5) / (0.5 + 0.5)
        assert!((profiles[0].raw["mathematical_reasoning"] - 0.7).abs() < 1e-12);
    }

    #[test]
    fn zero_weight_benchmark_contributes_nothing() {
        let tax = SkillTaxonomy::new(vec![
            crate::taxonomy::Skill { id: "logical_reasoning".into(), description: "logic".into() },
        ])
        .unwrap();
        let benches = vec![
            bench("weighted", &[("logical_reasoning", 1.0)], 10.0, &[("m", 5.0)]),
            bench("unweighted", &[("logical_reasoning", 0.0)], 10.0, &[("m", 10.0)]),
        ];
        let models = vec![model("m", "1.00", "2.00")];
        let profiles = compute_capabilities(&benches, &models, &tax).unwrap();
        assert!((profiles[0].raw["logical_reasoning"] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn uncovered_skill_is_an_error_listing_the_skill() {
        let tax = default_taxonomy();
        let benches = vec![bench(
            "narrow",
            &[("mathematical_reasoning", 1.0)],
            10.0,
            &[("m", 10.0)],
        )];
        let models = vec![model("m", "1.00", "2.00")];
        match compute_capabilities(&benches, &models, &tax) {
            Err(Error::UncoveredSkills { skills }) => {
                assert!(skills.contains(&"tool_use".to_string()));
                assert!(!skills.contains(&"mathematical_reasoning".to_string()));
            }
            other => panic!("expected uncovered-skill error, got {other:?}"),
        }
    }

    #[test]
    fn missing_score_renormalizes_per_model() {
        let tax = SkillTaxonomy::new(vec![
            crate::taxonomy::Skill { id: "logical_reasoning".into(), description: "logic".into() },
        ])
        .unwrap();
        let benches = vec![
            bench("covered", &[("logical_reasoning", 0.6)], 10.0, &[("m", 5.0), ("other", 10.0)]),
            bench("gap", &[("logical_reasoning", 0.4)], 10.0, &[("other", 10.0)]),
        ];
        let models = vec![model("m", "1.00", "2.00"), model("other", "1.00", "2.00")];
        let profiles = compute_capabilities(&benches, &models, &tax).unwrap();
        let m = profiles.iter().find(|p| p.model == "m").unwrap();
        // Only the covered benchmark counts for "m".
        assert!((m.raw["logical_reasoning"] - 0.5).abs() < 1e-12);
        let other = profiles.iter().find(|p| p.model == "other").unwrap();
        assert_eq!(other.raw["logical_reasoning"], 1.0);
    }

    #[test]
    fn calibrate_scales_entrywise_and_keeps_raw() {
        let profile = CapabilityProfile::raw_only(
            "Gemini-3-Pro".into(),
            BTreeMap::from([("logical_reasoning".to_string(), 0.988)]),
        );
        let c = profile.calibrate(0.2).unwrap();
        assert_eq!(c.calibrated["logical_reasoning"], 0.2 * 0.988);
        assert!((c.calibrated["logical_reasoning"] - 0.1976).abs() < 1e-12);
        assert_eq!(c.raw["logical_reasoning"], 0.988);

        let identity = profile.calibrate(1.0).unwrap();
        assert_eq!(identity.calibrated, identity.raw);
    }

    #[test]
    fn calibrate_rejects_out_of_range_kappa() {
        let profile = CapabilityProfile::raw_only("m".into(), BTreeMap::new());
        assert!(matches!(profile.calibrate(0.0), Err(Error::InvalidKappa { .. })));
        assert!(matches!(profile.calibrate(1.5), Err(Error::InvalidKappa { .. })));
        assert!(matches!(profile.calibrate(-0.2), Err(Error::InvalidKappa { .. })));
    }

    #[test]
    fn model_prices_must_be_positive() {
        let m = model("free", "0.00", "1.00");
        assert!(!m.validate().is_empty());
    }
}
