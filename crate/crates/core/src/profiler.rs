//! The profiling client: renders prompt templates, talks to a
//! chat-completion endpoint (or a deterministic fixture store), and parses
//! the JSON the model is instructed to return. Raw completions are always
//! retained next to the parsed result.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result, ValidationIssue};
use crate::taxonomy::{SkillTaxonomy, SkillVector, PROFILER_DRIFT_TOLERANCE};
use crate::workflow::Workflow;

pub const PROMPT_VERSION: &str = "1";
/// Parse failures are retried this many times with a JSON-only reminder
/// before giving up.
pub const PARSE_RETRIES: u32 = 2;

const REMINDER: &str =
    "Your previous reply could not be parsed. Respond with ONLY the JSON object, no prose, no code fences.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateId {
    BenchmarkProfile,
    SubtaskProfile,
    PipelineMetadata,
    RoutingExplanation,
}

impl TemplateId {
    pub fn as_str(self) -> &'static str {
        match self {
            TemplateId::BenchmarkProfile => "benchmark_profile",
            TemplateId::SubtaskProfile => "subtask_profile",
            TemplateId::PipelineMetadata => "pipeline_metadata",
            TemplateId::RoutingExplanation => "routing_explanation",
        }
    }

    pub fn body(self) -> &'static str {
        match self {
            TemplateId::BenchmarkProfile => include_str!("../prompts/benchmark_profile.txt"),
            TemplateId::SubtaskProfile => include_str!("../prompts/subtask_profile.txt"),
            TemplateId::PipelineMetadata => include_str!("../prompts/pipeline_metadata.txt"),
            TemplateId::RoutingExplanation => include_str!("../prompts/routing_explanation.txt"),
        }
    }
}

impl std::fmt::Display for TemplateId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

pub type Bindings = BTreeMap<String, String>;

/// Substitutes every `{identifier}` placeholder in the template body.
/// Placeholder names are lowercase identifiers; brace pairs holding anything
/// else (the JSON format example, for instance) are literal text. Values are
/// data and are never re-scanned.
pub fn render_prompt(template: TemplateId, bindings: &Bindings) -> Result<String> {
    let body = template.body();
    let mut out = String::with_capacity(body.len());
    let mut rest = body;
    while let Some(start) = rest.find('{') {
        out.push_str(&rest[..start]);
        let after = &rest[start + 1..];
        match after.find(['}', '{', '\n']) {
            Some(end) if after.as_bytes().get(end) == Some(&b'}') => {
                let name = &after[..end];
                if !name.is_empty()
                    && name
                        .chars()
                        .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
                {
                    let value = bindings.get(name).ok_or_else(|| Error::UnboundPlaceholder {
                        template: template.as_str().into(),
                        placeholder: name.to_string(),
                    })?;
                    out.push_str(value);
                } else {
                    out.push('{');
                    out.push_str(name);
                    out.push('}');
                }
                rest = &after[end + 1..];
            }
            _ => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    Ok(out)
}

/// Content-addressed fixture key: template id plus a digest of the exact
/// binding set.
pub fn fixture_key(template: TemplateId, bindings: &Bindings) -> String {
    let mut hasher = Sha256::new();
    hasher.update(template.as_str().as_bytes());
    hasher.update(b"\n");
    hasher.update(serde_json::to_string(bindings).expect("bindings serialize").as_bytes());
    let digest = hasher.finalize();
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    format!("{}-{}", template.as_str(), &hex[..16])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixtureFile {
    pub schema_version: u32,
    pub template_id: String,
    /// Human-readable hint about what this fixture answers.
    pub subject: String,
    /// The verbatim completion text, fed through the same parse path as a
    /// live endpoint response.
    pub completion: String,
}

/// Offline completion source keyed by (template id, input hash).
#[derive(Debug, Clone)]
pub enum FixtureStore {
    Dir(PathBuf),
    Memory(BTreeMap<String, String>),
}

impl FixtureStore {
    pub fn dir(path: impl Into<PathBuf>) -> FixtureStore {
        FixtureStore::Dir(path.into())
    }

    pub fn in_memory<I: IntoIterator<Item = (String, String)>>(entries: I) -> FixtureStore {
        FixtureStore::Memory(entries.into_iter().collect())
    }

    pub fn lookup(&self, template: TemplateId, bindings: &Bindings) -> Result<String> {
        let key = fixture_key(template, bindings);
        let miss = || Error::FixtureMiss { template: template.as_str().into(), key: key.clone() };
        match self {
            FixtureStore::Memory(map) => map.get(&key).cloned().ok_or_else(miss),
            FixtureStore::Dir(dir) => {
                let path = dir.join(format!("{key}.json"));
                let text = std::fs::read_to_string(&path).map_err(|_| miss())?;
                let file: FixtureFile = serde_json::from_str(&text)?;
                Ok(file.completion)
            }
        }
    }

    /// Writes a fixture file for the given inputs; the regeneration path for
    /// the committed offline dataset.
    pub fn write(
        dir: &std::path::Path,
        template: TemplateId,
        bindings: &Bindings,
        subject: &str,
        completion: &str,
    ) -> Result<PathBuf> {
        let key = fixture_key(template, bindings);
        let path = dir.join(format!("{key}.json"));
        let file = FixtureFile {
            schema_version: 1,
            template_id: template.as_str().into(),
            subject: subject.into(),
            completion: completion.into(),
        };
        std::fs::create_dir_all(dir)?;
        std::fs::write(&path, crate::artifacts::to_canonical_json(&file)?)?;
        Ok(path)
    }
}

#[derive(Debug, Clone, Serialize)]
struct ChatMessage {
    role: &'static str,
    content: String,
}

#[derive(Debug, Clone, Serialize)]
struct ChatRequest {
    model: String,
    messages: Vec<ChatMessage>,
    /// Pinned to 0 for as much reproducibility as the provider allows.
    temperature: f64,
}

/// Minimal chat-completion HTTP client: one JSON endpoint taking
/// {model, messages} and returning choices with text content.
#[derive(Debug, Clone)]
pub struct HttpChatClient {
    pub endpoint: String,
    pub model: String,
    pub api_key: Option<String>,
    timeout: std::time::Duration,
}

impl HttpChatClient {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> HttpChatClient {
        HttpChatClient {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key: None,
            timeout: std::time::Duration::from_secs(120),
        }
    }

    pub fn with_api_key(mut self, key: impl Into<String>) -> HttpChatClient {
        self.api_key = Some(key.into());
        self
    }

    /// Reads PROFILER_ENDPOINT / PROFILER_MODEL / PROFILER_API_KEY.
    pub fn from_env() -> Result<HttpChatClient> {
        let endpoint = std::env::var("PROFILER_ENDPOINT").map_err(|_| Error::EndpointNotConfigured)?;
        let model = std::env::var("PROFILER_MODEL").map_err(|_| Error::EndpointNotConfigured)?;
        let mut client = HttpChatClient::new(endpoint, model);
        if let Ok(key) = std::env::var("PROFILER_API_KEY") {
            client = client.with_api_key(key);
        }
        Ok(client)
    }

    fn complete(&self, messages: Vec<ChatMessage>) -> Result<String> {
        let request = ChatRequest { model: self.model.clone(), messages, temperature: 0.0 };
        let mut call = ureq::post(&self.endpoint)
            .timeout(self.timeout)
            .set("content-type", "application/json");
        if let Some(key) = &self.api_key {
            call = call.set("authorization", &format!("Bearer {key}"));
        }
        let response = call
            .send_json(&request)
            .map_err(|e| Error::Endpoint(e.to_string()))?;
        let body: serde_json::Value = response
            .into_json()
            .map_err(|e| Error::Endpoint(format!("invalid JSON response body: {e}")))?;
        extract_completion_text(&body)
    }
}

/// Accepts both common choice shapes: {message:{content}} and {text}.
fn extract_completion_text(body: &serde_json::Value) -> Result<String> {
    let choice = body
        .get("choices")
        .and_then(|c| c.get(0))
        .ok_or_else(|| Error::Endpoint("response has no choices".into()))?;
    choice
        .pointer("/message/content")
        .or_else(|| choice.get("text"))
        .and_then(|t| t.as_str())
        .map(|s| s.to_string())
        .ok_or_else(|| Error::Endpoint("choice has no text content".into()))
}

/// Completion source for profiling and explanation calls.
#[derive(Debug, Clone)]
pub enum ProfilerClient {
    Http(HttpChatClient),
    Fixture(FixtureStore),
}

impl ProfilerClient {
    /// `attempt` > 0 appends the JSON-only reminder on live endpoints;
    /// fixtures are deterministic and ignore it.
    fn complete(
        &self,
        template: TemplateId,
        bindings: &Bindings,
        prompt: &str,
        attempt: u32,
    ) -> Result<String> {
        match self {
            ProfilerClient::Fixture(store) => store.lookup(template, bindings),
            ProfilerClient::Http(client) => {
                let mut messages = vec![ChatMessage { role: "user", content: prompt.to_string() }];
                if attempt > 0 {
                    messages.push(ChatMessage { role: "user", content: REMINDER.to_string() });
                }
                client.complete(messages)
            }
        }
    }

    pub fn is_fixture(&self) -> bool {
        matches!(self, ProfilerClient::Fixture(_))
    }

    /// Single completion for prose outputs (explanations): no JSON parse, no
    /// retry loop.
    pub fn complete_text(
        &self,
        template: TemplateId,
        bindings: &Bindings,
        prompt: &str,
    ) -> Result<String> {
        self.complete(template, bindings, prompt, 0)
    }
}

/// Parsed and validated skill-profiling reply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfilerResponse {
    pub skill_weights: SkillVector,
    pub rationale: BTreeMap<String, String>,
    pub raw_text: String,
}

/// Joint pipeline metadata for every task, straight from the relative
/// analysis prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskMetadata {
    pub complexity: f64,
    pub quality_sensitivity: f64,
    pub estimated_input_tokens: u64,
    pub estimated_output_tokens: u64,
    #[serde(default)]
    pub rationale: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineMetadataResponse {
    pub per_task: BTreeMap<String, TaskMetadata>,
    pub raw_text: String,
}

/// Inputs for profiling one benchmark.
#[derive(Debug, Clone)]
pub struct BenchmarkInput {
    pub name: String,
    pub description: String,
    /// Optional sample items (up to 5) shown to the profiler.
    pub example_items: Vec<String>,
}

impl BenchmarkInput {
    fn bindings(&self, taxonomy: &SkillTaxonomy) -> Bindings {
        let examples = if self.example_items.is_empty() {
            String::new()
        } else {
            let mut block = String::from("Example items:\n");
            for item in self.example_items.iter().take(5) {
                block.push_str("- ");
                block.push_str(item);
                block.push('\n');
            }
            block.trim_end().to_string()
        };
        Bindings::from([
            ("skill_definitions".into(), taxonomy.definitions_block()),
            ("benchmark_name".into(), self.name.clone()),
            ("benchmark_description".into(), self.description.clone()),
            ("example_items_block".into(), examples),
        ])
    }
}

pub struct Profiler {
    pub client: ProfilerClient,
    pub taxonomy: SkillTaxonomy,
    /// Upper bound on concurrent profiling calls.
    pub parallelism: usize,
}

impl Profiler {
    pub fn new(client: ProfilerClient, taxonomy: SkillTaxonomy) -> Profiler {
        Profiler { client, taxonomy, parallelism: 4 }
    }

    fn complete_with_retries(&self, template: TemplateId, bindings: &Bindings) -> Result<String> {
        let prompt = render_prompt(template, bindings)?;
        let mut last_err = None;
        for attempt in 0..=PARSE_RETRIES {
            let raw = self.client.complete(template, bindings, &prompt, attempt)?;
            match extract_json_object(&raw) {
                Ok(_) => return Ok(raw),
                Err(reason) => {
                    last_err = Some((reason, raw));
                }
            }
        }
        let (reason, raw) = last_err.expect("at least one attempt ran");
        Err(Error::ProfilerParse { attempts: PARSE_RETRIES + 1, reason, raw })
    }

    pub fn profile_benchmark(&self, input: &BenchmarkInput) -> Result<ProfilerResponse> {
        let bindings = input.bindings(&self.taxonomy);
        let raw = self.complete_with_retries(TemplateId::BenchmarkProfile, &bindings)?;
        parse_skill_response(&raw, &self.taxonomy, &format!("benchmark {}", input.name))
    }

    /// Profiles many benchmarks with a bounded number of concurrent calls;
    /// results come back in input order.
    pub fn profile_benchmarks(&self, inputs: &[BenchmarkInput]) -> Result<Vec<ProfilerResponse>> {
        let bound = self.parallelism.max(1);
        let mut results: Vec<Option<Result<ProfilerResponse>>> =
            (0..inputs.len()).map(|_| None).collect();
        for chunk_start in (0..inputs.len()).step_by(bound) {
            let chunk_end = (chunk_start + bound).min(inputs.len());
            std::thread::scope(|scope| {
                let mut handles = Vec::new();
                for input in &inputs[chunk_start..chunk_end] {
                    handles.push(scope.spawn(move || self.profile_benchmark(input)));
                }
                for (offset, handle) in handles.into_iter().enumerate() {
                    results[chunk_start + offset] =
                        Some(handle.join().expect("profiling thread panicked"));
                }
            });
        }
        results.into_iter().map(|r| r.expect("all slots filled")).collect()
    }

    /// Fills in missing skill requirements per task, then (if any metadata
    /// field is missing anywhere) runs the joint relative-metadata prompt
    /// over ALL tasks. User-supplied fields are never overwritten.
    pub fn profile_subtasks(&self, workflow: &Workflow) -> Result<ProfiledWorkflow> {
        let mut filled = workflow.clone();
        let mut responses = BTreeMap::new();

        let need_requirements: Vec<usize> = workflow
            .subtasks
            .iter()
            .enumerate()
            .filter(|(_, t)| t.requirements.is_none())
            .map(|(i, _)| i)
            .collect();
        for &idx in &need_requirements {
            let task = &workflow.subtasks[idx];
            let bindings = Bindings::from([
                ("skill_definitions".into(), self.taxonomy.definitions_block()),
                ("task_name".into(), task.name.clone()),
                ("task_description".into(), task.description.clone()),
            ]);
            let raw = self.complete_with_retries(TemplateId::SubtaskProfile, &bindings)?;
            let parsed =
                parse_skill_response(&raw, &self.taxonomy, &format!("subtask {}", task.name))?;
            filled.subtasks[idx].requirements = Some(parsed.skill_weights.clone());
            responses.insert(task.name.clone(), parsed);
        }

        let needs_metadata = workflow.subtasks.iter().any(|t| {
            t.complexity.is_none()
                || t.quality_sensitivity.is_none()
                || t.est_input_tokens.is_none()
                || t.est_output_tokens.is_none()
        });
        let metadata = if needs_metadata {
            let listing = workflow
                .subtasks
                .iter()
                .map(|t| format!("- {}: {}", t.name, t.description))
                .collect::<Vec<_>>()
                .join("\n");
            let bindings = Bindings::from([("subtask_list".to_string(), listing)]);
            let raw = self.complete_with_retries(TemplateId::PipelineMetadata, &bindings)?;
            let parsed = parse_metadata_response(&raw, workflow)?;
            for task in &mut filled.subtasks {
                let meta = &parsed.per_task[&task.name];
                if task.complexity.is_none() {
                    task.complexity = Some(meta.complexity);
                }
                if task.quality_sensitivity.is_none() {
                    task.quality_sensitivity = Some(meta.quality_sensitivity);
                }
                if task.est_input_tokens.is_none() {
                    task.est_input_tokens = Some(meta.estimated_input_tokens);
                }
                if task.est_output_tokens.is_none() {
                    task.est_output_tokens = Some(meta.estimated_output_tokens);
                }
            }
            Some(parsed)
        } else {
            None
        };

        Ok(ProfiledWorkflow { workflow: filled, responses, metadata })
    }
}

#[derive(Debug, Clone)]
pub struct ProfiledWorkflow {
    pub workflow: Workflow,
    /// Per-task skill profiling replies, for tasks that needed one.
    pub responses: BTreeMap<String, ProfilerResponse>,
    pub metadata: Option<PipelineMetadataResponse>,
}

/// Pulls the first balanced JSON object out of a completion. Models are told
/// to answer with only JSON, but fenced or prefixed replies still parse.
fn extract_json_object(raw: &str) -> std::result::Result<serde_json::Value, String> {
    let start = raw.find('{').ok_or_else(|| "no JSON object in completion".to_string())?;
    let bytes = raw.as_bytes();
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate().skip(start) {
        if in_string {
            if escaped {
                escaped = false;
            } else if b == b'\\' {
                escaped = true;
            } else if b == b'"' {
                in_string = false;
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    let candidate = &raw[start..=i];
                    return serde_json::from_str(candidate).map_err(|e| e.to_string());
                }
            }
            _ => {}
        }
    }
    Err("unbalanced JSON object in completion".into())
}

fn parse_skill_response(
    raw: &str,
    taxonomy: &SkillTaxonomy,
    subject: &str,
) -> Result<ProfilerResponse> {
    #[derive(Deserialize)]
    struct Wire {
        skill_weights: BTreeMap<String, f64>,
        #[serde(default)]
        rationale: BTreeMap<String, String>,
    }
    let value = extract_json_object(raw).map_err(|reason| Error::ProfilerParse {
        attempts: 1,
        reason,
        raw: raw.to_string(),
    })?;
    let wire: Wire = serde_json::from_value(value).map_err(|e| Error::ProfilerParse {
        attempts: 1,
        reason: e.to_string(),
        raw: raw.to_string(),
    })?;
    let vector = SkillVector::new(wire.skill_weights);
    let issues = vector.check(Some(taxonomy), PROFILER_DRIFT_TOLERANCE, subject);
    if !issues.is_empty() {
        return Err(Error::validation(issues));
    }
    let skill_weights = vector.normalize()?;
    // Rationale entries for zero-weight skills are dropped; the raw text
    // keeps them for audit.
    let support: std::collections::BTreeSet<&str> =
        skill_weights.support().map(|(s, _)| s).collect();
    let rationale = wire
        .rationale
        .into_iter()
        .filter(|(k, _)| support.contains(k.as_str()))
        .collect();
    Ok(ProfilerResponse { skill_weights, rationale, raw_text: raw.to_string() })
}

fn parse_metadata_response(raw: &str, workflow: &Workflow) -> Result<PipelineMetadataResponse> {
    let value = extract_json_object(raw).map_err(|reason| Error::ProfilerParse {
        attempts: 1,
        reason,
        raw: raw.to_string(),
    })?;
    let per_task: BTreeMap<String, TaskMetadata> =
        serde_json::from_value(value).map_err(|e| Error::ProfilerParse {
            attempts: 1,
            reason: e.to_string(),
            raw: raw.to_string(),
        })?;
    let missing: Vec<String> = workflow
        .subtasks
        .iter()
        .filter(|t| !per_task.contains_key(&t.name))
        .map(|t| t.name.clone())
        .collect();
    if !missing.is_empty() {
        return Err(Error::IncompleteTrace(format!(
            "pipeline metadata reply is missing tasks: {}",
            missing.join(", ")
        )));
    }
    let mut issues: Vec<ValidationIssue> = Vec::new();
    for (task, meta) in &per_task {
        if workflow.get(task).is_none() {
            issues.push(ValidationIssue {
                subject: task.clone(),
                message: "metadata for a task not in the workflow".into(),
            });
        }
        for (label, v) in [
            ("complexity", meta.complexity),
            ("quality_sensitivity", meta.quality_sensitivity),
        ] {
            if !(0.0..=1.0).contains(&v) {
                issues.push(ValidationIssue {
                    subject: task.clone(),
                    message: format!("{label} must be in [0, 1], got {v}"),
                });
            }
        }
        for (label, v) in [
            ("estimated_input_tokens", meta.estimated_input_tokens),
            ("estimated_output_tokens", meta.estimated_output_tokens),
        ] {
            if v == 0 {
                issues.push(ValidationIssue {
                    subject: task.clone(),
                    message: format!("{label} must be a positive integer"),
                });
            }
        }
    }
    if !issues.is_empty() {
        return Err(Error::validation(issues));
    }
    Ok(PipelineMetadataResponse { per_task, raw_text: raw.to_string() })
}
