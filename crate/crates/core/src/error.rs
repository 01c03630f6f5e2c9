use thiserror::Error;

/// A single validation finding. Validation runs collect these instead of
/// aborting on the first problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationIssue {
    /// Where the problem was found (file, task, vector owner, ...).
    pub subject: String,
    pub message: String,
}

impl std::fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.subject, self.message)
    }
}

fn join_issues(issues: &[ValidationIssue]) -> String {
    issues
        .iter()
        .map(|i| format!("  - {i}"))
        .collect::<Vec<_>>()
        .join("\n")
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot normalize an all-zero skill vector")]
    ZeroVector,

    #[error("validation failed:\n{}", join_issues(.0))]
    Validation(Vec<ValidationIssue>),

    #[error("invalid benchmark {name}: {reason}")]
    InvalidBenchmark { name: String, reason: String },

    #[error("skills without benchmark coverage: {}", .skills.join(", "))]
    UncoveredSkills { skills: Vec<String> },

    #[error("calibration factor must be in (0, 1], got {kappa}")]
    InvalidKappa { kappa: f64 },

    #[error("unknown task {task:?}")]
    UnknownTask { task: String },

    #[error("quality sensitivity must be in [0, 1], got {value}")]
    QualityOutOfRange { value: f64 },

    #[error("task {task:?} is not fully profiled (missing {missing})")]
    UnprofiledTask { task: String, missing: String },

    #[error("model {model:?} has no capability score for required skill {skill:?}")]
    MissingCapability { model: String, skill: String },

    #[error("no models provided")]
    EmptyModelSet,

    #[error("unknown model {model:?}")]
    UnknownModel { model: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("money error: {0}")]
    Money(String),

    #[error(
        "budget {budget} cannot cover the cheapest feasible plan, which costs {cheapest_plan_cost}"
    )]
    InfeasibleBudget {
        budget: String,
        cheapest_plan_cost: String,
    },

    #[error("template {template}: placeholder {{{placeholder}}} unbound")]
    UnboundPlaceholder {
        template: String,
        placeholder: String,
    },

    #[error("profiler response could not be parsed after {attempts} attempts: {reason}\nraw completion:\n{raw}")]
    ProfilerParse {
        attempts: u32,
        reason: String,
        raw: String,
    },

    /// Transport-level or HTTP-level failure talking to the profiling endpoint.
    /// Retryable from the caller's point of view.
    #[error("profiler endpoint failure: {0}")]
    Endpoint(String),

    #[error("profiler endpoint not configured (set PROFILER_ENDPOINT or use fixture mode)")]
    EndpointNotConfigured,

    #[error("fixture miss: no fixture for template {template} with key {key}")]
    FixtureMiss { template: String, key: String },

    #[error("explanation log integrity: digest mismatch (expected {expected}, got {actual})")]
    LogIntegrity { expected: String, actual: String },

    #[error("incomplete routing trace: {0}")]
    IncompleteTrace(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("penalty fixture is missing an entry for task {task:?}, model {model:?}")]
    PenaltyFixtureMiss { task: String, model: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn validation(issues: Vec<ValidationIssue>) -> Self {
        Error::Validation(issues)
    }

    /// True for failures where retrying against the external endpoint could help.
    pub fn is_retryable(&self) -> bool {
        matches!(self, Error::Endpoint(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
