//! Candidate generation behind a model-agnostic interface.
//!
//! The pipeline only ever sees [`Generator`]. Three implementations ship:
//! an HTTP completions client ([`RemoteGenerator`]), a file replayer
//! ([`ReplayGenerator`]) and a programmable stub ([`StubGenerator`]).

mod remote;
mod replay;
mod stub;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use remote::{RemoteConfig, RemoteGenerator};
pub use replay::ReplayGenerator;
pub use stub::StubGenerator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    TestGen,
    CodeGen,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::TestGen => "test_gen",
            Task::CodeGen => "code_gen",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Inference,
    Augmentation,
}

/// Nucleus sampling defaults: top-p 0.95, temperature 0.8 for tests and 0.6
/// for code, raised by 0.2 when sampling training problems for augmentation.
pub fn default_sampling_params(task: Task, phase: Phase) -> (f64, f64) {
    let base = match task {
        Task::TestGen => 0.8,
        Task::CodeGen => 0.6,
    };
    let temperature = match phase {
        Phase::Inference => base,
        Phase::Augmentation => base + 0.2,
    };
    (temperature, 0.95)
}

pub const DEFAULT_MAX_NEW_TOKENS: usize = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub problem_id: String,
    pub prompt: String,
    pub num_samples: usize,
    pub temperature: f64,
    pub top_p: f64,
    pub max_new_tokens: usize,
}

impl GenerationRequest {
    pub fn new(problem_id: impl Into<String>, prompt: impl Into<String>, num_samples: usize, task: Task, phase: Phase) -> Self {
        let (temperature, top_p) = default_sampling_params(task, phase);
        GenerationRequest {
            problem_id: problem_id.into(),
            prompt: prompt.into(),
            num_samples,
            temperature,
            top_p,
            max_new_tokens: DEFAULT_MAX_NEW_TOKENS,
        }
    }

    pub fn validate(&self) -> Result<(), GenerationError> {
        let bad = |m: String| Err(GenerationError::InvalidRequest { problem_id: self.problem_id.clone(), message: m });
        if self.num_samples == 0 {
            return bad("num_samples must be at least 1".into());
        }
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return bad(format!("temperature must be >= 0, got {}", self.temperature));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return bad(format!("top_p must be in (0, 1], got {}", self.top_p));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Completion {
    pub text: String,
    pub sample_index: usize,
    pub generator_tag: String,
}

#[derive(Debug, Error)]
pub enum GenerationError {
    #[error("problem `{problem_id}`: invalid request: {message}")]
    InvalidRequest { problem_id: String, message: String },
    #[error("problem `{problem_id}`: transport failure after {attempts} attempt(s): {message}")]
    Transport { problem_id: String, attempts: u32, message: String },
    #[error("problem `{problem_id}`: endpoint returned HTTP {status} after {attempts} attempt(s): {body}")]
    Status { problem_id: String, status: u16, attempts: u32, body: String },
    #[error("problem `{problem_id}`: unexpected response: {message}")]
    Schema { problem_id: String, message: String },
    #[error("problem `{problem_id}`: no replay data at `{path}`")]
    MissingReplay { problem_id: String, path: std::path::PathBuf },
    #[error("problem `{problem_id}`: reading `{path}`: {source}")]
    Io {
        problem_id: String,
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("missing auth token: environment variable `{0}` is not set")]
    MissingToken(String),
}

impl GenerationError {
    pub fn problem_id(&self) -> Option<&str> {
        match self {
            GenerationError::InvalidRequest { problem_id, .. }
            | GenerationError::Transport { problem_id, .. }
            | GenerationError::Status { problem_id, .. }
            | GenerationError::Schema { problem_id, .. }
            | GenerationError::MissingReplay { problem_id, .. }
            | GenerationError::Io { problem_id, .. } => Some(problem_id),
            GenerationError::MissingToken(_) => None,
        }
    }
}

/// A source of sampled completions. Implementations must tolerate
/// concurrent calls.
pub trait Generator: Send + Sync {
    fn tag(&self) -> &str;

    /// Returns at most `request.num_samples` completions, in sample order.
    fn generate(&self, request: &GenerationRequest) -> Result<Vec<Completion>, GenerationError>;
}

impl<G: Generator + ?Sized> Generator for Box<G> {
    fn tag(&self) -> &str {
        (**self).tag()
    }

    fn generate(&self, request: &GenerationRequest) -> Result<Vec<Completion>, GenerationError> {
        (**self).generate(request)
    }
}

impl<G: Generator + ?Sized> Generator for std::sync::Arc<G> {
    fn tag(&self) -> &str {
        (**self).tag()
    }

    fn generate(&self, request: &GenerationRequest) -> Result<Vec<Completion>, GenerationError> {
        (**self).generate(request)
    }
}
