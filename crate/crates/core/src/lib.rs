//! Execution-feedback tooling for program-synthesis datasets: sandboxed
//! judging, test and code augmentation, dual-critic ranking and metrics.

pub mod augmentation;
pub mod config;
pub mod generators;
pub mod metrics;
pub mod model;
pub mod report;
pub mod sandbox;
pub mod scoring;

pub use augmentation::{AugmentationConfig, TrainingExample};
pub use config::RunConfig;
pub use generators::{Generator, ReplayGenerator, StubGenerator};
pub use model::{CodeSolution, Dataset, Difficulty, Problem, TestCase};
pub use sandbox::{PassMatrix, Sandbox, SandboxConfig};
pub use scoring::{ScoreVector, Scorer, ScoringConfig};
