//! Running candidate programs on test inputs under resource limits.
//!
//! Programs are plain files executed through a [`Runner`] command template.
//! Each run gets a fresh scratch directory as its working directory and its
//! own process group, which is killed as a whole when the run ends. This is
//! resource limiting, not isolation: programs run with the caller's
//! privileges.

mod compare;
mod matrix;
mod runner;

use std::sync::Arc;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::TestCase;

pub use compare::{canonical_output, compare_outputs, CompareMode};
pub use matrix::{MatrixError, PassMatrix};
pub use runner::{run_program, Runner, FILE_PLACEHOLDER};

#[derive(Debug, Error)]
pub enum SandboxError {
    #[error("invalid runner: {0}")]
    InvalidRunner(String),
    #[error("invalid limits: {0}")]
    InvalidLimits(String),
    #[error("worker pool: {0}")]
    Pool(String),
    #[error("cannot build a pass matrix without {0}")]
    Empty(&'static str),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExecLimits {
    #[serde(with = "secs")]
    pub wall_time: Duration,
    #[serde(with = "secs")]
    pub cpu_time: Duration,
    /// Address-space limit in bytes.
    pub memory: u64,
    /// Bytes of stdout kept before the run is cut off as truncated.
    pub max_output: usize,
}

impl Default for ExecLimits {
    fn default() -> Self {
        ExecLimits {
            wall_time: Duration::from_secs(10),
            cpu_time: Duration::from_secs(10),
            memory: 512 * 1024 * 1024,
            max_output: 1024 * 1024,
        }
    }
}

impl ExecLimits {
    pub fn validate(&self) -> Result<(), SandboxError> {
        if self.wall_time.is_zero() || self.cpu_time.is_zero() || self.memory == 0 || self.max_output == 0 {
            return Err(SandboxError::InvalidLimits(format!("all limits must be positive: {self:?}")));
        }
        Ok(())
    }
}

mod secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let v = f64::deserialize(d)?;
        Duration::try_from_secs_f64(v).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecStatus {
    Ok,
    Timeout,
    RuntimeError,
    OutputTruncated,
    SpawnError,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecResult {
    pub status: ExecStatus,
    pub stdout: String,
    pub stderr: String,
    pub exit_code: Option<i32>,
    pub duration: Duration,
}

impl ExecResult {
    pub fn is_ok(&self) -> bool {
        self.status == ExecStatus::Ok
    }
}

/// A program to put through the judge, identified for matrix rows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeCandidate {
    pub id: String,
    pub source: String,
}

/// A test with an expected output, identified for matrix columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCandidate {
    pub id: String,
    pub input: String,
    pub output: String,
}

impl From<(String, &TestCase)> for TestCandidate {
    fn from((id, t): (String, &TestCase)) -> Self {
        TestCandidate {
            id,
            input: t.input.clone(),
            output: t.output.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SandboxConfig {
    #[serde(default)]
    pub runner: Runner,
    #[serde(default)]
    pub limits: ExecLimits,
    #[serde(default)]
    pub compare: CompareMode,
    #[serde(default = "default_workers")]
    pub workers: usize,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

impl Default for SandboxConfig {
    fn default() -> Self {
        SandboxConfig {
            runner: Runner::default(),
            limits: ExecLimits::default(),
            compare: CompareMode::default(),
            workers: default_workers(),
        }
    }
}

/// Pass matrix plus the execution status behind every cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MatrixRun {
    pub matrix: PassMatrix,
    pub statuses: Vec<Vec<ExecStatus>>,
}

/// A configured judge with a bounded worker pool. Results never depend on
/// the number of workers: every job writes to its own output slot.
#[derive(Clone)]
pub struct Sandbox {
    config: SandboxConfig,
    pool: Arc<rayon::ThreadPool>,
}

impl std::fmt::Debug for Sandbox {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Sandbox").field("config", &self.config).finish()
    }
}

impl Sandbox {
    pub fn new(config: SandboxConfig) -> Result<Self, SandboxError> {
        config.runner.validate()?;
        config.limits.validate()?;
        if config.workers == 0 {
            return Err(SandboxError::Pool("worker count must be at least 1".into()));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .thread_name(|i| format!("sandbox-{i}"))
            .build()
            .map_err(|e| SandboxError::Pool(e.to_string()))?;
        Ok(Sandbox {
            config,
            pool: Arc::new(pool),
        })
    }

    pub fn config(&self) -> &SandboxConfig {
        &self.config
    }

    pub fn run(&self, source: &str, stdin: &str) -> ExecResult {
        run_program(source, stdin, &self.config.limits, &self.config.runner)
    }

    /// Runs `(source, stdin)` jobs on the pool; output order follows input order.
    pub fn run_batch(&self, jobs: &[(&str, &str)]) -> Vec<ExecResult> {
        self.pool
            .install(|| jobs.par_iter().map(|(src, input)| self.run(src, input)).collect())
    }

    /// Entry `j` is true iff the run is `ok` and its stdout matches `tests[j].output`.
    pub fn evaluate_solution(&self, source: &str, tests: &[TestCase]) -> Vec<bool> {
        let jobs: Vec<(&str, &str)> = tests.iter().map(|t| (source, t.input.as_str())).collect();
        self.run_batch(&jobs)
            .iter()
            .zip(tests)
            .map(|(r, t)| self.judge(r, &t.output))
            .collect()
    }

    pub fn judge(&self, result: &ExecResult, expected: &str) -> bool {
        result.is_ok() && compare_outputs(&result.stdout, expected, self.config.compare)
    }

    pub fn build_pass_matrix(
        &self,
        codes: &[CodeCandidate],
        tests: &[TestCandidate],
    ) -> Result<MatrixRun, SandboxError> {
        if codes.is_empty() {
            return Err(SandboxError::Empty("code candidates"));
        }
        if tests.is_empty() {
            return Err(SandboxError::Empty("tests"));
        }
        let jobs: Vec<(&str, &str)> = codes
            .iter()
            .flat_map(|c| tests.iter().map(move |t| (c.source.as_str(), t.input.as_str())))
            .collect();
        let results = self.run_batch(&jobs);
        let t = tests.len();
        let mut entries = Vec::with_capacity(codes.len());
        let mut statuses = Vec::with_capacity(codes.len());
        for row in results.chunks(t) {
            entries.push(row.iter().zip(tests).map(|(r, test)| self.judge(r, &test.output)).collect());
            statuses.push(row.iter().map(|r| r.status).collect());
        }
        let matrix = PassMatrix::new(
            codes.iter().map(|c| c.id.clone()).collect(),
            tests.iter().map(|t| t.id.clone()).collect(),
            entries,
        )?;
        Ok(MatrixRun { matrix, statuses })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sandbox(workers: usize) -> Sandbox {
        Sandbox::new(SandboxConfig {
            workers,
            ..SandboxConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn rejects_bad_config() {
        let bad_runner = SandboxConfig {
            runner: Runner {
                command: vec!["python3".into()],
                ..Runner::default()
            },
            ..SandboxConfig::default()
        };
        assert!(matches!(Sandbox::new(bad_runner), Err(SandboxError::InvalidRunner(_))));
        let bad_limits = SandboxConfig {
            limits: ExecLimits {
                memory: 0,
                ..ExecLimits::default()
            },
            ..SandboxConfig::default()
        };
        assert!(matches!(Sandbox::new(bad_limits), Err(SandboxError::InvalidLimits(_))));
        let no_workers = SandboxConfig {
            workers: 0,
            ..SandboxConfig::default()
        };
        assert!(Sandbox::new(no_workers).is_err());
    }

    #[test]
    fn echo_program() {
        let r = sandbox(1).run("print(input())", "5\n");
        assert_eq!(r.status, ExecStatus::Ok);
        assert_eq!(r.stdout, "5\n");
    }

    #[test]
    fn empty_stdout_is_ok_not_error() {
        let r = sandbox(1).run("x = input()", "5\n");
        assert_eq!(r.status, ExecStatus::Ok);
        assert!(r.stdout.is_empty());
        let r = sandbox(1).run("raise SystemExit(3)", "");
        assert_eq!(r.status, ExecStatus::RuntimeError);
        assert_eq!(r.exit_code, Some(3));
    }

    #[test]
    fn missing_interpreter_is_spawn_error() {
        let s = Sandbox::new(SandboxConfig {
            runner: Runner::from_template("/definitely/not/here {file}", "py").unwrap(),
            ..SandboxConfig::default()
        })
        .unwrap();
        assert_eq!(s.run("print(1)", "").status, ExecStatus::SpawnError);
    }

    #[test]
    fn evaluate_even_only() {
        let src = "n = int(input())\nprint(n * 2 if n % 2 == 0 else n)\n";
        let tests: Vec<TestCase> = [2, 3, 4, 5]
            .iter()
            .map(|n| TestCase::seed(format!("{n}\n"), format!("{}\n", n * 2)))
            .collect();
        assert_eq!(sandbox(2).evaluate_solution(src, &tests), vec![true, false, true, false]);
    }

    #[test]
    fn crashing_program_fails_everything() {
        let tests = vec![TestCase::seed("1\n", "1\n"), TestCase::seed("2\n", "2\n")];
        assert_eq!(sandbox(2).evaluate_solution("raise ValueError()", &tests), vec![false, false]);
    }

    #[test]
    fn small_matrices() {
        let codes = vec![
            CodeCandidate { id: "good".into(), source: "print(input())".into() },
            CodeCandidate { id: "bad".into(), source: "1/0".into() },
        ];
        let tests = vec![
            TestCandidate { id: "t0".into(), input: "a\n".into(), output: "a\n".into() },
            TestCandidate { id: "t1".into(), input: "b\n".into(), output: "b".into() },
        ];
        let s = sandbox(2);
        let one = s.build_pass_matrix(&codes[..1], &tests[..1]).unwrap();
        assert_eq!(one.matrix.to_rows(), vec![vec![1]]);
        let run = s.build_pass_matrix(&codes, &tests).unwrap();
        assert_eq!(run.matrix.to_rows(), vec![vec![1, 1], vec![0, 0]]);
        assert_eq!(run.statuses[1], vec![ExecStatus::RuntimeError; 2]);
        assert!(matches!(s.build_pass_matrix(&[], &tests), Err(SandboxError::Empty(_))));
    }
}
