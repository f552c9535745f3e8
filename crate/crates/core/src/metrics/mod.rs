//! Code and test generation metrics: pass@k, n@k, Pr@n, pass rate and pass num.

mod report;

use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

use crate::model::Difficulty;
use crate::sandbox::PassMatrix;
use crate::scoring::top_n;

pub use report::{
    comparison_report, evaluate_all, metrics_report, ComparisonOptions, ComparisonReport, ComparisonRow, MetricsReport, MetricsRow,
    ReportOptions,
};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("pass@k needs 0 <= c <= n and 1 <= k <= n, got n={n} c={c} k={k}")]
    Domain { n: usize, c: usize, k: usize },
    #[error("problem `{0}` has no {1} scores")]
    MissingScores(String, &'static str),
    #[error("problem `{problem}`: {what} has length {found}, expected {expected}")]
    Length {
        problem: String,
        what: &'static str,
        found: usize,
        expected: usize,
    },
    #[error("problem `{0}` has no candidates to select from")]
    NoCandidates(String),
    #[error("problem `{0}` has no pass matrix")]
    MissingMatrix(String),
    #[error(transparent)]
    Scoring(#[from] crate::scoring::ScoringError),
}

/// Unbiased pass@k estimator `1 - C(n-c, k) / C(n, k)`, evaluated as
/// `1 - prod_{i=n-c+1}^{n} (1 - k / i)`.
pub fn pass_at_k(n: usize, c: usize, k: usize) -> Result<f64, MetricsError> {
    if c > n || k == 0 || k > n {
        return Err(MetricsError::Domain { n, c, k });
    }
    if n - c < k {
        return Ok(1.0);
    }
    let miss: f64 = ((n - c + 1)..=n).map(|i| 1.0 - k as f64 / i as f64).product();
    Ok(1.0 - miss)
}

fn bits<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<bool>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Bit {
        B(bool),
        I(u8),
    }
    Vec::<Bit>::deserialize(d)?
        .into_iter()
        .map(|b| match b {
            Bit::B(b) => Ok(b),
            Bit::I(0) => Ok(false),
            Bit::I(1) => Ok(true),
            Bit::I(v) => Err(serde::de::Error::custom(format!("expected 0/1, got {v}"))),
        })
        .collect()
}

/// Ground-truth judgements for one problem's generated candidates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemEval {
    pub problem_id: String,
    pub difficulty: Difficulty,
    /// Generated code `i` is correct under the reference tests.
    #[serde(deserialize_with = "bits")]
    pub code_correct: Vec<bool>,
    /// Generated test `j` agrees with the ground-truth solution.
    #[serde(deserialize_with = "bits")]
    pub test_correct: Vec<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code_scores: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_scores: Option<Vec<f64>>,
    /// Generated-code by generated-test outcomes, used to score candidates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<PassMatrix>,
}

impl ProblemEval {
    pub fn new(problem_id: impl Into<String>, difficulty: Difficulty, code_correct: Vec<bool>, test_correct: Vec<bool>) -> Self {
        ProblemEval {
            problem_id: problem_id.into(),
            difficulty,
            code_correct,
            test_correct,
            code_scores: None,
            test_scores: None,
            matrix: None,
        }
    }

    pub fn with_scores(mut self, code: Vec<f64>, test: Vec<f64>) -> Self {
        self.code_scores = Some(code);
        self.test_scores = Some(test);
        self
    }

    fn length(&self, what: &'static str, found: usize, expected: usize) -> Result<(), MetricsError> {
        if found != expected {
            return Err(MetricsError::Length {
                problem: self.problem_id.clone(),
                what,
                found,
                expected,
            });
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), MetricsError> {
        if let Some(s) = &self.code_scores {
            self.length("code_scores", s.len(), self.code_correct.len())?;
        }
        if let Some(s) = &self.test_scores {
            self.length("test_scores", s.len(), self.test_correct.len())?;
        }
        if let Some(m) = &self.matrix {
            self.length("matrix rows", m.num_codes(), self.code_correct.len())?;
            self.length("matrix columns", m.num_tests(), self.test_correct.len())?;
        }
        Ok(())
    }
}

fn count(v: impl IntoIterator<Item = bool>) -> usize {
    v.into_iter().filter(|&b| b).count()
}

/// Plain pass@k over every generated code; `k` is clamped to the sample count.
/// A problem without generated code scores 0.
pub fn unranked_pass_at_k(eval: &ProblemEval, k: usize) -> Result<f64, MetricsError> {
    let n = eval.code_correct.len();
    if n == 0 {
        return Ok(0.0);
    }
    pass_at_k(n, count(eval.code_correct.iter().copied()), k.min(n))
}

/// pass@k over the tie-inclusive top-`n` scored codes.
pub fn n_at_k(eval: &ProblemEval, n: usize, k: usize) -> Result<f64, MetricsError> {
    let scores = eval
        .code_scores
        .as_ref()
        .ok_or_else(|| MetricsError::MissingScores(eval.problem_id.clone(), "code"))?;
    eval.length("code_scores", scores.len(), eval.code_correct.len())?;
    let selected = top_n(scores, n);
    if selected.is_empty() {
        return Err(MetricsError::NoCandidates(eval.problem_id.clone()));
    }
    let correct = count(selected.iter().map(|&i| eval.code_correct[i]));
    pass_at_k(selected.len(), correct, k.min(selected.len()))
}

/// Mean correctness of the tie-inclusive top-`n` scored tests.
pub fn pr_at_n(eval: &ProblemEval, n: usize) -> Result<f64, MetricsError> {
    let scores = eval
        .test_scores
        .as_ref()
        .ok_or_else(|| MetricsError::MissingScores(eval.problem_id.clone(), "test"))?;
    eval.length("test_scores", scores.len(), eval.test_correct.len())?;
    let selected = top_n(scores, n);
    if selected.is_empty() {
        return Err(MetricsError::NoCandidates(eval.problem_id.clone()));
    }
    Ok(count(selected.iter().map(|&i| eval.test_correct[i])) as f64 / selected.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassStats {
    pub pass_rate: f64,
    pub pass_num: f64,
    /// No generated tests: the rate is undefined and reported as 0.
    pub empty: bool,
}

/// Pass rate and pass num of a problem's (already deduplicated) generated tests.
pub fn pass_rate_and_num(eval: &ProblemEval) -> PassStats {
    let total = eval.test_correct.len();
    let passed = count(eval.test_correct.iter().copied());
    PassStats {
        pass_rate: if total == 0 { 0.0 } else { passed as f64 / total as f64 },
        pass_num: passed as f64,
        empty: total == 0,
    }
}

/// Per-dataset means, both over every problem and over problems that produced tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassStatsSummary {
    pub problems: usize,
    pub empty_problems: usize,
    pub pass_rate: f64,
    pub pass_num: f64,
    pub pass_rate_nonempty: f64,
    pub pass_num_nonempty: f64,
}

pub fn summarize_pass_stats(stats: &[PassStats]) -> PassStatsSummary {
    let mean = |it: &mut dyn Iterator<Item = f64>| {
        let (sum, n) = it.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    };
    let nonempty = || stats.iter().filter(|s| !s.empty);
    PassStatsSummary {
        problems: stats.len(),
        empty_problems: stats.iter().filter(|s| s.empty).count(),
        pass_rate: mean(&mut stats.iter().map(|s| s.pass_rate)),
        pass_num: mean(&mut stats.iter().map(|s| s.pass_num)),
        pass_rate_nonempty: mean(&mut nonempty().map(|s| s.pass_rate)),
        pass_num_nonempty: mean(&mut nonempty().map(|s| s.pass_num)),
    }
}

/// Pass rate times pass num.
pub fn combined_score(pass_rate: f64, pass_num: f64) -> f64 {
    pass_rate * pass_num
}
