//! Two-stage dataset augmentation: execution-corrected tests, then
//! rejection-sampled code, plus export of training corpora.

mod export;
mod iteration;
mod pipeline;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generators::GenerationError;
use crate::model::{DatasetError, Difficulty, ExternalFormatter, Problem};

pub use export::{export_training_corpus, write_training_jsonl, ExportOutcome, TrainingExample};
pub use iteration::{
    augment_code_iteration, augment_tests_iteration, CodeCounts, CodeIterationReport, CodeProblemReport,
    TestCounts, TestIterationReport, TestProblemReport,
};
pub use pipeline::{replay_dir, run_pipeline, Checkpoints, PipelineOutcome, PipelineReport};

pub const TEST_SEPARATOR: &str = "<test>";
pub const SOLUTION_SEPARATOR: &str = "<solution>";

#[derive(Debug, Error)]
pub enum AugmentationError {
    #[error("invalid augmentation config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Generation(#[from] GenerationError),
}

/// Code samples drawn per problem, by difficulty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CodeSampleBudget {
    pub introductory: usize,
    pub interview: usize,
    pub competition: usize,
}

impl Default for CodeSampleBudget {
    fn default() -> Self {
        CodeSampleBudget {
            introductory: 40,
            interview: 80,
            competition: 160,
        }
    }
}

impl CodeSampleBudget {
    pub fn get(&self, difficulty: Difficulty) -> usize {
        match difficulty {
            Difficulty::Introductory => self.introductory,
            Difficulty::Interview => self.interview,
            Difficulty::Competition => self.competition,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentationConfig {
    pub test_iterations: u32,
    pub code_iterations: u32,
    pub test_samples_per_problem: usize,
    pub tests_per_sample_cap: usize,
    pub code_samples: CodeSampleBudget,
    /// Max characters of input and of output for a test to be train-eligible.
    pub train_len_threshold: usize,
    /// Export tests from every iteration instead of seed + latest only.
    pub replay_tests: bool,
    /// Export code from every iteration instead of ground truth + latest only.
    pub replay_code: bool,
    /// One more test-sampling pass (iteration `test_iterations + 1`) before the code stage.
    pub extra_test_pass: bool,
    /// Skip code augmentation on problems without any test, rather than
    /// accepting every candidate vacuously.
    pub require_tests: bool,
    /// Max tests per exported test-generation example.
    pub export_tests_per_example: usize,
    pub test_separator: String,
    pub solution_separator: String,
    /// Applied to generated code before normalization and dedup.
    pub formatter: Option<ExternalFormatter>,
}

impl Default for AugmentationConfig {
    fn default() -> Self {
        AugmentationConfig {
            test_iterations: 3,
            code_iterations: 3,
            test_samples_per_problem: 10,
            tests_per_sample_cap: 10,
            code_samples: CodeSampleBudget::default(),
            train_len_threshold: 1024,
            replay_tests: false,
            replay_code: true,
            extra_test_pass: false,
            require_tests: true,
            export_tests_per_example: 10,
            test_separator: TEST_SEPARATOR.into(),
            solution_separator: SOLUTION_SEPARATOR.into(),
            formatter: None,
        }
    }
}

impl AugmentationConfig {
    pub fn validate(&self) -> Result<(), AugmentationError> {
        let counts = [
            ("test_iterations", self.test_iterations as usize),
            ("code_iterations", self.code_iterations as usize),
            ("test_samples_per_problem", self.test_samples_per_problem),
            ("tests_per_sample_cap", self.tests_per_sample_cap),
            ("code_samples.introductory", self.code_samples.introductory),
            ("code_samples.interview", self.code_samples.interview),
            ("code_samples.competition", self.code_samples.competition),
            ("train_len_threshold", self.train_len_threshold),
            ("export_tests_per_example", self.export_tests_per_example),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(AugmentationError::InvalidConfig(format!("{name} must be at least 1")));
            }
        }
        if self.test_separator.is_empty() || self.solution_separator.is_empty() {
            return Err(AugmentationError::InvalidConfig("separators must be non-empty".into()));
        }
        if let Some(f) = &self.formatter {
            if f.command.is_empty() {
                return Err(AugmentationError::InvalidConfig("formatter command is empty".into()));
            }
        }
        Ok(())
    }
}

/// Prompt for test generation; also the source side of exported test examples.
pub fn test_prompt(problem: &Problem, cfg: &AugmentationConfig) -> String {
    format!("{}{}", problem.description, cfg.test_separator)
}

/// Prompt for code generation; also the source side of exported code examples.
pub fn code_prompt(problem: &Problem, cfg: &AugmentationConfig) -> String {
    format!("{}{}", problem.description, cfg.solution_separator)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedTests {
    pub inputs: Vec<String>,
    /// Non-blank segments that were not a JSON object with a string `input`.
    pub skipped: usize,
    /// Well-formed segments dropped by the per-completion cap.
    pub over_cap: usize,
}

/// Splits a test-generation completion on `separator` and keeps the
/// `input` of each JSON segment. Outputs in the completion are ignored.
pub fn parse_test_completion(completion: &str, separator: &str, cap: usize) -> ParsedTests {
    let mut parsed = ParsedTests::default();
    for segment in completion.split(separator) {
        let segment = segment.trim();
        if segment.is_empty() {
            continue;
        }
        let input = serde_json::from_str::<serde_json::Value>(segment)
            .ok()
            .and_then(|v| v.get("input").and_then(|i| i.as_str()).map(str::to_owned));
        match input {
            Some(i) if parsed.inputs.len() < cap => parsed.inputs.push(i),
            Some(_) => parsed.over_cap += 1,
            None => parsed.skipped += 1,
        }
    }
    parsed
}

/// The program part of a code-generation completion: everything before a
/// repeated solution separator, if the model emitted one.
pub fn extract_code<'a>(completion: &'a str, separator: &str) -> &'a str {
    completion.split(separator).next().unwrap_or("")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(input: &str) -> String {
        serde_json::json!({"input": input, "output": "?"}).to_string()
    }

    #[test]
    fn parses_segments() {
        let text = format!("{}<test>{}", seg("1 2\n"), seg("3 4\n"));
        let p = parse_test_completion(&text, "<test>", 10);
        assert_eq!(p.inputs, ["1 2\n", "3 4\n"]);
        assert_eq!(p.skipped, 0);
    }

    #[test]
    fn skips_truncated_json() {
        let text = format!("{}\n<test>\n{{\"input\": \"5", seg("1"));
        let p = parse_test_completion(&text, "<test>", 10);
        assert_eq!(p.inputs, ["1"]);
        assert_eq!(p.skipped, 1);
    }

    #[test]
    fn skips_missing_or_non_string_input() {
        let text = r#"{"output": "1"}<test>{"input": 3}<test>[1,2]<test>  <test>{"input": "ok"}"#;
        let p = parse_test_completion(text, "<test>", 10);
        assert_eq!(p.inputs, ["ok"]);
        assert_eq!(p.skipped, 3);
    }

    #[test]
    fn caps_per_completion() {
        let text: Vec<String> = (0..12).map(|i| seg(&i.to_string())).collect();
        let p = parse_test_completion(&text.join("<test>"), "<test>", 10);
        let want: Vec<String> = (0..10).map(|i| i.to_string()).collect();
        assert_eq!(p.inputs, want);
        assert_eq!(p.over_cap, 2);
    }

    #[test]
    fn leading_separator_and_custom_token() {
        let text = format!("##{}##", seg("x"));
        assert_eq!(parse_test_completion(&text, "##", 10).inputs, ["x"]);
    }

    #[test]
    fn code_extraction() {
        assert_eq!(extract_code("print(1)\n<solution>print(2)", "<solution>"), "print(1)\n");
        assert_eq!(extract_code("print(1)", "<solution>"), "print(1)");
    }

    #[test]
    fn config_validation() {
        assert!(AugmentationConfig::default().validate().is_ok());
        let zero_iters = AugmentationConfig {
            test_iterations: 0,
            ..AugmentationConfig::default()
        };
        assert!(matches!(zero_iters.validate(), Err(AugmentationError::InvalidConfig(_))));
        let zero_thresh = AugmentationConfig {
            train_len_threshold: 0,
            ..AugmentationConfig::default()
        };
        assert!(zero_thresh.validate().is_err());
        let mut budget = AugmentationConfig::default();
        budget.code_samples.competition = 0;
        assert!(budget.validate().is_err());
    }

    #[test]
    fn budget_by_difficulty() {
        let b = CodeSampleBudget::default();
        assert_eq!(
            Difficulty::ALL.map(|d| b.get(d)),
            [40, 80, 160]
        );
    }

    #[test]
    fn config_toml_partial() {
        let cfg: AugmentationConfig = toml::from_str("test_iterations = 1\n[code_samples]\ninterview = 5\n").unwrap();
        assert_eq!(cfg.test_iterations, 1);
        assert_eq!(cfg.code_iterations, 3);
        assert_eq!(cfg.code_samples.interview, 5);
        assert_eq!(cfg.code_samples.introductory, 40);
        assert_eq!(cfg.test_separator, "<test>");
    }
}
