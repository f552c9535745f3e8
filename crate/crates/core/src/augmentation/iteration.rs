use std::collections::HashSet;
use std::ops::AddAssign;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{code_prompt, extract_code, parse_test_completion, test_prompt, AugmentationConfig};
use crate::generators::{Completion, GenerationError, GenerationRequest, Generator, Phase, Task};
use crate::model::{prepare_source, CodeSolution, Dataset, Problem, SolutionOrigin, TestCase, TestOrigin};
use crate::sandbox::{ExecStatus, Sandbox};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCounts {
    pub completions: usize,
    pub parsed: usize,
    pub parse_skips: usize,
    pub over_cap: usize,
    pub duplicates: usize,
    pub exec_failures: usize,
    pub empty_outputs: usize,
    pub appended: usize,
    pub train_eligible: usize,
}

impl AddAssign for TestCounts {
    fn add_assign(&mut self, o: Self) {
        self.completions += o.completions;
        self.parsed += o.parsed;
        self.parse_skips += o.parse_skips;
        self.over_cap += o.over_cap;
        self.duplicates += o.duplicates;
        self.exec_failures += o.exec_failures;
        self.empty_outputs += o.empty_outputs;
        self.appended += o.appended;
        self.train_eligible += o.train_eligible;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestProblemReport {
    pub problem_id: String,
    pub tests_before: usize,
    pub tests_after: usize,
    #[serde(flatten)]
    pub counts: TestCounts,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestIterationReport {
    pub iteration: u32,
    pub generator: String,
    pub totals: TestCounts,
    pub problems: Vec<TestProblemReport>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeCounts {
    pub completions: usize,
    pub empty: usize,
    pub duplicates: usize,
    pub evaluated: usize,
    pub accepted: usize,
    pub rejected: usize,
}

impl AddAssign for CodeCounts {
    fn add_assign(&mut self, o: Self) {
        self.completions += o.completions;
        self.empty += o.empty;
        self.duplicates += o.duplicates;
        self.evaluated += o.evaluated;
        self.accepted += o.accepted;
        self.rejected += o.rejected;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeProblemReport {
    pub problem_id: String,
    pub test_pool: usize,
    pub solutions_before: usize,
    pub solutions_after: usize,
    #[serde(flatten)]
    pub counts: CodeCounts,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeIterationReport {
    pub iteration: u32,
    pub generator: String,
    pub totals: CodeCounts,
    pub problems: Vec<CodeProblemReport>,
}

/// Samples for every problem in parallel; order follows `requests`.
fn sample_all<G: Generator + ?Sized>(
    generator: &G,
    requests: Vec<Option<GenerationRequest>>,
) -> Vec<Option<Result<Vec<Completion>, GenerationError>>> {
    requests
        .into_par_iter()
        .map(|r| r.map(|r| generator.generate(&r)))
        .collect()
}

fn skip_reason(e: &GenerationError) -> String {
    format!("generation failed: {e}")
}

/// One round of test augmentation (iteration index `iteration`).
///
/// New inputs are run on each problem's first ground-truth solution and kept
/// only when the run succeeds with non-blank stdout; that stdout becomes the
/// expected output.
pub fn augment_tests_iteration<G: Generator + ?Sized>(
    dataset: &Dataset,
    generator: &G,
    sandbox: &Sandbox,
    cfg: &AugmentationConfig,
    iteration: u32,
) -> (Dataset, TestIterationReport) {
    let requests = dataset
        .problems
        .iter()
        .map(|p| {
            p.ground_truth().map(|_| {
                GenerationRequest::new(
                    p.id.clone(),
                    test_prompt(p, cfg),
                    cfg.test_samples_per_problem,
                    Task::TestGen,
                    Phase::Augmentation,
                )
            })
        })
        .collect();
    let samples = sample_all(generator, requests);

    // candidate inputs per problem, after parsing and dedup
    let mut reports = Vec::with_capacity(dataset.len());
    let mut candidates: Vec<Vec<String>> = Vec::with_capacity(dataset.len());
    for (problem, sampled) in dataset.problems.iter().zip(samples) {
        let mut report = TestProblemReport {
            problem_id: problem.id.clone(),
            tests_before: problem.tests.len(),
            tests_after: problem.tests.len(),
            counts: TestCounts::default(),
            skipped: None,
        };
        let mut inputs = Vec::new();
        match sampled {
            None => report.skipped = Some("no ground-truth solution".into()),
            Some(Err(e)) => {
                log::warn!("{e}");
                report.skipped = Some(skip_reason(&e));
            }
            Some(Ok(completions)) => {
                let mut seen: HashSet<&str> = problem.tests.iter().map(|t| t.input.as_str()).collect();
                let mut fresh = Vec::new();
                report.counts.completions = completions.len();
                for c in &completions {
                    let parsed = parse_test_completion(&c.text, &cfg.test_separator, cfg.tests_per_sample_cap);
                    report.counts.parsed += parsed.inputs.len();
                    report.counts.parse_skips += parsed.skipped;
                    report.counts.over_cap += parsed.over_cap;
                    fresh.extend(parsed.inputs);
                }
                for input in &fresh {
                    if seen.insert(input.as_str()) {
                        inputs.push(input.clone());
                    } else {
                        report.counts.duplicates += 1;
                    }
                }
            }
        }
        reports.push(report);
        candidates.push(inputs);
    }

    let jobs: Vec<(&str, &str)> = dataset
        .problems
        .iter()
        .zip(&candidates)
        .flat_map(|(p, inputs)| {
            let gt = p.ground_truth().map_or("", |s| s.source());
            inputs.iter().map(move |i| (gt, i.as_str()))
        })
        .collect();
    let mut results = sandbox.run_batch(&jobs).into_iter();

    let mut problems = Vec::with_capacity(dataset.len());
    for ((problem, inputs), report) in dataset.problems.iter().zip(candidates).zip(&mut reports) {
        let mut problem = problem.clone();
        for input in inputs {
            let r = results.next().expect("one result per job");
            if r.status != ExecStatus::Ok {
                report.counts.exec_failures += 1;
                continue;
            }
            if r.stdout.trim().is_empty() {
                report.counts.empty_outputs += 1;
                continue;
            }
            let mut test = TestCase {
                input,
                output: r.stdout,
                origin: TestOrigin::Augmented(iteration),
                train_eligible: false,
            };
            test.train_eligible = test.fits(cfg.train_len_threshold);
            report.counts.appended += 1;
            report.counts.train_eligible += test.train_eligible as usize;
            problem.tests.push(test);
        }
        report.tests_after = problem.tests.len();
        problems.push(problem);
    }

    let mut totals = TestCounts::default();
    for r in &reports {
        totals += r.counts;
    }
    log::info!(
        "test iteration {iteration}: {} appended from {} parsed inputs",
        totals.appended,
        totals.parsed
    );
    let report = TestIterationReport {
        iteration,
        generator: generator.tag().to_string(),
        totals,
        problems: reports,
    };
    (Dataset::new(problems), report)
}

/// One round of rejection-sampled code augmentation (iteration index `iteration`).
///
/// Candidates are formatted, normalized and deduplicated against every
/// solution already present, then kept only if they pass every test.
pub fn augment_code_iteration<G: Generator + ?Sized>(
    dataset: &Dataset,
    generator: &G,
    sandbox: &Sandbox,
    cfg: &AugmentationConfig,
    iteration: u32,
) -> (Dataset, CodeIterationReport) {
    let eligible = |p: &Problem| !(cfg.require_tests && p.tests.is_empty());
    let requests = dataset
        .problems
        .iter()
        .map(|p| {
            eligible(p).then(|| {
                GenerationRequest::new(
                    p.id.clone(),
                    code_prompt(p, cfg),
                    cfg.code_samples.get(p.difficulty),
                    Task::CodeGen,
                    Phase::Augmentation,
                )
            })
        })
        .collect();
    let samples = sample_all(generator, requests);

    let mut reports = Vec::with_capacity(dataset.len());
    let mut candidates: Vec<Vec<CodeSolution>> = Vec::with_capacity(dataset.len());
    for (problem, sampled) in dataset.problems.iter().zip(samples) {
        let mut report = CodeProblemReport {
            problem_id: problem.id.clone(),
            test_pool: problem.tests.len(),
            solutions_before: problem.solutions.len(),
            solutions_after: problem.solutions.len(),
            counts: CodeCounts::default(),
            skipped: None,
        };
        let mut fresh = Vec::new();
        match sampled {
            None => report.skipped = Some("no tests to verify against".into()),
            Some(Err(e)) => {
                log::warn!("{e}");
                report.skipped = Some(skip_reason(&e));
            }
            Some(Ok(completions)) => {
                report.counts.completions = completions.len();
                let mut seen: HashSet<String> =
                    problem.solutions.iter().map(|s| s.normalized().to_string()).collect();
                for c in &completions {
                    let code = extract_code(&c.text, &cfg.solution_separator);
                    let source = prepare_source(code, cfg.formatter.as_ref());
                    let candidate = CodeSolution::new(source, SolutionOrigin::Augmented(iteration), true);
                    if candidate.normalized().is_empty() {
                        report.counts.empty += 1;
                    } else if !seen.insert(candidate.normalized().to_string()) {
                        report.counts.duplicates += 1;
                    } else {
                        fresh.push(candidate);
                    }
                }
                report.counts.evaluated = fresh.len();
            }
        }
        reports.push(report);
        candidates.push(fresh);
    }

    let jobs: Vec<(&str, &str)> = dataset
        .problems
        .iter()
        .zip(&candidates)
        .flat_map(|(p, cands)| {
            cands
                .iter()
                .flat_map(move |c| p.tests.iter().map(move |t| (c.source(), t.input.as_str())))
        })
        .collect();
    let mut results = sandbox.run_batch(&jobs).into_iter();

    let mut problems = Vec::with_capacity(dataset.len());
    for ((problem, cands), report) in dataset.problems.iter().zip(candidates).zip(&mut reports) {
        let mut problem = problem.clone();
        for cand in cands {
            let mut passed = true;
            for test in &problem.tests {
                let r = results.next().expect("one result per job");
                passed &= sandbox.judge(&r, &test.output);
            }
            if passed {
                report.counts.accepted += 1;
                problem.solutions.push(cand);
            } else {
                report.counts.rejected += 1;
            }
        }
        report.solutions_after = problem.solutions.len();
        problems.push(problem);
    }

    let mut totals = CodeCounts::default();
    for r in &reports {
        totals += r.counts;
    }
    log::info!(
        "code iteration {iteration}: accepted {} of {} evaluated",
        totals.accepted,
        totals.evaluated
    );
    let report = CodeIterationReport {
        iteration,
        generator: generator.tag().to_string(),
        totals,
        problems: reports,
    };
    (Dataset::new(problems), report)
}
