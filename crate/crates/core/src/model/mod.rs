//! Dataset domain types, persistence, deduplication and statistics.

mod io;
mod normalize;
mod types;

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use io::{load_dataset, load_dataset_reported, save_dataset, DatasetError, DatasetFormat, LoadMode, LoadOptions, LoadReport};
pub use normalize::{normalize_code, prepare_source, ExternalFormatter};
pub use types::{
    CodeSolution, Dataset, Difficulty, Problem, SolutionOrigin, TestCase, TestOrigin,
};

/// Removes solutions whose normalized form was already seen.
///
/// Ground-truth entries are considered first so an augmented duplicate can
/// never displace one; within each group the first occurrence survives and
/// relative order is preserved.
pub fn dedup_solutions(problem: &Problem) -> Problem {
    let mut seen: HashSet<&str> = problem
        .solutions
        .iter()
        .filter(|s| s.is_ground_truth())
        .map(|s| s.normalized())
        .collect();
    let mut gt_seen: HashSet<&str> = HashSet::new();
    let solutions = problem
        .solutions
        .iter()
        .filter(|s| {
            if s.is_ground_truth() {
                gt_seen.insert(s.normalized())
            } else {
                seen.insert(s.normalized())
            }
        })
        .cloned()
        .collect();
    Problem {
        solutions,
        ..problem.clone()
    }
}

/// Removes tests whose input text was already seen. Seed tests take priority
/// over augmented tests with the same input.
pub fn dedup_tests(problem: &Problem) -> Problem {
    let is_seed = |t: &TestCase| t.origin == TestOrigin::Seed;
    let mut seen: HashSet<&str> = problem
        .tests
        .iter()
        .filter(|t| is_seed(t))
        .map(|t| t.input.as_str())
        .collect();
    let mut seed_seen: HashSet<&str> = HashSet::new();
    let tests = problem
        .tests
        .iter()
        .filter(|t| {
            if is_seed(t) {
                seed_seen.insert(t.input.as_str())
            } else {
                seen.insert(t.input.as_str())
            }
        })
        .cloned()
        .collect();
    Problem {
        tests,
        ..problem.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub problem_count: usize,
    pub solutions_per_problem: f64,
    pub tests_per_problem: f64,
}

pub fn compute_stats(dataset: &Dataset) -> DatasetStats {
    let n = dataset.problems.len();
    let solutions: usize = dataset.problems.iter().map(|p| p.solutions.len()).sum();
    let tests: usize = dataset.problems.iter().map(|p| p.tests.len()).sum();
    let mean = |total: usize| if n == 0 { 0.0 } else { total as f64 / n as f64 };
    DatasetStats {
        problem_count: n,
        solutions_per_problem: mean(solutions),
        tests_per_problem: mean(tests),
    }
}

impl DatasetStats {
    pub const HEADER: [&'static str; 4] = ["Dataset", "Problems", "Solutions per problem", "Tests per problem"];

    /// One table row in the `Problems | Solutions per problem | Tests per problem` layout.
    pub fn row(&self, name: &str) -> [String; 4] {
        [
            name.to_string(),
            self.problem_count.to_string(),
            format!("{:.2}", self.solutions_per_problem),
            format!("{:.2}", self.tests_per_problem),
        ]
    }
}

/// Renders a plain-text table with right-aligned numeric columns.
pub struct StatsTable<'a> {
    pub rows: Vec<(&'a str, DatasetStats)>,
}

impl fmt::Display for StatsTable<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let header: Vec<String> = DatasetStats::HEADER.iter().map(|s| s.to_string()).collect();
        let rows: Vec<Vec<String>> = self.rows.iter().map(|(n, s)| s.row(n).to_vec()).collect();
        crate::report::write_table(f, &header, &rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem(solutions: Vec<CodeSolution>, tests: Vec<TestCase>) -> Problem {
        Problem {
            id: "p".into(),
            description: "d".into(),
            difficulty: Difficulty::Introductory,
            solutions,
            tests,
        }
    }

    fn aug_test(input: &str, output: &str) -> TestCase {
        TestCase {
            input: input.into(),
            output: output.into(),
            origin: TestOrigin::Augmented(1),
            train_eligible: true,
        }
    }

    #[test]
    fn whitespace_variants_collapse() {
        let p = problem(
            vec![
                CodeSolution::ground_truth("print(1)"),
                CodeSolution::new("print(1)   \n", SolutionOrigin::Augmented(1), true),
            ],
            vec![],
        );
        assert_eq!(dedup_solutions(&p).solutions.len(), 1);
    }

    #[test]
    fn ground_truth_beats_earlier_augmented_duplicate() {
        let p = problem(
            vec![
                CodeSolution::new("x = 1\n\n\n", SolutionOrigin::Augmented(1), true),
                CodeSolution::ground_truth("x = 1"),
            ],
            vec![],
        );
        let d = dedup_solutions(&p);
        assert_eq!(d.solutions.len(), 1);
        assert!(d.solutions[0].is_ground_truth());
    }

    #[test]
    fn k_duplicates_injected() {
        let distinct: Vec<CodeSolution> = (0..7)
            .map(|i| CodeSolution::new(format!("print({i})"), SolutionOrigin::Augmented(1), true))
            .collect();
        let mut all = distinct.clone();
        for i in [3usize, 0, 6, 3, 1] {
            all.push(CodeSolution::new(
                format!("print({i})  \r\n\r\n"),
                SolutionOrigin::Augmented(2),
                true,
            ));
        }
        let d = dedup_solutions(&problem(all, vec![]));
        assert_eq!(d.solutions, distinct);
    }

    #[test]
    fn equal_inputs_first_wins() {
        let p = problem(vec![], vec![aug_test("1", "a"), aug_test("1", "b")]);
        let d = dedup_tests(&p);
        assert_eq!(d.tests, vec![aug_test("1", "a")]);
    }

    #[test]
    fn disjoint_inputs_survive() {
        let p = problem(vec![], vec![aug_test("1", "a"), aug_test("2", "b"), aug_test("3", "c")]);
        assert_eq!(dedup_tests(&p).tests.len(), 3);
    }

    #[test]
    fn seed_not_displaced() {
        let p = problem(vec![], vec![aug_test("1", "a"), TestCase::seed("1", "b")]);
        let d = dedup_tests(&p);
        assert_eq!(d.tests, vec![TestCase::seed("1", "b")]);
    }

    #[test]
    fn hundred_tests_forty_inputs() {
        let tests: Vec<TestCase> = (0..100).map(|i| aug_test(&((i * 7) % 40).to_string(), "x")).collect();
        let distinct: HashSet<&str> = tests.iter().map(|t| t.input.as_str()).collect();
        assert_eq!(distinct.len(), 40);
        let d = dedup_tests(&problem(vec![], tests));
        assert_eq!(d.tests.len(), 40);
        assert_eq!(dedup_tests(&d), d);
    }

    #[test]
    fn stats_means() {
        let d = Dataset::new(vec![
            problem(vec![CodeSolution::ground_truth("a")], vec![]),
            Problem {
                id: "q".into(),
                ..problem(
                    vec![
                        CodeSolution::ground_truth("a"),
                        CodeSolution::ground_truth("b"),
                        CodeSolution::ground_truth("c"),
                    ],
                    vec![],
                )
            },
        ]);
        let s = compute_stats(&d);
        assert_eq!(s.problem_count, 2);
        assert_eq!(s.solutions_per_problem, 2.0);
        assert_eq!(s.tests_per_problem, 0.0);
    }

    #[test]
    fn empty_stats_are_zero() {
        let s = compute_stats(&Dataset::default());
        assert_eq!(s.problem_count, 0);
        assert_eq!(s.tests_per_problem, 0.0);
    }

    #[test]
    fn stats_row_reproduces_minus_row() {
        // 4977 problems, each with one solution; 686 of them carry 10 tests.
        let mut problems = Vec::with_capacity(4977);
        for i in 0..4977 {
            let tests = if i < 686 {
                (0..10).map(|j| TestCase::seed(j.to_string(), "o")).collect()
            } else {
                vec![]
            };
            problems.push(Problem {
                id: format!("p{i}"),
                ..problem(vec![CodeSolution::ground_truth("x")], tests)
            });
        }
        let s = compute_stats(&Dataset::new(problems));
        assert_eq!(s.row("APPS-"), ["APPS-", "4977", "1.00", "1.38"].map(String::from));
        assert!((s.tests_per_problem - 6860.0 / 4977.0).abs() < 1e-12);
    }
}
