use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{code_prompt, test_prompt, AugmentationConfig};
use crate::generators::Task;
use crate::model::{Dataset, SolutionOrigin, TestCase, TestOrigin};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub source: String,
    pub target: String,
    pub task: Task,
    pub problem_id: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ExportOutcome {
    pub examples: Vec<TrainingExample>,
    /// Problems with nothing eligible to export.
    pub skipped: Vec<String>,
}

#[derive(Serialize)]
struct TestRecord<'a> {
    input: &'a str,
    output: &'a str,
}

fn serialize_test(t: &TestCase) -> String {
    serde_json::to_string(&TestRecord {
        input: &t.input,
        output: &t.output,
    })
    .expect("strings always serialize")
}

fn latest_test_iteration(dataset: &Dataset) -> Option<u32> {
    dataset
        .problems
        .iter()
        .flat_map(|p| &p.tests)
        .filter_map(|t| match t.origin {
            TestOrigin::Augmented(i) => Some(i),
            TestOrigin::Seed => None,
        })
        .max()
}

fn latest_code_iteration(dataset: &Dataset) -> Option<u32> {
    dataset
        .problems
        .iter()
        .flat_map(|p| &p.solutions)
        .filter_map(|s| match s.origin {
            SolutionOrigin::Augmented(i) => Some(i),
            SolutionOrigin::GroundTruth => None,
        })
        .max()
}

/// Builds a fine-tuning corpus for `task`.
///
/// Without replay, only seed data plus items from `current_iteration` are
/// eligible; `None` means the latest iteration present in the dataset.
/// Test examples hold a seeded uniform sample of train-eligible tests, shortest
/// first. Code examples are one per verified solution.
pub fn export_training_corpus(
    dataset: &Dataset,
    task: Task,
    cfg: &AugmentationConfig,
    seed: u64,
    current_iteration: Option<u32>,
) -> ExportOutcome {
    let mut out = ExportOutcome::default();
    match task {
        Task::TestGen => {
            let current = current_iteration.or_else(|| latest_test_iteration(dataset));
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for p in &dataset.problems {
                let pool: Vec<&TestCase> = p
                    .tests
                    .iter()
                    .filter(|t| t.train_eligible)
                    .filter(|t| match t.origin {
                        TestOrigin::Seed => true,
                        TestOrigin::Augmented(i) => cfg.replay_tests || Some(i) == current,
                    })
                    .collect();
                if pool.is_empty() {
                    out.skipped.push(p.id.clone());
                    continue;
                }
                let amount = pool.len().min(cfg.export_tests_per_example);
                let mut picked = rand::seq::index::sample(&mut rng, pool.len(), amount).into_vec();
                picked.sort_unstable();
                let mut serialized: Vec<String> = picked.into_iter().map(|i| serialize_test(pool[i])).collect();
                serialized.sort_by_key(|s| s.chars().count());
                out.examples.push(TrainingExample {
                    source: test_prompt(p, cfg),
                    target: serialized.join(&cfg.test_separator),
                    task,
                    problem_id: p.id.clone(),
                });
            }
        }
        Task::CodeGen => {
            let current = current_iteration.or_else(|| latest_code_iteration(dataset));
            for p in &dataset.problems {
                let before = out.examples.len();
                for s in p.solutions.iter().filter(|s| s.verified) {
                    let eligible = match s.origin {
                        SolutionOrigin::GroundTruth => true,
                        SolutionOrigin::Augmented(i) => cfg.replay_code || Some(i) == current,
                    };
                    if eligible {
                        out.examples.push(TrainingExample {
                            source: code_prompt(p, cfg),
                            target: s.source().to_string(),
                            task,
                            problem_id: p.id.clone(),
                        });
                    }
                }
                if out.examples.len() == before {
                    out.skipped.push(p.id.clone());
                }
            }
        }
    }
    out
}

/// One JSON object per line: `{source, target, task, problem_id}`.
pub fn write_training_jsonl(path: &Path, examples: &[TrainingExample]) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    for e in examples {
        serde_json::to_writer(&mut w, e)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CodeSolution, Difficulty, Problem};

    fn test(input: &str, origin: TestOrigin) -> TestCase {
        TestCase {
            input: input.into(),
            output: "o".into(),
            origin,
            train_eligible: true,
        }
    }

    fn problem(tests: Vec<TestCase>, solutions: Vec<CodeSolution>) -> Problem {
        Problem {
            id: "p".into(),
            description: "Desc".into(),
            difficulty: Difficulty::Interview,
            solutions,
            tests,
        }
    }

    fn targets(ex: &TrainingExample) -> Vec<serde_json::Value> {
        ex.target
            .split("<test>")
            .map(|s| serde_json::from_str(s).unwrap())
            .collect()
    }

    #[test]
    fn sorted_by_length() {
        let tests = [30, 10, 20].map(|n| test(&"x".repeat(n), TestOrigin::Seed)).to_vec();
        let ds = Dataset::new(vec![problem(tests, vec![])]);
        let out = export_training_corpus(&ds, Task::TestGen, &AugmentationConfig::default(), 0, None);
        let ex = &out.examples[0];
        assert_eq!(ex.source, "Desc<test>");
        let lens: Vec<usize> = targets(ex).iter().map(|v| v["input"].as_str().unwrap().len()).collect();
        assert_eq!(lens, [10, 20, 30]);
        assert_eq!(ex.target, format!(
            "{{\"input\":\"{}\",\"output\":\"o\"}}<test>{{\"input\":\"{}\",\"output\":\"o\"}}<test>{{\"input\":\"{}\",\"output\":\"o\"}}",
            "x".repeat(10), "x".repeat(20), "x".repeat(30)
        ));
    }

    #[test]
    fn samples_at_most_ten() {
        let tests = (0..25).map(|i| test(&format!("{i:02}"), TestOrigin::Seed)).collect();
        let ds = Dataset::new(vec![problem(tests, vec![])]);
        let cfg = AugmentationConfig::default();
        let subset = |seed| {
            let out = export_training_corpus(&ds, Task::TestGen, &cfg, seed, None);
            let mut v: Vec<String> = targets(&out.examples[0])
                .iter()
                .map(|t| t["input"].as_str().unwrap().to_string())
                .collect();
            assert_eq!(v.len(), 10);
            v.sort();
            v
        };
        assert_eq!(subset(1), subset(1));
        assert!((2..20).any(|s| subset(s) != subset(1)));
    }

    #[test]
    fn ineligible_and_stale_tests_excluded() {
        let mut long = test("long", TestOrigin::Seed);
        long.train_eligible = false;
        let tests = vec![
            test("s", TestOrigin::Seed),
            long,
            test("a1", TestOrigin::Augmented(1)),
            test("a2", TestOrigin::Augmented(2)),
        ];
        let ds = Dataset::new(vec![problem(tests, vec![])]);
        let inputs = |cfg: &AugmentationConfig, cur| {
            let out = export_training_corpus(&ds, Task::TestGen, cfg, 7, cur);
            let mut v: Vec<String> = targets(&out.examples[0])
                .iter()
                .map(|t| t["input"].as_str().unwrap().to_string())
                .collect();
            v.sort();
            v
        };
        let cfg = AugmentationConfig::default();
        assert_eq!(inputs(&cfg, None), ["a2", "s"]);
        assert_eq!(inputs(&cfg, Some(1)), ["a1", "s"]);
        let replay = AugmentationConfig {
            replay_tests: true,
            ..cfg
        };
        assert_eq!(inputs(&replay, None), ["a1", "a2", "s"]);
    }

    #[test]
    fn code_replay_policy() {
        let sols = vec![
            CodeSolution::ground_truth("print(1)"),
            CodeSolution::new("print(2)", SolutionOrigin::Augmented(1), true),
            CodeSolution::new("print(3)", SolutionOrigin::Augmented(1), false),
        ];
        let ds = Dataset::new(vec![problem(vec![], sols)]);
        let srcs = |replay_code, cur| {
            let cfg = AugmentationConfig {
                replay_code,
                ..AugmentationConfig::default()
            };
            export_training_corpus(&ds, Task::CodeGen, &cfg, 0, cur)
                .examples
                .into_iter()
                .map(|e| {
                    assert_eq!(e.source, "Desc<solution>");
                    e.target
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(srcs(true, Some(2)), ["print(1)", "print(2)"]);
        assert_eq!(srcs(false, Some(2)), ["print(1)"]);
        assert_eq!(srcs(false, None), ["print(1)", "print(2)"]);
    }

    #[test]
    fn empty_pools_are_reported() {
        let ds = Dataset::new(vec![problem(vec![], vec![])]);
        let cfg = AugmentationConfig::default();
        for task in [Task::TestGen, Task::CodeGen] {
            let out = export_training_corpus(&ds, task, &cfg, 0, None);
            assert!(out.examples.is_empty());
            assert_eq!(out.skipped, ["p"]);
        }
    }

    #[test]
    fn jsonl_shape() {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("c.jsonl");
        let ex = TrainingExample {
            source: "s".into(),
            target: "t".into(),
            task: Task::CodeGen,
            problem_id: "p".into(),
        };
        write_training_jsonl(&path, &[ex.clone(), ex]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text,
            "{\"source\":\"s\",\"target\":\"t\",\"task\":\"code_gen\",\"problem_id\":\"p\"}\n".repeat(2)
        );
    }
}
