use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    augment_code_iteration, augment_tests_iteration, AugmentationConfig, AugmentationError, CodeIterationReport,
    TestIterationReport,
};
use crate::generators::{GenerationError, Generator, Task};
use crate::model::{compute_stats, save_dataset, Dataset, DatasetFormat, DatasetStats};
use crate::sandbox::Sandbox;

/// Where `run_pipeline` writes a dataset snapshot after each iteration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Checkpoints {
    pub dir: PathBuf,
    pub format: DatasetFormat,
}

impl Checkpoints {
    /// `d_test_iter1`, `d_code_iter2`, `d_final`, with `.jsonl` appended for JSONL.
    pub fn path(&self, name: &str) -> PathBuf {
        match self.format {
            DatasetFormat::Directory => self.dir.join(name),
            DatasetFormat::Jsonl => self.dir.join(format!("{name}.jsonl")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageStats {
    pub stage: String,
    pub stats: DatasetStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub test_iterations: Vec<TestIterationReport>,
    pub code_iterations: Vec<CodeIterationReport>,
    /// Dataset statistics for the seed and after every iteration.
    pub progression: Vec<StageStats>,
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub dataset: Dataset,
    pub report: PipelineReport,
}

/// Conventional replay layout: `<root>/tests_<i>/` and `<root>/code_<i>/`.
pub fn replay_dir(root: &Path, task: Task, iteration: u32) -> PathBuf {
    let stage = match task {
        Task::TestGen => "tests",
        Task::CodeGen => "code",
    };
    root.join(format!("{stage}_{iteration}"))
}

/// Runs all test iterations (plus the optional extra pass), then all code
/// iterations. `provider` supplies the generator for each `(task, iteration)`.
pub fn run_pipeline(
    seed: &Dataset,
    provider: &dyn Fn(Task, u32) -> Result<Box<dyn Generator>, GenerationError>,
    sandbox: &Sandbox,
    cfg: &AugmentationConfig,
    checkpoints: Option<&Checkpoints>,
) -> Result<PipelineOutcome, AugmentationError> {
    cfg.validate()?;
    if let Some(c) = checkpoints {
        std::fs::create_dir_all(&c.dir).map_err(|source| crate::model::DatasetError::Io {
            path: c.dir.clone(),
            source,
        })?;
    }
    let save = |d: &Dataset, name: &str| -> Result<(), AugmentationError> {
        if let Some(c) = checkpoints {
            save_dataset(d, &c.path(name), c.format)?;
        }
        Ok(())
    };

    let mut report = PipelineReport {
        test_iterations: Vec::new(),
        code_iterations: Vec::new(),
        progression: vec![StageStats {
            stage: "seed".into(),
            stats: compute_stats(seed),
        }],
    };
    let mut dataset = seed.clone();

    let test_rounds = cfg.test_iterations + cfg.extra_test_pass as u32;
    for i in 1..=test_rounds {
        let generator = provider(Task::TestGen, i)?;
        let (next, r) = augment_tests_iteration(&dataset, &generator, sandbox, cfg, i);
        dataset = next;
        let name = format!("d_test_iter{i}");
        save(&dataset, &name)?;
        report.test_iterations.push(r);
        report.progression.push(StageStats {
            stage: name,
            stats: compute_stats(&dataset),
        });
    }
    for i in 1..=cfg.code_iterations {
        let generator = provider(Task::CodeGen, i)?;
        let (next, r) = augment_code_iteration(&dataset, &generator, sandbox, cfg, i);
        dataset = next;
        let name = format!("d_code_iter{i}");
        save(&dataset, &name)?;
        report.code_iterations.push(r);
        report.progression.push(StageStats {
            stage: name,
            stats: compute_stats(&dataset),
        });
    }
    save(&dataset, "d_final")?;
    Ok(PipelineOutcome { dataset, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::StubGenerator;
    use crate::model::{CodeSolution, Difficulty, LoadOptions, Problem, TestCase};
    use crate::sandbox::SandboxConfig;
    use std::sync::Mutex;

    fn seed() -> Dataset {
        Dataset::new(vec![Problem {
            id: "double".into(),
            description: "Print twice the input.".into(),
            difficulty: Difficulty::Interview,
            solutions: vec![CodeSolution::ground_truth("print(int(input()) * 2)\n")],
            tests: vec![TestCase::seed("1\n", "2\n")],
        }])
    }

    fn provider(calls: &Mutex<Vec<(Task, u32)>>) -> impl Fn(Task, u32) -> Result<Box<dyn Generator>, GenerationError> + '_ {
        move |task, i| {
            calls.lock().unwrap().push((task, i));
            let g: Box<dyn Generator> = match task {
                Task::TestGen => Box::new(StubGenerator::new("t", move |_| {
                    vec![format!("{{\"input\": \"{}\\n\"}}", 10 * i)]
                })),
                Task::CodeGen => Box::new(StubGenerator::new("c", move |_| {
                    vec![format!("x = int(input())\nprint(x + x)  # v{i}\n")]
                })),
            };
            Ok(g)
        }
    }

    fn cfg() -> AugmentationConfig {
        AugmentationConfig {
            test_iterations: 2,
            code_iterations: 1,
            test_samples_per_problem: 1,
            ..AugmentationConfig::default()
        }
    }

    #[test]
    fn runs_stages_in_order_and_checkpoints() {
        let tmp = tempfile::tempdir().unwrap();
        let ck = Checkpoints {
            dir: tmp.path().join("out"),
            format: DatasetFormat::Jsonl,
        };
        let calls = Mutex::new(Vec::new());
        let sb = Sandbox::new(SandboxConfig::default()).unwrap();
        let out = run_pipeline(&seed(), &provider(&calls), &sb, &cfg(), Some(&ck)).unwrap();
        assert_eq!(
            *calls.lock().unwrap(),
            [(Task::TestGen, 1), (Task::TestGen, 2), (Task::CodeGen, 1)]
        );
        let p = &out.dataset.problems[0];
        let tests: Vec<&str> = p.tests.iter().map(|t| t.output.as_str()).collect();
        assert_eq!(tests, ["2\n", "20\n", "40\n"]);
        assert_eq!(p.solutions.len(), 2);
        for name in ["d_test_iter1", "d_test_iter2", "d_code_iter1", "d_final"] {
            assert!(ck.path(name).is_file(), "{name}");
        }
        let fin = crate::model::load_dataset(&ck.path("d_final"), &LoadOptions::default()).unwrap();
        assert_eq!(fin, out.dataset);
        let stages: Vec<&str> = out.report.progression.iter().map(|s| s.stage.as_str()).collect();
        assert_eq!(stages, ["seed", "d_test_iter1", "d_test_iter2", "d_code_iter1"]);
    }

    #[test]
    fn extra_test_pass() {
        let calls = Mutex::new(Vec::new());
        let sb = Sandbox::new(SandboxConfig::default()).unwrap();
        let c = AugmentationConfig {
            extra_test_pass: true,
            ..cfg()
        };
        let out = run_pipeline(&seed(), &provider(&calls), &sb, &c, None).unwrap();
        assert_eq!(out.report.test_iterations.len(), 3);
        assert_eq!(calls.lock().unwrap()[2], (Task::TestGen, 3));
        assert_eq!(out.dataset.problems[0].tests.len(), 4);
    }

    #[test]
    fn rejects_zero_iterations() {
        let calls = Mutex::new(Vec::new());
        let sb = Sandbox::new(SandboxConfig::default()).unwrap();
        let c = AugmentationConfig {
            test_iterations: 0,
            ..cfg()
        };
        assert!(matches!(
            run_pipeline(&seed(), &provider(&calls), &sb, &c, None),
            Err(AugmentationError::InvalidConfig(_))
        ));
        assert!(calls.lock().unwrap().is_empty());
    }

    #[test]
    fn replay_layout() {
        assert_eq!(replay_dir(Path::new("r"), Task::TestGen, 2), Path::new("r/tests_2"));
        assert_eq!(replay_dir(Path::new("r"), Task::CodeGen, 1), Path::new("r/code_1"));
    }
}
