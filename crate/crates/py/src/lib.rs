//! Python bindings: `import codeaug`.

use std::path::PathBuf;
use std::time::Duration;

use codeaug::metrics::{self, ProblemEval};
use codeaug::model::{self, LoadMode, LoadOptions};
use codeaug::sandbox::{CodeCandidate, ExecLimits, Runner, TestCandidate};
use codeaug::scoring::{self, Scorer};
use codeaug::{Difficulty, PassMatrix as CorePassMatrix, Sandbox, SandboxConfig, ScoringConfig};
use pyo3::exceptions::{PyIOError, PyKeyError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Binary code-by-test pass matrix.
#[pyclass(name = "PassMatrix", module = "codeaug", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyPassMatrix {
    inner: CorePassMatrix,
}

#[pymethods]
impl PyPassMatrix {
    #[new]
    #[pyo3(signature = (rows, code_ids=None, test_ids=None))]
    fn new(rows: Vec<Vec<u8>>, code_ids: Option<Vec<String>>, test_ids: Option<Vec<String>>) -> PyResult<Self> {
        let inner = match (code_ids, test_ids) {
            (None, None) => CorePassMatrix::from_rows(&rows),
            (c, t) => {
                let c = c.unwrap_or_else(|| (0..rows.len()).map(|i| format!("c{i}")).collect());
                let t = t.unwrap_or_else(|| (0..rows.first().map_or(0, Vec::len)).map(|j| format!("t{j}")).collect());
                CorePassMatrix::with_binary(c, t, &rows)
            }
        }
        .map_err(value_err)?;
        Ok(PyPassMatrix { inner })
    }

    #[getter]
    fn num_codes(&self) -> usize {
        self.inner.num_codes()
    }

    #[getter]
    fn num_tests(&self) -> usize {
        self.inner.num_tests()
    }

    #[getter]
    fn code_ids(&self) -> Vec<String> {
        self.inner.code_ids().to_vec()
    }

    #[getter]
    fn test_ids(&self) -> Vec<String> {
        self.inner.test_ids().to_vec()
    }

    fn to_rows(&self) -> Vec<Vec<u32>> {
        self.inner.to_rows().into_iter().map(|r| r.into_iter().map(u32::from).collect()).collect()
    }

    /// Returns `(code_scores, test_scores)` for `scorer` in {"dual", "codet"}.
    #[pyo3(signature = (scorer="dual", iterations=500, epsilon=1e-8, convergence_tol=Some(1e-9)))]
    fn score(&self, scorer: &str, iterations: usize, epsilon: f64, convergence_tol: Option<f64>) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let scorer = match scorer {
            "dual" => Scorer::Dual,
            "codet" => Scorer::Codet,
            other => return Err(value_err(format!("unknown scorer `{other}`"))),
        };
        let cfg = ScoringConfig {
            iterations,
            epsilon,
            convergence_tol,
        };
        cfg.validate().map_err(value_err)?;
        let (c, t) = scorer.score(&self.inner, &cfg).map_err(value_err)?;
        Ok((c.values, t.values))
    }

    fn __repr__(&self) -> String {
        format!("PassMatrix({} codes x {} tests)", self.inner.num_codes(), self.inner.num_tests())
    }
}

/// A loaded problem dataset.
#[pyclass(name = "Dataset", module = "codeaug", frozen)]
pub struct PyDataset {
    inner: model::Dataset,
    skipped: Vec<String>,
}

#[pymethods]
impl PyDataset {
    #[staticmethod]
    #[pyo3(signature = (path, lenient=false))]
    fn load(path: PathBuf, lenient: bool) -> PyResult<Self> {
        let opts = LoadOptions {
            mode: if lenient { LoadMode::Lenient } else { LoadMode::Strict },
            ..LoadOptions::default()
        };
        let (inner, report) = model::load_dataset_reported(&path, &opts).map_err(|e| match e {
            model::DatasetError::Io { .. } | model::DatasetError::Missing(_) => PyIOError::new_err(e.to_string()),
            other => value_err(other),
        })?;
        Ok(PyDataset {
            inner,
            skipped: report.skipped,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn problem_ids(&self) -> Vec<String> {
        self.inner.problems.iter().map(|p| p.id.clone()).collect()
    }

    /// Problem ids dropped by a lenient load.
    #[getter]
    fn skipped(&self) -> Vec<String> {
        self.skipped.clone()
    }

    /// `(problems, solutions per problem, tests per problem)`.
    fn stats(&self) -> (usize, f64, f64) {
        let s = model::compute_stats(&self.inner);
        (s.problem_count, s.solutions_per_problem, s.tests_per_problem)
    }

    fn problem<'py>(&self, py: Python<'py>, id: &str) -> PyResult<Bound<'py, PyDict>> {
        let p = self.inner.get(id).ok_or_else(|| PyKeyError::new_err(id.to_string()))?;
        let d = PyDict::new(py);
        d.set_item("id", &p.id)?;
        d.set_item("description", &p.description)?;
        d.set_item("difficulty", p.difficulty.as_str())?;
        d.set_item("solutions", p.solutions.iter().map(|s| s.source().to_string()).collect::<Vec<_>>())?;
        d.set_item(
            "tests",
            p.tests.iter().map(|t| (t.input.clone(), t.output.clone())).collect::<Vec<_>>(),
        )?;
        Ok(d)
    }
}

#[pyfunction]
fn normalize_code(source: &str) -> String {
    model::normalize_code(source)
}

#[pyfunction]
fn pass_at_k(n: usize, c: usize, k: usize) -> PyResult<f64> {
    metrics::pass_at_k(n, c, k).map_err(value_err)
}

fn eval_for(code_correct: Vec<bool>, code_scores: Vec<f64>, test_correct: Vec<bool>, test_scores: Vec<f64>) -> PyResult<ProblemEval> {
    let e = ProblemEval::new("py", Difficulty::Interview, code_correct, test_correct).with_scores(code_scores, test_scores);
    e.validate().map_err(value_err)?;
    Ok(e)
}

/// pass@k over the tie-inclusive top-`n` codes by score.
#[pyfunction]
fn n_at_k(code_correct: Vec<bool>, code_scores: Vec<f64>, n: usize, k: usize) -> PyResult<f64> {
    let e = eval_for(code_correct, code_scores, vec![], vec![])?;
    metrics::n_at_k(&e, n, k).map_err(value_err)
}

/// Share of correct tests among the tie-inclusive top-`n` tests by score.
#[pyfunction]
fn pr_at_n(test_correct: Vec<bool>, test_scores: Vec<f64>, n: usize) -> PyResult<f64> {
    let e = eval_for(vec![], vec![], test_correct, test_scores)?;
    metrics::pr_at_n(&e, n).map_err(value_err)
}

/// Competition ranks as `(index, rank)` pairs in ranking order.
#[pyfunction]
fn rank(scores: Vec<f64>) -> Vec<(usize, usize)> {
    let ids: Vec<String> = (0..scores.len()).map(|i| i.to_string()).collect();
    scoring::rank(&scores, &ids)
        .expect("ids built to match")
        .into_iter()
        .map(|r| (r.index, r.rank))
        .collect()
}

#[pyfunction]
fn top_n(scores: Vec<f64>, n: usize) -> Vec<usize> {
    scoring::top_n(&scores, n)
}

fn limits(wall_time: f64, cpu_time: Option<f64>, memory_mb: u64, max_output: usize) -> PyResult<ExecLimits> {
    let secs = |s: f64| Duration::try_from_secs_f64(s).map_err(value_err);
    let l = ExecLimits {
        wall_time: secs(wall_time)?,
        cpu_time: secs(cpu_time.unwrap_or(wall_time))?,
        memory: memory_mb * 1024 * 1024,
        max_output,
    };
    l.validate().map_err(value_err)?;
    Ok(l)
}

/// Runs a program once; returns a dict with status, stdout, stderr, exit_code, seconds.
#[pyfunction]
#[pyo3(signature = (source, stdin="", wall_time=10.0, cpu_time=None, memory_mb=512, max_output=1<<20, runner=None))]
#[allow(clippy::too_many_arguments)]
fn run_program<'py>(
    py: Python<'py>,
    source: &str,
    stdin: &str,
    wall_time: f64,
    cpu_time: Option<f64>,
    memory_mb: u64,
    max_output: usize,
    runner: Option<&str>,
) -> PyResult<Bound<'py, PyDict>> {
    let limits = limits(wall_time, cpu_time, memory_mb, max_output)?;
    let runner = match runner {
        Some(t) => Runner::from_template(t, "py").map_err(value_err)?,
        None => Runner::default(),
    };
    let r = py.detach(|| codeaug::sandbox::run_program(source, stdin, &limits, &runner));
    let d = PyDict::new(py);
    d.set_item("status", format!("{:?}", r.status))?;
    d.set_item("stdout", r.stdout)?;
    d.set_item("stderr", r.stderr)?;
    d.set_item("exit_code", r.exit_code)?;
    d.set_item("seconds", r.duration.as_secs_f64())?;
    Ok(d)
}

/// Executes every code on every `(input, expected_output)` test.
#[pyfunction]
#[pyo3(signature = (codes, tests, workers=None, wall_time=10.0))]
fn build_pass_matrix(py: Python<'_>, codes: Vec<String>, tests: Vec<(String, String)>, workers: Option<usize>, wall_time: f64) -> PyResult<PyPassMatrix> {
    let mut cfg = SandboxConfig {
        limits: limits(wall_time, None, 512, 1 << 20)?,
        ..SandboxConfig::default()
    };
    if let Some(w) = workers {
        cfg.workers = w;
    }
    let sandbox = Sandbox::new(cfg).map_err(value_err)?;
    let codes: Vec<CodeCandidate> = codes
        .into_iter()
        .enumerate()
        .map(|(i, source)| CodeCandidate { id: format!("c{i}"), source })
        .collect();
    let tests: Vec<TestCandidate> = tests
        .into_iter()
        .enumerate()
        .map(|(j, (input, output))| TestCandidate { id: format!("t{j}"), input, output })
        .collect();
    let run = py.detach(|| sandbox.build_pass_matrix(&codes, &tests)).map_err(value_err)?;
    Ok(PyPassMatrix { inner: run.matrix })
}

#[pymodule(name = "codeaug")]
fn codeaug_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPassMatrix>()?;
    m.add_class::<PyDataset>()?;
    m.add_function(wrap_pyfunction!(normalize_code, m)?)?;
    m.add_function(wrap_pyfunction!(pass_at_k, m)?)?;
    m.add_function(wrap_pyfunction!(n_at_k, m)?)?;
    m.add_function(wrap_pyfunction!(pr_at_n, m)?)?;
    m.add_function(wrap_pyfunction!(rank, m)?)?;
    m.add_function(wrap_pyfunction!(top_n, m)?)?;
    m.add_function(wrap_pyfunction!(run_program, m)?)?;
    m.add_function(wrap_pyfunction!(build_pass_matrix, m)?)?;
    Ok(())
}
