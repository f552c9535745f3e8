//! On-disk dataset layouts.
//!
//! Directory layout, one sub-directory per problem:
//!
//! ```text
//! <root>/00000/question.txt       UTF-8 problem description
//! <root>/00000/solutions.json     [{"source": ..., "origin": "ground-truth", "verified": true}, ...]
//! <root>/00000/input_output.json  {"inputs": [...], "outputs": [...], "origins": [...], "train_eligible": [...]}
//! <root>/00000/metadata.json      {"id": ..., "difficulty": "interview"}
//! ```
//!
//! The JSONL layout stores one problem object per line with the same
//! fields: `{"id", "difficulty", "question", "solutions", "input_output"}`.

use std::collections::HashSet;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::types::{CodeSolution, Dataset, Difficulty, Problem, SolutionOrigin, TestCase, TestOrigin};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("dataset path `{0}` does not exist")]
    Missing(PathBuf),
    #[error("i/o error at `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("problem `{problem}`: malformed `{field}`: {message}")]
    Malformed {
        problem: String,
        field: String,
        message: String,
    },
    #[error("duplicate problem id `{0}`")]
    DuplicateId(String),
    #[error("problem `{0}` has no ground-truth solution")]
    MissingGroundTruth(String),
    #[error("refusing to overwrite `{0}`: not empty and not a dataset directory")]
    RefuseOverwrite(PathBuf),
}

type Result<T> = std::result::Result<T, DatasetError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn malformed(problem: &str, field: &str, message: impl ToString) -> DatasetError {
    DatasetError::Malformed {
        problem: problem.to_string(),
        field: field.to_string(),
        message: message.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetFormat {
    Directory,
    Jsonl,
}

impl DatasetFormat {
    /// `.jsonl` files are JSONL, anything else is the directory layout.
    pub fn detect(path: &Path) -> Self {
        if path.extension().is_some_and(|e| e == "jsonl") || path.is_file() {
            DatasetFormat::Jsonl
        } else {
            DatasetFormat::Directory
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoadMode {
    /// Every problem must carry a ground-truth solution.
    Strict,
    /// Problems with an empty solution list are skipped; problems whose
    /// solutions are all augmented are kept (augmentation will skip them).
    Lenient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoadOptions {
    pub format: Option<DatasetFormat>,
    pub mode: LoadMode,
    /// Length limit used to fill in and check `train_eligible` flags.
    pub train_len_threshold: usize,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            format: None,
            mode: LoadMode::Strict,
            train_len_threshold: 1024,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LoadReport {
    /// Problems dropped in lenient mode because they had no solutions.
    pub skipped: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SolutionRecord {
    source: String,
    origin: SolutionOrigin,
    verified: bool,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct InputOutputRecord {
    inputs: Vec<String>,
    outputs: Vec<String>,
    origins: Vec<TestOrigin>,
    train_eligible: Vec<bool>,
}

#[derive(Debug, Serialize, Deserialize)]
struct MetadataRecord {
    id: String,
    difficulty: Difficulty,
}

#[derive(Serialize)]
struct JsonlRecord<'a> {
    id: &'a str,
    difficulty: Difficulty,
    question: &'a str,
    solutions: Vec<SolutionRecord>,
    input_output: InputOutputRecord,
}

fn solution_records(p: &Problem) -> Vec<SolutionRecord> {
    p.solutions
        .iter()
        .map(|s| SolutionRecord {
            source: s.source().to_string(),
            origin: s.origin,
            verified: s.verified,
        })
        .collect()
}

fn io_record(p: &Problem) -> InputOutputRecord {
    InputOutputRecord {
        inputs: p.tests.iter().map(|t| t.input.clone()).collect(),
        outputs: p.tests.iter().map(|t| t.output.clone()).collect(),
        origins: p.tests.iter().map(|t| t.origin).collect(),
        train_eligible: p.tests.iter().map(|t| t.train_eligible).collect(),
    }
}

fn parse_difficulty(id: &str, v: Option<&Value>) -> Result<Difficulty> {
    let s = v
        .and_then(Value::as_str)
        .ok_or_else(|| malformed(id, "difficulty", "missing or not a string"))?;
    s.parse().map_err(|e| malformed(id, "difficulty", e))
}

/// Accepts either `[{"source", "origin", "verified"}]` or a bare array of
/// source strings (treated as verified ground truth).
fn parse_solutions(id: &str, v: &Value) -> Result<Vec<CodeSolution>> {
    let items = v
        .as_array()
        .ok_or_else(|| malformed(id, "solutions", "expected an array"))?;
    items
        .iter()
        .enumerate()
        .map(|(i, item)| match item {
            Value::String(s) => Ok(CodeSolution::ground_truth(s.clone())),
            other => {
                let r: SolutionRecord = serde_json::from_value(other.clone())
                    .map_err(|e| malformed(id, &format!("solutions[{i}]"), e))?;
                Ok(CodeSolution::new(r.source, r.origin, r.verified))
            }
        })
        .collect()
}

fn string_list(id: &str, field: &str, v: Option<&Value>) -> Result<Option<Vec<String>>> {
    let Some(v) = v else { return Ok(None) };
    let arr = v
        .as_array()
        .ok_or_else(|| malformed(id, field, "expected an array"))?;
    arr.iter()
        .enumerate()
        .map(|(i, x)| {
            x.as_str()
                .map(str::to_string)
                .ok_or_else(|| malformed(id, &format!("{field}[{i}]"), "expected a string"))
        })
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

fn parse_tests(id: &str, v: Option<&Value>, threshold: usize) -> Result<Vec<TestCase>> {
    let Some(v) = v else { return Ok(Vec::new()) };
    if v.is_null() {
        return Ok(Vec::new());
    }
    let obj = v
        .as_object()
        .ok_or_else(|| malformed(id, "input_output", "expected an object"))?;
    let inputs = string_list(id, "inputs", obj.get("inputs"))?.unwrap_or_default();
    let outputs = string_list(id, "outputs", obj.get("outputs"))?.unwrap_or_default();
    if inputs.len() != outputs.len() {
        return Err(malformed(
            id,
            "outputs",
            format!("{} inputs but {} outputs", inputs.len(), outputs.len()),
        ));
    }
    let origins: Option<Vec<TestOrigin>> = match obj.get("origins") {
        None | Some(Value::Null) => None,
        Some(o) => Some(serde_json::from_value(o.clone()).map_err(|e| malformed(id, "origins", e))?),
    };
    let eligible: Option<Vec<bool>> = match obj.get("train_eligible") {
        None | Some(Value::Null) => None,
        Some(o) => Some(serde_json::from_value(o.clone()).map_err(|e| malformed(id, "train_eligible", e))?),
    };
    for (field, len) in [
        ("origins", origins.as_ref().map(Vec::len)),
        ("train_eligible", eligible.as_ref().map(Vec::len)),
    ] {
        if let Some(len) = len {
            if len != inputs.len() {
                return Err(malformed(id, field, format!("length {len}, expected {}", inputs.len())));
            }
        }
    }
    let mut tests = Vec::with_capacity(inputs.len());
    for (j, (input, output)) in inputs.into_iter().zip(outputs).enumerate() {
        let origin = origins.as_ref().map_or(TestOrigin::Seed, |o| o[j]);
        let mut t = TestCase {
            input,
            output,
            origin,
            train_eligible: false,
        };
        t.train_eligible = match &eligible {
            Some(e) => {
                if e[j] && !t.fits(threshold) {
                    return Err(malformed(
                        id,
                        &format!("train_eligible[{j}]"),
                        format!("test exceeds the {threshold}-character training threshold"),
                    ));
                }
                e[j]
            }
            None => t.fits(threshold),
        };
        if matches!(origin, TestOrigin::Augmented(_)) && t.output.is_empty() {
            return Err(malformed(id, &format!("outputs[{j}]"), "augmented test with empty output"));
        }
        tests.push(t);
    }
    Ok(tests)
}

fn build_problem(
    id: String,
    difficulty: Difficulty,
    description: String,
    solutions: &Value,
    io: Option<&Value>,
    threshold: usize,
) -> Result<Problem> {
    let solutions = parse_solutions(&id, solutions)?;
    let tests = parse_tests(&id, io, threshold)?;
    let mut seen: HashSet<&str> = solutions
        .iter()
        .filter(|s| s.is_ground_truth())
        .map(|s| s.normalized())
        .collect();
    for s in solutions.iter().filter(|s| !s.is_ground_truth()) {
        if !seen.insert(s.normalized()) {
            return Err(malformed(&id, "solutions", "duplicate normalized solution"));
        }
    }
    Ok(Problem {
        id,
        description,
        difficulty,
        solutions,
        tests,
    })
}

fn read_json(path: &Path, id: &str, field: &str) -> Result<Option<Value>> {
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text)
        .map(Some)
        .map_err(|e| malformed(id, field, e))
}

fn problem_dirs(root: &Path) -> Result<Vec<PathBuf>> {
    let mut dirs: Vec<PathBuf> = fs::read_dir(root)
        .map_err(io_err(root))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    // numeric names sort numerically, the rest lexicographically after them
    dirs.sort_by_key(|p| {
        let name = p.file_name().unwrap_or_default().to_string_lossy().into_owned();
        (name.parse::<u64>().map_err(|_| ()), name)
    });
    Ok(dirs)
}

fn load_directory(root: &Path, opts: &LoadOptions) -> Result<Vec<Problem>> {
    let mut problems = Vec::new();
    for dir in problem_dirs(root)? {
        let dir_name = dir.file_name().unwrap_or_default().to_string_lossy().into_owned();
        let meta = read_json(&dir.join("metadata.json"), &dir_name, "metadata.json")?;
        let id = meta
            .as_ref()
            .and_then(|m| m.get("id"))
            .and_then(Value::as_str)
            .map(str::to_string)
            .unwrap_or(dir_name);
        let difficulty = parse_difficulty(&id, meta.as_ref().and_then(|m| m.get("difficulty")))?;
        let qpath = dir.join("question.txt");
        let description = fs::read_to_string(&qpath).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => malformed(&id, "question.txt", "missing"),
            _ => DatasetError::Io { path: qpath.clone(), source: e },
        })?;
        let solutions = read_json(&dir.join("solutions.json"), &id, "solutions.json")?
            .unwrap_or(Value::Array(vec![]));
        let io = read_json(&dir.join("input_output.json"), &id, "input_output.json")?;
        problems.push(build_problem(id, difficulty, description, &solutions, io.as_ref(), opts.train_len_threshold)?);
    }
    Ok(problems)
}

fn load_jsonl(path: &Path, opts: &LoadOptions) -> Result<Vec<Problem>> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut problems = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let fallback = format!("line {}", lineno + 1);
        let v: Value = serde_json::from_str(&line).map_err(|e| malformed(&fallback, "record", e))?;
        let id = v
            .get("id")
            .and_then(Value::as_str)
            .ok_or_else(|| malformed(&fallback, "id", "missing or not a string"))?
            .to_string();
        let difficulty = parse_difficulty(&id, v.get("difficulty"))?;
        let description = v
            .get("question")
            .and_then(Value::as_str)
            .ok_or_else(|| malformed(&id, "question", "missing or not a string"))?
            .to_string();
        let empty = Value::Array(vec![]);
        let solutions = v.get("solutions").unwrap_or(&empty);
        problems.push(build_problem(id, difficulty, description, solutions, v.get("input_output"), opts.train_len_threshold)?);
    }
    Ok(problems)
}

/// Loads a dataset and reports problems dropped in lenient mode.
pub fn load_dataset_reported(path: &Path, opts: &LoadOptions) -> Result<(Dataset, LoadReport)> {
    if !path.exists() {
        return Err(DatasetError::Missing(path.to_path_buf()));
    }
    let format = opts.format.unwrap_or_else(|| DatasetFormat::detect(path));
    let raw = match format {
        DatasetFormat::Directory => load_directory(path, opts)?,
        DatasetFormat::Jsonl => load_jsonl(path, opts)?,
    };
    let mut ids = HashSet::new();
    let mut report = LoadReport::default();
    let mut problems = Vec::with_capacity(raw.len());
    for p in raw {
        if !ids.insert(p.id.clone()) {
            return Err(DatasetError::DuplicateId(p.id));
        }
        match opts.mode {
            LoadMode::Strict if p.ground_truth().is_none() => {
                return Err(DatasetError::MissingGroundTruth(p.id));
            }
            LoadMode::Lenient if p.solutions.is_empty() => {
                log::warn!("skipping problem `{}`: no solutions", p.id);
                report.skipped.push(p.id);
            }
            _ => problems.push(p),
        }
    }
    Ok((Dataset::new(problems), report))
}

pub fn load_dataset(path: &Path, opts: &LoadOptions) -> Result<Dataset> {
    load_dataset_reported(path, opts).map(|(d, _)| d)
}

fn to_pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable record");
    s.push('\n');
    s
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(io_err(path))
}

fn is_replaceable_dir(path: &Path) -> Result<bool> {
    for entry in fs::read_dir(path).map_err(io_err(path))? {
        let p = entry.map_err(io_err(path))?.path();
        if !(p.is_dir() && p.join("metadata.json").is_file()) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn save_directory(dataset: &Dataset, root: &Path) -> Result<()> {
    if root.exists() {
        if !root.is_dir() || !is_replaceable_dir(root)? {
            return Err(DatasetError::RefuseOverwrite(root.to_path_buf()));
        }
        fs::remove_dir_all(root).map_err(io_err(root))?;
    }
    fs::create_dir_all(root).map_err(io_err(root))?;
    let width = dataset.len().saturating_sub(1).to_string().len().max(5);
    for (i, p) in dataset.problems.iter().enumerate() {
        let dir = root.join(format!("{i:0width$}"));
        fs::create_dir(&dir).map_err(io_err(&dir))?;
        write_file(&dir.join("question.txt"), &p.description)?;
        write_file(&dir.join("solutions.json"), &to_pretty(&solution_records(p)))?;
        write_file(&dir.join("input_output.json"), &to_pretty(&io_record(p)))?;
        write_file(
            &dir.join("metadata.json"),
            &to_pretty(&MetadataRecord {
                id: p.id.clone(),
                difficulty: p.difficulty,
            }),
        )?;
    }
    Ok(())
}

fn save_jsonl(dataset: &Dataset, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = std::io::BufWriter::new(file);
    for p in &dataset.problems {
        let rec = JsonlRecord {
            id: &p.id,
            difficulty: p.difficulty,
            question: &p.description,
            solutions: solution_records(p),
            input_output: io_record(p),
        };
        serde_json::to_writer(&mut w, &rec).map_err(|e| io_err(path)(e.into()))?;
        w.write_all(b"\n").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Writes `dataset` in the given layout. An existing directory target is
/// replaced only if it already holds a dataset.
pub fn save_dataset(dataset: &Dataset, path: &Path, format: DatasetFormat) -> Result<()> {
    match format {
        DatasetFormat::Directory => save_directory(dataset, path),
        DatasetFormat::Jsonl => save_jsonl(dataset, path),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Dataset {
        Dataset::new(vec![
            Problem {
                id: "two-sum".into(),
                description: "Add two numbers.\n".into(),
                difficulty: Difficulty::Introductory,
                solutions: vec![
                    CodeSolution::ground_truth("a,b=map(int,input().split())\nprint(a+b)\n"),
                    CodeSolution::new("print(sum(map(int,input().split())))\n", SolutionOrigin::Augmented(2), true),
                ],
                tests: vec![
                    TestCase::seed("1 2\n", "3\n"),
                    TestCase {
                        input: "5 5\n".into(),
                        output: "10\n".into(),
                        origin: TestOrigin::Augmented(2),
                        train_eligible: false,
                    },
                ],
            },
            Problem {
                id: "echo".into(),
                description: "Echo.".into(),
                difficulty: Difficulty::Competition,
                solutions: vec![CodeSolution::ground_truth("print(input())")],
                tests: vec![],
            },
        ])
    }

    #[test]
    fn directory_round_trip_keeps_provenance() {
        let tmp = tempfile::tempdir().unwrap();
        let root = tmp.path().join("ds");
        let d = sample();
        save_dataset(&d, &root, DatasetFormat::Directory).unwrap();
        let back = load_dataset(&root, &LoadOptions::default()).unwrap();
        assert_eq!(back, d);
        assert_eq!(back.problems[0].tests[1].origin, TestOrigin::Augmented(2));
    }

    #[test]
    fn jsonl_round_trip() {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("ds.jsonl");
        let d = sample();
        save_dataset(&d, &path, DatasetFormat::Jsonl).unwrap();
        assert_eq!(load_dataset(&path, &LoadOptions::default()).unwrap(), d);
    }

    #[test]
    fn empty_dataset_round_trips() {
        let tmp = tempfile::tempdir().unwrap();
        let root = tmp.path().join("empty");
        save_dataset(&Dataset::default(), &root, DatasetFormat::Directory).unwrap();
        assert!(root.is_dir());
        assert!(load_dataset(&root, &LoadOptions::default()).unwrap().is_empty());
        let jl = tmp.path().join("empty.jsonl");
        save_dataset(&Dataset::default(), &jl, DatasetFormat::Jsonl).unwrap();
        assert!(load_dataset(&jl, &LoadOptions::default()).unwrap().is_empty());
    }

    #[test]
    fn missing_path() {
        let err = load_dataset(Path::new("/nonexistent/ds"), &LoadOptions::default()).unwrap_err();
        assert!(matches!(err, DatasetError::Missing(_)));
    }

    #[test]
    fn strict_rejects_empty_solutions_lenient_skips() {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("d.jsonl");
        fs::write(
            &path,
            "{\"id\":\"ok\",\"difficulty\":\"interview\",\"question\":\"q\",\"solutions\":[\"print(1)\"]}\n\
             {\"id\":\"bare\",\"difficulty\":\"interview\",\"question\":\"q\",\"solutions\":[]}\n",
        )
        .unwrap();
        let err = load_dataset(&path, &LoadOptions::default()).unwrap_err();
        assert!(matches!(&err, DatasetError::MissingGroundTruth(id) if id == "bare"));
        assert!(err.to_string().contains("bare"));
        let opts = LoadOptions {
            mode: LoadMode::Lenient,
            ..LoadOptions::default()
        };
        let (d, report) = load_dataset_reported(&path, &opts).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(report.skipped, vec!["bare".to_string()]);
    }

    #[test]
    fn duplicate_ids() {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("d.jsonl");
        let line = "{\"id\":\"x\",\"difficulty\":\"interview\",\"question\":\"q\",\"solutions\":[\"a\"]}\n";
        fs::write(&path, format!("{line}{line}")).unwrap();
        assert!(matches!(
            load_dataset(&path, &LoadOptions::default()),
            Err(DatasetError::DuplicateId(id)) if id == "x"
        ));
    }

    #[test]
    fn malformed_names_problem_and_field() {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("d.jsonl");
        fs::write(
            &path,
            "{\"id\":\"p7\",\"difficulty\":\"interview\",\"question\":\"q\",\"solutions\":[\"a\"],\
             \"input_output\":{\"inputs\":[\"1\"],\"outputs\":[]}}\n",
        )
        .unwrap();
        match load_dataset(&path, &LoadOptions::default()).unwrap_err() {
            DatasetError::Malformed { problem, field, .. } => {
                assert_eq!(problem, "p7");
                assert_eq!(field, "outputs");
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn apps_style_directory_without_ids() {
        let tmp = tempfile::tempdir().unwrap();
        for (name, n_tests) in [("0000", 10), ("0001", 0), ("0002", 0)] {
            let dir = tmp.path().join(name);
            fs::create_dir(&dir).unwrap();
            fs::write(dir.join("question.txt"), "q").unwrap();
            fs::write(dir.join("solutions.json"), "[\"print(input())\"]").unwrap();
            fs::write(dir.join("metadata.json"), "{\"difficulty\": \"introductory\", \"url\": \"x\"}").unwrap();
            if n_tests > 0 {
                let inputs: Vec<String> = (0..n_tests).map(|i| format!("{i}\n")).collect();
                let io = serde_json::json!({"inputs": inputs, "outputs": inputs});
                fs::write(dir.join("input_output.json"), io.to_string()).unwrap();
            }
        }
        let d = load_dataset(tmp.path(), &LoadOptions::default()).unwrap();
        assert_eq!(d.problems[0].id, "0000");
        assert!(d.problems[0].tests.iter().all(|t| t.train_eligible && t.origin == TestOrigin::Seed));
        let stats = crate::model::compute_stats(&d);
        assert!((stats.tests_per_problem - 10.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn refuses_to_clobber_foreign_directory() {
        let tmp = tempfile::tempdir().unwrap();
        fs::write(tmp.path().join("notes.txt"), "keep me").unwrap();
        let err = save_dataset(&sample(), tmp.path(), DatasetFormat::Directory).unwrap_err();
        assert!(matches!(err, DatasetError::RefuseOverwrite(_)));
        assert!(tmp.path().join("notes.txt").exists());
    }

    #[test]
    fn eligibility_flag_checked_against_threshold() {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("d.jsonl");
        fs::write(
            &path,
            "{\"id\":\"p\",\"difficulty\":\"interview\",\"question\":\"q\",\"solutions\":[\"a\"],\
             \"input_output\":{\"inputs\":[\"123456\"],\"outputs\":[\"1\"],\"train_eligible\":[true]}}\n",
        )
        .unwrap();
        let opts = LoadOptions {
            train_len_threshold: 4,
            ..LoadOptions::default()
        };
        assert!(matches!(load_dataset(&path, &opts), Err(DatasetError::Malformed { .. })));
    }
}
