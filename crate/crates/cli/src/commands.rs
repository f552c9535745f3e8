use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use codeaug::augmentation::{
    augment_code_iteration, augment_tests_iteration, export_training_corpus, replay_dir, run_pipeline,
    write_training_jsonl, Checkpoints,
};
use codeaug::config::{ConfigError, GeneratorKind, RunConfig};
use codeaug::generators::{GenerationError, Generator, RemoteGenerator, ReplayGenerator, Task};
use codeaug::metrics::{comparison_report, evaluate_all, metrics_report, ComparisonOptions, ProblemEval, ReportOptions};
use codeaug::model::{
    compute_stats, load_dataset_reported, save_dataset, Dataset, DatasetError, LoadMode, LoadOptions,
    StatsTable,
};
use codeaug::report::{table_string, write_csv, write_json};
use codeaug::sandbox::{CodeCandidate, Sandbox, SandboxError, TestCandidate};
use codeaug::scoring::{rank as rank_scores, top_n as select_top, Ranked, ScoreVector, Scorer};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::{ConfigArgs, Format, ScorerArg, Stage, TaskArg};

#[derive(Debug)]
pub enum CliError {
    /// Bad config, arguments or input shape: exit 1.
    Validation(String),
    /// I/O or execution failure: exit 2.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::Io { .. } | DatasetError::Missing(..) => CliError::Runtime(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<SandboxError> for CliError {
    fn from(e: SandboxError) -> Self {
        match e {
            SandboxError::InvalidRunner(_) | SandboxError::InvalidLimits(_) => CliError::Validation(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<GenerationError> for CliError {
    fn from(e: GenerationError) -> Self {
        match e {
            GenerationError::MissingToken(_) | GenerationError::InvalidRequest { .. } => {
                CliError::Validation(e.to_string())
            }
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Runtime(format!("{}: {e}", path.display()))
}

fn invalid(e: impl fmt::Display) -> CliError {
    CliError::Validation(e.to_string())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn load_config(args: &ConfigArgs) -> Result<RunConfig> {
    Ok(RunConfig::load(args.config.as_deref(), &args.overrides)?)
}

fn sandbox_for(cfg: &RunConfig) -> Result<Sandbox> {
    Ok(Sandbox::new(cfg.sandbox.clone())?)
}

fn load_input(cfg: &RunConfig) -> Result<(Dataset, codeaug::model::LoadReport)> {
    if cfg.dataset.path.as_os_str().is_empty() {
        return Err(invalid("dataset.path is not set"));
    }
    Ok(load_dataset_reported(&cfg.dataset.path, &cfg.load_options())?)
}

fn stats_table(rows: &[(&str, &Dataset)]) -> String {
    let rows = rows.iter().map(|(n, d)| (*n, compute_stats(d))).collect();
    StatsTable { rows }.to_string()
}

pub fn stats(paths: &[PathBuf], lenient: bool, json_out: Option<&Path>) -> Result<()> {
    let opts = LoadOptions {
        mode: if lenient { LoadMode::Lenient } else { LoadMode::Strict },
        ..LoadOptions::default()
    };
    let mut loaded = Vec::new();
    for p in paths {
        let (d, report) = load_dataset_reported(p, &opts)?;
        if !report.skipped.is_empty() {
            eprintln!("warning: {}: skipped {} problem(s) without solutions", p.display(), report.skipped.len());
        }
        if d.is_empty() {
            eprintln!("warning: {}: dataset has no problems", p.display());
        }
        let name = p
            .file_stem()
            .map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned());
        loaded.push((name, d));
    }
    let rows: Vec<(&str, &Dataset)> = loaded.iter().map(|(n, d)| (n.as_str(), d)).collect();
    print!("{}", stats_table(&rows));
    if let Some(out) = json_out {
        let value: Vec<_> = loaded
            .iter()
            .map(|(n, d)| json!({"dataset": n, "stats": compute_stats(d)}))
            .collect();
        write_json(out, &value).map_err(io_err(out))?;
    }
    Ok(())
}

type Provider = Box<dyn Fn(Task, u32) -> std::result::Result<Box<dyn Generator>, GenerationError>>;

fn generator_provider(cfg: &RunConfig) -> Result<Provider> {
    match cfg.generator.kind {
        GeneratorKind::Replay => {
            let root = cfg
                .generator
                .replay_dir
                .clone()
                .ok_or_else(|| invalid("generator.replay_dir is required for the replay generator"))?;
            Ok(Box::new(move |task, i| {
                let g: Box<dyn Generator> = Box::new(ReplayGenerator::new(replay_dir(&root, task, i)));
                Ok(g)
            }))
        }
        GeneratorKind::Remote => {
            let remote = Arc::new(RemoteGenerator::new(cfg.generator.remote.clone())?);
            Ok(Box::new(move |_, _| {
                let g: Box<dyn Generator> = Box::new(remote.clone());
                Ok(g)
            }))
        }
    }
}

fn check_not_input(cfg: &RunConfig, out: &Path) -> Result<()> {
    let same = match (fs::canonicalize(&cfg.dataset.path), fs::canonicalize(out)) {
        (Ok(a), Ok(b)) => a == b,
        _ => false,
    };
    if same {
        return Err(invalid(format!("refusing to overwrite the input dataset `{}`", out.display())));
    }
    Ok(())
}

pub fn augment(stage: Stage, args: &ConfigArgs, iteration: u32) -> Result<()> {
    let cfg = load_config(args)?;
    cfg.validate()?;
    if iteration == 0 {
        return Err(invalid("--iteration must be at least 1"));
    }
    let provider = generator_provider(&cfg)?;
    let sandbox = sandbox_for(&cfg)?;
    let (seed, load) = load_input(&cfg)?;
    if !load.skipped.is_empty() {
        eprintln!("warning: skipped {} problem(s) without solutions", load.skipped.len());
    }
    let ck = Checkpoints {
        dir: cfg.output_dir.clone(),
        format: cfg.checkpoint_format,
    };
    fs::create_dir_all(&ck.dir).map_err(io_err(&ck.dir))?;

    let (result, report_name, report) = match stage {
        Stage::Tests | Stage::Code => {
            let (task, name) = match stage {
                Stage::Tests => (Task::TestGen, format!("d_test_iter{iteration}")),
                _ => (Task::CodeGen, format!("d_code_iter{iteration}")),
            };
            let out = ck.path(&name);
            check_not_input(&cfg, &out)?;
            let generator = provider(task, iteration)?;
            let (d, report) = if task == Task::TestGen {
                let (d, r) = augment_tests_iteration(&seed, &generator, &sandbox, &cfg.augmentation, iteration);
                (d, serde_json::to_value(r))
            } else {
                let (d, r) = augment_code_iteration(&seed, &generator, &sandbox, &cfg.augmentation, iteration);
                (d, serde_json::to_value(r))
            };
            save_dataset(&d, &out, ck.format)?;
            (d, format!("report_{name}.json"), report)
        }
        Stage::Pipeline => {
            check_not_input(&cfg, &ck.path("d_final"))?;
            let outcome = run_pipeline(&seed, &provider, &sandbox, &cfg.augmentation, Some(&ck)).map_err(|e| match e {
                codeaug::augmentation::AugmentationError::InvalidConfig(m) => CliError::Validation(m),
                codeaug::augmentation::AugmentationError::Dataset(d) => d.into(),
                codeaug::augmentation::AugmentationError::Generation(g) => g.into(),
            })?;
            (outcome.dataset, "report.json".to_string(), serde_json::to_value(outcome.report))
        }
    };
    let report = report.map_err(|e| CliError::Runtime(e.to_string()))?;
    let path = cfg.output_dir.join(&report_name);
    let full = json!({
        "config": cfg,
        "skipped_on_load": load.skipped,
        "report": report,
    });
    write_json(&path, &full).map_err(io_err(&path))?;
    print!("{}", stats_table(&[("seed", &seed), ("augmented", &result)]));
    println!("report written to {}", path.display());
    Ok(())
}

#[derive(Serialize)]
struct StatusSidecar<'a> {
    code_ids: &'a [String],
    test_ids: &'a [String],
    statuses: &'a [Vec<codeaug::sandbox::ExecStatus>],
}

pub fn exec_matrix(codes: &Path, tests: &Path, out: &Path, args: &ConfigArgs) -> Result<()> {
    let cfg = load_config(args)?;
    let sandbox = sandbox_for(&cfg)?;
    let codes: Vec<CodeCandidate> = read_json(codes)?;
    let tests: Vec<TestCandidate> = read_json(tests)?;
    let run = sandbox.build_pass_matrix(&codes, &tests).map_err(|e| match e {
        SandboxError::Empty(_) | SandboxError::Matrix(_) => invalid(e),
        e => e.into(),
    })?;
    write_json(out, &run.matrix).map_err(io_err(out))?;
    let sidecar = out.with_extension("status.json");
    let status = StatusSidecar {
        code_ids: run.matrix.code_ids(),
        test_ids: run.matrix.test_ids(),
        statuses: &run.statuses,
    };
    write_json(&sidecar, &status).map_err(io_err(&sidecar))?;
    let passing: usize = run.matrix.to_rows().iter().flatten().map(|&b| b as usize).sum();
    println!(
        "{} codes x {} tests, {passing} passing cells; wrote {} and {}",
        run.matrix.num_codes(),
        run.matrix.num_tests(),
        out.display(),
        sidecar.display()
    );
    Ok(())
}

fn scorer_of(s: ScorerArg) -> Scorer {
    match s {
        ScorerArg::Dual => Scorer::Dual,
        ScorerArg::Codet => Scorer::Codet,
    }
}

#[derive(Serialize)]
struct ScoreRow<'a> {
    id: &'a str,
    score: f64,
    rank: usize,
}

/// Rows in id order with each item's rank.
fn score_rows(v: &ScoreVector) -> Vec<ScoreRow<'_>> {
    let mut ranks = vec![0; v.values.len()];
    for r in v.ranked() {
        ranks[r.index] = r.rank;
    }
    v.ids
        .iter()
        .zip(&v.values)
        .zip(ranks)
        .map(|((id, &score), rank)| ScoreRow { id, score, rank })
        .collect()
}

fn ranking_table(ranked: &[Ranked], selected: usize) -> String {
    let rows: Vec<Vec<String>> = ranked
        .iter()
        .enumerate()
        .map(|(i, r)| {
            vec![
                r.rank.to_string(),
                r.id.clone(),
                format!("{:.6}", r.score),
                if i < selected { "*".into() } else { String::new() },
            ]
        })
        .collect();
    table_string(&["Rank", "Id", "Score", "Top"], &rows)
}

pub fn score(
    matrix: &Path,
    scorer: ScorerArg,
    top_n: usize,
    out_dir: &Path,
    format: Format,
    args: &ConfigArgs,
) -> Result<()> {
    let cfg = load_config(args)?;
    cfg.scoring.validate().map_err(invalid)?;
    if top_n == 0 {
        return Err(invalid("--top-n must be at least 1"));
    }
    let m: codeaug::PassMatrix = read_json(matrix)?;
    let scorer = scorer_of(scorer);
    let (code, test) = scorer.score(&m, &cfg.scoring).map_err(invalid)?;
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    for (name, v) in [("code_scores", &code), ("test_scores", &test)] {
        let rows = score_rows(v);
        let path = match format {
            Format::Csv => out_dir.join(format!("{name}.csv")),
            Format::Json => out_dir.join(format!("{name}.json")),
        };
        match format {
            Format::Csv => write_csv(&path, &rows),
            Format::Json => write_json(&path, &rows),
        }
        .map_err(io_err(&path))?;
    }
    let code_top = select_top(&code.values, top_n);
    let test_top = select_top(&test.values, top_n);
    let ids = |v: &ScoreVector, sel: &[usize]| sel.iter().map(|&i| v.ids[i].clone()).collect::<Vec<_>>();
    let selection = json!({
        "scorer": scorer.label(),
        "n": top_n,
        "scoring": cfg.scoring,
        "code": ids(&code, &code_top),
        "test": ids(&test, &test_top),
    });
    let path = out_dir.join("top_n.json");
    write_json(&path, &selection).map_err(io_err(&path))?;
    println!("{} code ranking", scorer.label());
    print!("{}", ranking_table(&code.ranked(), code_top.len()));
    println!("\n{} test ranking", scorer.label());
    print!("{}", ranking_table(&test.ranked(), test_top.len()));
    Ok(())
}

#[derive(Deserialize)]
struct ScoreRecord {
    id: String,
    score: f64,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ScoreFile {
    Vector { ids: Vec<String>, values: Vec<f64> },
    Rows(Vec<ScoreRecord>),
}

fn read_scores(path: &Path) -> Result<(Vec<String>, Vec<f64>)> {
    if path.extension().is_some_and(|e| e == "csv") {
        let mut r = csv::Reader::from_path(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
        let mut ids = Vec::new();
        let mut values = Vec::new();
        for row in r.deserialize::<ScoreRecord>() {
            let row = row.map_err(|e| invalid(format!("{}: {e}", path.display())))?;
            ids.push(row.id);
            values.push(row.score);
        }
        return Ok((ids, values));
    }
    Ok(match read_json::<ScoreFile>(path)? {
        ScoreFile::Vector { ids, values } => (ids, values),
        ScoreFile::Rows(rows) => rows.into_iter().map(|r| (r.id, r.score)).unzip(),
    })
}

pub fn rank(scores: &Path, top_n: usize, out: Option<&Path>) -> Result<()> {
    let (ids, values) = read_scores(scores)?;
    if values.iter().any(|v| v.is_nan()) {
        return Err(invalid("scores must not be NaN"));
    }
    let ranked = rank_scores(&values, &ids).map_err(invalid)?;
    let selected = select_top(&values, top_n);
    print!("{}", ranking_table(&ranked, selected.len()));
    if let Some(out) = out {
        let top: Vec<&str> = selected.iter().map(|&i| ids[i].as_str()).collect();
        write_json(out, &json!({"ranking": ranked, "top_n": top_n, "selected": top})).map_err(io_err(out))?;
    }
    Ok(())
}

fn read_evals(path: &Path) -> Result<Vec<ProblemEval>> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let bad = |e: serde_json::Error| invalid(format!("{}: {e}", path.display()));
    if text.trim_start().starts_with('[') {
        return serde_json::from_str(&text).map_err(bad);
    }
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(bad))
        .collect()
}

#[allow(clippy::too_many_arguments)]
pub fn metrics(
    evals: &Path,
    scorer: Option<ScorerArg>,
    ks: Vec<usize>,
    n: usize,
    k: usize,
    compare: bool,
    json_out: Option<&Path>,
    args: &ConfigArgs,
) -> Result<()> {
    let cfg = load_config(args)?;
    cfg.scoring.validate().map_err(invalid)?;
    let mut evals = read_evals(evals)?;
    if evals.is_empty() {
        return Err(invalid("no problems in the evaluation input"));
    }
    if let Some(s) = scorer {
        evals = evaluate_all(&evals, scorer_of(s), &cfg.scoring).map_err(invalid)?;
    }
    let options = ReportOptions {
        ks,
        n,
        k,
        scoring: cfg.scoring,
    };
    let report = metrics_report(&evals, &options).map_err(invalid)?;
    print!("{report}");
    let comparison = if compare {
        let c = comparison_report(&evals, ComparisonOptions::default(), &cfg.scoring).map_err(invalid)?;
        print!("\n{c}");
        Some(c)
    } else {
        None
    };
    if let Some(out) = json_out {
        write_json(out, &json!({"metrics": report, "comparison": comparison})).map_err(io_err(out))?;
    }
    Ok(())
}

pub fn export_training(task: TaskArg, out: &Path, iteration: Option<u32>, args: &ConfigArgs) -> Result<()> {
    let cfg = load_config(args)?;
    cfg.augmentation.validate().map_err(invalid)?;
    let (dataset, _) = load_input(&cfg)?;
    let task = match task {
        TaskArg::TestGen => Task::TestGen,
        TaskArg::CodeGen => Task::CodeGen,
    };
    let outcome = export_training_corpus(&dataset, task, &cfg.augmentation, cfg.seed, iteration);
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    write_training_jsonl(out, &outcome.examples).map_err(io_err(out))?;
    if !outcome.skipped.is_empty() {
        eprintln!("warning: {} problem(s) had nothing eligible to export", outcome.skipped.len());
    }
    println!("{} {} examples written to {}", outcome.examples.len(), task.as_str(), out.display());
    Ok(())
}
