mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Augment program-synthesis datasets with execution feedback and rank
/// generated code and tests.
#[derive(Parser, Debug)]
#[command(name = "codeaug", version)]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct ConfigArgs {
    /// TOML run config; defaults are used when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override a config key, e.g. `--set augmentation.test_iterations=1`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Problem / solution / test counts per dataset.
    Stats {
        #[arg(required = true)]
        datasets: Vec<PathBuf>,
        /// Keep problems without ground truth and drop ones with no solutions.
        #[arg(long)]
        lenient: bool,
        /// Also write the statistics as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Run test augmentation, code augmentation, or the full pipeline.
    Augment {
        #[arg(value_enum)]
        stage: Stage,
        #[command(flatten)]
        config: ConfigArgs,
        /// Iteration index for a single `tests` or `code` round.
        #[arg(long, default_value_t = 1)]
        iteration: u32,
    },
    /// Execute code candidates against tests and write the pass matrix.
    ExecMatrix {
        /// JSON array of `{id, source}`.
        #[arg(long)]
        codes: PathBuf,
        /// JSON array of `{id, input, output}`.
        #[arg(long)]
        tests: PathBuf,
        /// Matrix output; a `.status.json` sidecar is written next to it.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Score a pass matrix and write code/test scores and rankings.
    Score {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, value_enum, default_value_t = ScorerArg::Dual)]
        scorer: ScorerArg,
        /// Tie-inclusive selection size.
        #[arg(long, default_value_t = 1)]
        top_n: usize,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Rank a score file (CSV `id,score` or JSON `{ids, values}`).
    Rank {
        scores: PathBuf,
        #[arg(long, default_value_t = 1)]
        top_n: usize,
        /// Write the ranking as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// pass@k, n@k, Pr@n and test pass statistics per difficulty.
    Metrics {
        /// JSON array (or JSONL) of per-problem judgements.
        #[arg(long)]
        evals: PathBuf,
        /// Recompute scores from each problem's matrix.
        #[arg(long, value_enum)]
        scorer: Option<ScorerArg>,
        #[arg(long, value_delimiter = ',', default_value = "1,10")]
        ks: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Add the dual-critic vs consensus-set comparison table.
        #[arg(long)]
        compare: bool,
        #[arg(long)]
        json: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Export a fine-tuning corpus as JSONL.
    ExportTraining {
        #[arg(long, value_enum)]
        task: TaskArg,
        #[arg(long)]
        out: PathBuf,
        /// Treat this as the latest iteration when replay is off.
        #[arg(long)]
        iteration: Option<u32>,
        #[command(flatten)]
        config: ConfigArgs,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Tests,
    Code,
    Pipeline,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScorerArg {
    Dual,
    Codet,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskArg {
    #[value(name = "test_gen")]
    TestGen,
    #[value(name = "code_gen")]
    CodeGen,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match cli.command {
        Command::Stats { datasets, lenient, json } => commands::stats(&datasets, lenient, json.as_deref()),
        Command::Augment { stage, config, iteration } => commands::augment(stage, &config, iteration),
        Command::ExecMatrix { codes, tests, out, config } => commands::exec_matrix(&codes, &tests, &out, &config),
        Command::Score { matrix, scorer, top_n, out_dir, format, config } => {
            commands::score(&matrix, scorer, top_n, &out_dir, format, &config)
        }
        Command::Rank { scores, top_n, out } => commands::rank(&scores, top_n, out.as_deref()),
        Command::Metrics { evals, scorer, ks, n, k, compare, json, config } => {
            commands::metrics(&evals, scorer, ks, n, k, compare, json.as_deref(), &config)
        }
        Command::ExportTraining { task, out, iteration, config } => {
            commands::export_training(task, &out, iteration, &config)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
