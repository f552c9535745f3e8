use std::fmt;

use serde::Serialize;

use super::{
    combined_score, n_at_k, pass_rate_and_num, pr_at_n, summarize_pass_stats, unranked_pass_at_k, MetricsError,
    PassStatsSummary, ProblemEval,
};
use crate::model::Difficulty;
use crate::report::{pct, table_string};
use crate::scoring::{Scorer, ScoringConfig};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportOptions {
    /// k values for unranked pass@k columns.
    pub ks: Vec<usize>,
    /// Selection size for n@k and Pr@n.
    pub n: usize,
    /// k used inside n@k.
    pub k: usize,
    pub scoring: ScoringConfig,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            ks: vec![1, 10],
            n: 1,
            k: 1,
            scoring: ScoringConfig::default(),
        }
    }
}

/// Returns a copy of `evals` whose scores come from `scorer` applied to each
/// problem's pass matrix. A problem without generated code or without
/// generated tests has nothing to execute, so all of its candidates get score 0.
pub fn evaluate_all(evals: &[ProblemEval], scorer: Scorer, cfg: &ScoringConfig) -> Result<Vec<ProblemEval>, MetricsError> {
    evals
        .iter()
        .map(|e| {
            e.validate()?;
            let degenerate = e.code_correct.is_empty() || e.test_correct.is_empty();
            if degenerate && e.matrix.as_ref().is_none_or(|m| m.is_empty()) {
                return Ok(e.clone().with_scores(vec![0.0; e.code_correct.len()], vec![0.0; e.test_correct.len()]));
            }
            let m = e.matrix.as_ref().ok_or_else(|| MetricsError::MissingMatrix(e.problem_id.clone()))?;
            let (code, test) = scorer.score(m, cfg)?;
            Ok(e.clone().with_scores(code.values, test.values))
        })
        .collect()
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn groups(evals: &[ProblemEval]) -> Vec<(String, Vec<&ProblemEval>)> {
    let mut out: Vec<(String, Vec<&ProblemEval>)> = Difficulty::ALL
        .iter()
        .map(|d| (d.short().to_string(), evals.iter().filter(|e| e.difficulty == *d).collect()))
        .collect();
    out.push(("All".to_string(), evals.iter().collect()));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRow {
    pub group: String,
    pub problems: usize,
    pub pass_at_k: Vec<(usize, f64)>,
    pub n_at_k: Option<f64>,
    pub pr_at_n: Option<f64>,
    pub tests: PassStatsSummary,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub options: ReportOptions,
    pub rows: Vec<MetricsRow>,
}

/// Per-difficulty metrics. n@k / Pr@n appear only when every problem carries scores.
pub fn metrics_report(evals: &[ProblemEval], options: &ReportOptions) -> Result<MetricsReport, MetricsError> {
    for e in evals {
        e.validate()?;
    }
    let code_ranked = !evals.is_empty() && evals.iter().all(|e| e.code_scores.is_some());
    let test_ranked = !evals.is_empty() && evals.iter().all(|e| e.test_scores.is_some() && !e.test_correct.is_empty());
    let mut rows = Vec::new();
    for (group, members) in groups(evals) {
        let mut pass_at = Vec::new();
        for &k in &options.ks {
            let vals = members.iter().map(|e| unranked_pass_at_k(e, k)).collect::<Result<Vec<_>, _>>()?;
            pass_at.push((k, mean(&vals)));
        }
        let n_at = if code_ranked && !members.is_empty() {
            let vals = members.iter().map(|e| n_at_k(e, options.n, options.k)).collect::<Result<Vec<_>, _>>()?;
            Some(mean(&vals))
        } else {
            None
        };
        let pr = if test_ranked && !members.is_empty() {
            let vals = members.iter().map(|e| pr_at_n(e, options.n)).collect::<Result<Vec<_>, _>>()?;
            Some(mean(&vals))
        } else {
            None
        };
        let stats: Vec<_> = members.iter().map(|e| pass_rate_and_num(e)).collect();
        let tests = summarize_pass_stats(&stats);
        rows.push(MetricsRow {
            group,
            problems: members.len(),
            pass_at_k: pass_at,
            n_at_k: n_at,
            pr_at_n: pr,
            score: combined_score(tests.pass_rate, tests.pass_num),
            tests,
        });
    }
    Ok(MetricsReport {
        options: options.clone(),
        rows,
    })
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let o = &self.options;
        let ranked_code = self.rows.iter().any(|r| r.n_at_k.is_some());
        let ranked_test = self.rows.iter().any(|r| r.pr_at_n.is_some());
        let has_tests = self.rows.iter().any(|r| r.tests.problems > r.tests.empty_problems);
        let mut header: Vec<String> = vec!["Difficulty".into(), "Problems".into()];
        header.extend(o.ks.iter().map(|k| format!("pass@{k} (%)")));
        if ranked_code {
            header.push(format!("{}@{} (%)", o.n, o.k));
        }
        if ranked_test {
            header.push(format!("Pr@{} (%)", o.n));
        }
        if has_tests {
            header.extend(["Pass rate (%)".into(), "Pass num".into(), "Score".into()]);
        }
        let dash = || "-".to_string();
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                let empty = r.problems == 0;
                let mut row = vec![r.group.clone(), r.problems.to_string()];
                row.extend(r.pass_at_k.iter().map(|(_, v)| if empty { dash() } else { pct(*v) }));
                if ranked_code {
                    row.push(r.n_at_k.map_or_else(dash, pct));
                }
                if ranked_test {
                    row.push(r.pr_at_n.map_or_else(dash, pct));
                }
                if has_tests {
                    if empty {
                        row.extend([dash(), dash(), dash()]);
                    } else {
                        row.push(pct(r.tests.pass_rate));
                        row.push(format!("{:.2}", r.tests.pass_num));
                        row.push(format!("{:.3}", r.score));
                    }
                }
                row
            })
            .collect();
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        f.write_str(&table_string(&header, &rows))?;
        let empty: usize = self.rows.last().map_or(0, |r| r.tests.empty_problems);
        if has_tests && empty > 0 {
            let all = self.rows.last().expect("non-empty");
            writeln!(
                f,
                "note: {empty} problem(s) produced no tests; excluding them gives pass rate {}% and pass num {:.2}",
                pct(all.tests.pass_rate_nonempty),
                all.tests.pass_num_nonempty
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub scorer: Scorer,
    /// (difficulty, n@k, Pr@n); `None` for difficulties with no problems.
    pub by_difficulty: Vec<(Difficulty, Option<f64>, Option<f64>)>,
}

/// Selection sizes for the scorer comparison; the default is 1@10 for code and Pr@10 for tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ComparisonOptions {
    pub code_n: usize,
    pub code_k: usize,
    pub test_n: usize,
}

impl Default for ComparisonOptions {
    fn default() -> Self {
        ComparisonOptions { code_n: 1, code_k: 10, test_n: 10 }
    }
}

/// Side-by-side n@k (code) and Pr@n (test) for the dual-critic and consensus-set scorers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub options: ComparisonOptions,
    pub rows: Vec<ComparisonRow>,
}

pub fn comparison_report(
    evals: &[ProblemEval],
    options: ComparisonOptions,
    cfg: &ScoringConfig,
) -> Result<ComparisonReport, MetricsError> {
    let ComparisonOptions { code_n, code_k, test_n } = options;
    let mut rows = Vec::new();
    for scorer in [Scorer::Codet, Scorer::Dual] {
        let scored = evaluate_all(evals, scorer, cfg)?;
        let mut by_difficulty = Vec::new();
        for d in Difficulty::ALL {
            let members: Vec<&ProblemEval> = scored.iter().filter(|e| e.difficulty == d).collect();
            if members.is_empty() {
                by_difficulty.push((d, None, None));
                continue;
            }
            let code = members.iter().map(|e| n_at_k(e, code_n, code_k)).collect::<Result<Vec<_>, _>>()?;
            let with_tests: Vec<&&ProblemEval> = members.iter().filter(|e| !e.test_correct.is_empty()).collect();
            let test = with_tests.iter().map(|e| pr_at_n(e, test_n)).collect::<Result<Vec<_>, _>>()?;
            by_difficulty.push((d, Some(mean(&code)), (!test.is_empty()).then(|| mean(&test))));
        }
        rows.push(ComparisonRow { scorer, by_difficulty });
    }
    Ok(ComparisonReport { options, rows })
}

impl fmt::Display for ComparisonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let o = &self.options;
        let code_label = format!("{}@{}", o.code_n, o.code_k);
        let test_label = format!("Pr@{}", o.test_n);
        let mut header = vec!["Method".to_string()];
        for label in [&code_label, &test_label] {
            header.extend(Difficulty::ALL.iter().map(|d| format!("{label} {}", d.short())));
        }
        let dash = || "-".to_string();
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                let mut row = vec![r.scorer.label().to_string()];
                row.extend(r.by_difficulty.iter().map(|(_, c, _)| c.map_or_else(dash, pct)));
                row.extend(r.by_difficulty.iter().map(|(_, _, t)| t.map_or_else(dash, pct)));
                row
            })
            .collect();
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        writeln!(f, "Comparison of {code_label} (%) for code and {test_label} (%) for tests")?;
        f.write_str(&table_string(&header, &rows))
    }
}
