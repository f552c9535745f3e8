use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompareMode {
    /// Lines compared after stripping trailing whitespace and trailing blank lines.
    #[default]
    StrictTrimmed,
    /// Whitespace-separated tokens; numeric tokens match within 1e-6 abs or rel.
    NumericTolerant,
}

const NUMERIC_TOL: f64 = 1e-6;

fn trimmed_lines(s: &str) -> Vec<&str> {
    let mut lines: Vec<&str> = s.split('\n').map(str::trim_end).collect();
    while lines.last().is_some_and(|l| l.is_empty()) {
        lines.pop();
    }
    lines
}

fn tokens_match(a: &str, b: &str) -> bool {
    if a == b {
        return true;
    }
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => {
            let diff = (x - y).abs();
            diff <= NUMERIC_TOL || diff <= NUMERIC_TOL * x.abs().max(y.abs())
        }
        _ => false,
    }
}

pub fn compare_outputs(actual: &str, expected: &str, mode: CompareMode) -> bool {
    match mode {
        CompareMode::StrictTrimmed => trimmed_lines(actual) == trimmed_lines(expected),
        CompareMode::NumericTolerant => {
            let mut a = actual.split_whitespace();
            let mut e = expected.split_whitespace();
            loop {
                match (a.next(), e.next()) {
                    (None, None) => return true,
                    (Some(x), Some(y)) if tokens_match(x, y) => continue,
                    _ => return false,
                }
            }
        }
    }
}

/// Canonical text under `mode`; two outputs compare equal in strict mode
/// iff their canonical forms are identical.
pub fn canonical_output(s: &str) -> String {
    trimmed_lines(s).join("\n")
}
