//! Source canonicalization used as the identity for solution deduplication.

use std::io::Write;
use std::process::{Command, Stdio};

use serde::{Deserialize, Serialize};

/// Canonical form of a program text.
///
/// Line endings become `\n`, trailing whitespace is stripped from every
/// line, leading and trailing blank lines are dropped, interior runs of
/// blank lines collapse to a single blank line, and non-empty output ends
/// with exactly one newline. The function is total and idempotent.
pub fn normalize_code(source: &str) -> String {
    let unified = source.replace("\r\n", "\n").replace('\r', "\n");
    let mut out = String::with_capacity(unified.len() + 1);
    let mut pending_blank = false;
    for line in unified.split('\n') {
        let line = line.trim_end();
        if line.is_empty() {
            pending_blank = !out.is_empty();
            continue;
        }
        if pending_blank {
            out.push('\n');
            pending_blank = false;
        }
        out.push_str(line);
        out.push('\n');
    }
    out
}

/// An external pretty-printer (e.g. `black -q -`) that reads source on stdin
/// and writes the formatted program to stdout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExternalFormatter {
    pub command: Vec<String>,
}

impl ExternalFormatter {
    /// Formats `source`, falling back to the input unchanged when the
    /// formatter cannot be run or rejects the program.
    pub fn format(&self, source: &str) -> String {
        match self.try_format(source) {
            Ok(s) => s,
            Err(e) => {
                log::debug!("formatter {:?} failed: {e}", self.command);
                source.to_string()
            }
        }
    }

    fn try_format(&self, source: &str) -> std::io::Result<String> {
        let (prog, args) = self
            .command
            .split_first()
            .ok_or_else(|| std::io::Error::other("empty formatter command"))?;
        let mut child = Command::new(prog)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()?;
        let mut stdin = child.stdin.take().expect("piped stdin");
        let input = source.to_string();
        let writer = std::thread::spawn(move || stdin.write_all(input.as_bytes()));
        let output = child.wait_with_output()?;
        let _ = writer.join();
        if !output.status.success() {
            return Err(std::io::Error::other(format!("exit {}", output.status)));
        }
        String::from_utf8(output.stdout).map_err(std::io::Error::other)
    }
}

/// Optional formatter followed by canonicalization. Returns the source to
/// store; its canonical form is recomputed by [`crate::CodeSolution`].
pub fn prepare_source(source: &str, formatter: Option<&ExternalFormatter>) -> String {
    match formatter {
        Some(f) => f.format(source),
        None => source.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn collapses_blank_runs() {
        assert_eq!(normalize_code("a=1\n\n\n\nb=2"), "a=1\n\nb=2\n");
    }

    #[test]
    fn strips_trailing_ws_and_crlf() {
        assert_eq!(normalize_code("x = 1   \r\n"), "x = 1\n");
        assert_eq!(normalize_code("a\rb\r\n"), "a\nb\n");
    }

    #[test]
    fn blank_input() {
        assert_eq!(normalize_code(""), "");
        assert_eq!(normalize_code(" \n\t\n"), "");
        assert_eq!(normalize_code("\n\nx"), "x\n");
    }

    #[test]
    fn keeps_indentation() {
        assert_eq!(
            normalize_code("def f():\n    return 1  \n"),
            "def f():\n    return 1\n"
        );
    }

    #[test]
    fn formatter_falls_back_when_missing() {
        let f = ExternalFormatter {
            command: vec!["/nonexistent/formatter-binary".into()],
        };
        assert_eq!(f.format("x=1"), "x=1");
    }

    #[test]
    fn formatter_pipes_through() {
        let f = ExternalFormatter {
            command: vec!["tr".into(), "a-z".into(), "A-Z".into()],
        };
        assert_eq!(f.format("x=1\n"), "X=1\n");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn idempotent(s in "[a-c \t\r\n\u{a0}]{0,60}") {
            let once = normalize_code(&s);
            prop_assert_eq!(normalize_code(&once), once);
        }

        #[test]
        fn idempotent_any(s in any::<String>()) {
            let once = normalize_code(&s);
            prop_assert_eq!(normalize_code(&once), once);
        }
    }
}
