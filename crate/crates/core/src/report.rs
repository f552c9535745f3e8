//! Plain-text tables and CSV/JSON emission shared by the reports.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::Serialize;

/// Writes a left-aligned first column followed by right-aligned columns.
pub fn write_table(f: &mut dyn fmt::Write, header: &[String], rows: &[Vec<String>]) -> fmt::Result {
    let cols = header.len();
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |f: &mut dyn fmt::Write, cells: &[String]| -> fmt::Result {
        for (i, cell) in cells.iter().enumerate().take(cols) {
            if i == 0 {
                write!(f, "{cell:<w$}", w = widths[0])?;
            } else {
                write!(f, "  {cell:>w$}", w = widths[i])?;
            }
        }
        writeln!(f)
    };
    line(f, header)?;
    let total: usize = widths.iter().sum::<usize>() + 2 * cols.saturating_sub(1);
    writeln!(f, "{}", "-".repeat(total))?;
    for row in rows {
        line(f, row)?;
    }
    Ok(())
}

pub fn table_string(header: &[&str], rows: &[Vec<String>]) -> String {
    let header: Vec<String> = header.iter().map(|s| s.to_string()).collect();
    let mut s = String::new();
    write_table(&mut s, &header, rows).expect("writing to a String cannot fail");
    s
}

/// Pretty JSON with a trailing newline; parent directories are created.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
    s.push('\n');
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, s)
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> std::io::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let mut w = csv::Writer::from_path(path).map_err(std::io::Error::other)?;
    for r in rows {
        w.serialize(r).map_err(std::io::Error::other)?;
    }
    w.flush()
}

/// Formats a fraction as a percentage with two decimals.
pub fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aligned() {
        let t = table_string(&["Name", "N"], &[vec!["a".into(), "10".into()], vec!["bbb".into(), "2".into()]]);
        assert_eq!(t, "Name   N\n--------\na     10\nbbb    2\n");
    }
}
