use std::io::Write;
use std::path::Path;

use serde_json::{json, Value};
use weylmean::pseudometric::TRUNCATION_LABEL;

use crate::config::RunConfig;
use crate::CliError;

/// Bumped on any incompatible change to the JSON envelope or a result layout.
pub const SCHEMA_VERSION: u32 = 1;

/// What a command produced, before the shared envelope is attached.
pub struct Report {
    pub text: String,
    pub result: Value,
    /// `(file name, contents)`; each file starts with its header row.
    pub csv: Vec<(String, String)>,
    pub exit: u8,
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub enum Stdout {
    Text,
    Json,
    Csv,
}

/// Shortest round-trip form; `inf` for the infinite sentinel.
pub fn num(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        v.to_string()
    }
}

pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', ' ', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Left-aligned columns separated by two spaces.
pub fn table(headers: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut s = String::new();
        for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
            if i + 1 == cells.len() {
                s.push_str(cell);
            } else {
                s.push_str(&format!("{cell:<w$}  "));
            }
        }
        s.push('\n');
        s
    };
    let mut out = line(headers.to_vec());
    for row in &rows {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
    }
    out
}

pub fn envelope(command: &str, cfg: &RunConfig, report: &Report) -> Value {
    let est = &cfg.estimator;
    json!({
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "system": cfg.system_label(),
        "seed": cfg.seed,
        "config_hash": cfg.hash(),
        "truncation": {
            "n_max": est.n_max,
            "m_max": est.m_max,
            "radius": est.search_radius,
            "tail_fraction": est.tail_fraction,
            "label": TRUNCATION_LABEL,
        },
        "config": cfg,
        "result": report.result,
    })
}

fn header(command: &str, cfg: &RunConfig) -> String {
    let est = &cfg.estimator;
    format!(
        "weylmean {command}\nsystem:      {}\nseed:        {}\nconfig hash: {}\ntruncation:  n_max={} m_max={} radius={} \
         tail_fraction={} ({TRUNCATION_LABEL})\n\n",
        cfg.system_label(),
        cfg.seed,
        cfg.hash(),
        est.n_max,
        est.m_max,
        est.search_radius,
        est.tail_fraction
    )
}

/// Writes `<command>.json` (and CSV files when asked) to the output directory,
/// then prints the selected form to stdout.
pub fn emit(command: &str, cfg: &RunConfig, report: &Report, stdout: Stdout) -> Result<(), CliError> {
    let json = serde_json::to_string_pretty(&envelope(command, cfg, report)).expect("json") + "\n";
    if let Some(dir) = &cfg.output.dir {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
        write_file(&dir.join(format!("{command}.json")), &json)?;
        if cfg.output.csv {
            for (name, body) in &report.csv {
                write_file(&dir.join(name), body)?;
            }
        }
    }
    let body = match stdout {
        Stdout::Json => json,
        Stdout::Csv => report.csv.first().map(|(_, b)| b.clone()).unwrap_or_default(),
        Stdout::Text => header(command, cfg) + &report.text,
    };
    let mut out = std::io::stdout().lock();
    out.write_all(body.as_bytes()).map_err(|e| CliError::Io(format!("stdout: {e}")))?;
    out.flush().map_err(|e| CliError::Io(format!("stdout: {e}")))
}

fn write_file(path: &Path, body: &str) -> Result<(), CliError> {
    std::fs::write(path, body).map_err(|e| io_error(path, e))
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_aligns() {
        let t = table(&["a", "bb"], vec![vec!["xyz".into(), "1".into()]]);
        assert_eq!(t, "a    bb\nxyz  1\n");
    }

    #[test]
    fn csv_quoting() {
        assert_eq!(csv_field("(0, 1)"), "\"(0, 1)\"");
        assert_eq!(csv_field("plain"), "plain");
        assert_eq!(csv_field("a\"b"), "\"a\"\"b\"");
    }

    #[test]
    fn numbers() {
        assert_eq!(num(0.1), "0.1");
        assert_eq!(num(f64::INFINITY), "inf");
    }
}
