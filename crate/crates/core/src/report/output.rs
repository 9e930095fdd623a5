//! Report assembly and rendering.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;

use super::checks::{Row, Status};
use crate::error::{Error, Result};

/// Rows produced by one experiment.
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub label: String,
    pub algebra: String,
    pub group: Option<String>,
    pub tolerance: f64,
    pub seed: u64,
    pub rows: Vec<Row>,
}

#[derive(Clone, Copy, Debug, Default, Serialize, PartialEq, Eq)]
pub struct Summary {
    pub experiments: usize,
    pub rows: usize,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub summary: Summary,
    pub experiments: Vec<ExperimentReport>,
}

/// Output format.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Markdown,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "md" | "markdown" => Ok(Format::Markdown),
            other => Err(format!(
                "unknown format {other:?} (expected json, csv or md)"
            )),
        }
    }
}

impl VerificationReport {
    pub fn new(experiments: Vec<ExperimentReport>) -> Self {
        let mut summary = Summary {
            experiments: experiments.len(),
            ..Summary::default()
        };
        for row in experiments.iter().flat_map(|e| &e.rows) {
            summary.rows += 1;
            match row.status {
                Status::Pass => summary.passed += 1,
                Status::Fail => summary.failed += 1,
                Status::Skipped => summary.skipped += 1,
            }
        }
        Self {
            summary,
            experiments,
        }
    }

    /// True when no executed check failed.
    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn rows(&self) -> impl Iterator<Item = (&ExperimentReport, &Row)> {
        self.experiments
            .iter()
            .flat_map(|e| e.rows.iter().map(move |r| (e, r)))
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Json => self.to_json(),
            Format::Csv => self.to_csv(),
            Format::Markdown => Ok(self.to_markdown()),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn to_csv(&self) -> Result<String> {
        let timings = self.rows().any(|(_, r)| r.elapsed_ms.is_some());
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec![
            "experiment",
            "check",
            "status",
            "lhs",
            "rhs",
            "lhs_rational",
            "rhs_rational",
            "residual",
            "anchor",
            "note",
        ];
        if timings {
            header.push("elapsed_ms");
        }
        w.write_record(&header)?;
        let num = |x: Option<f64>| x.map(|v| format!("{v:e}")).unwrap_or_default();
        for (e, r) in self.rows() {
            let mut rec = vec![
                e.label.clone(),
                r.name.clone(),
                r.status.as_str().to_string(),
                num(r.lhs),
                num(r.rhs),
                r.lhs_rational.clone().unwrap_or_default(),
                r.rhs_rational.clone().unwrap_or_default(),
                num(r.residual),
                r.anchor.clone(),
                r.note.clone().unwrap_or_default(),
            ];
            if timings {
                rec.push(r.elapsed_ms.map(|v| format!("{v:.3}")).unwrap_or_default());
            }
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_markdown(&self) -> String {
        let s = &self.summary;
        let mut out = String::new();
        let _ = writeln!(out, "# steinlab verification report\n");
        let _ = writeln!(
            out,
            "{} experiments, {} checks: {} passed, {} failed, {} skipped.\n",
            s.experiments, s.rows, s.passed, s.failed, s.skipped
        );
        for e in &self.experiments {
            let group = e
                .group
                .as_deref()
                .map(|g| format!(", G = {g}"))
                .unwrap_or_default();
            let _ = writeln!(out, "## {}\n", e.label);
            let _ = writeln!(
                out,
                "Algebra `{}`{group}, tolerance {:e}, seed {}.\n",
                e.algebra, e.tolerance, e.seed
            );
            let timings = e.rows.iter().any(|r| r.elapsed_ms.is_some());
            let _ = write!(
                out,
                "| check | status | lhs | rhs | residual | statement | note |"
            );
            let _ = writeln!(out, "{}", if timings { " ms |" } else { "" });
            let _ = write!(out, "|---|---|---|---|---|---|---|");
            let _ = writeln!(out, "{}", if timings { "---|" } else { "" });
            for r in &e.rows {
                let value = |x: Option<f64>, q: &Option<String>| match (x, q) {
                    (Some(v), Some(q)) => format!("{v:.10} ({q})"),
                    (Some(v), None) => format!("{v:.10}"),
                    _ => String::new(),
                };
                let _ = write!(
                    out,
                    "| {} | {} | {} | {} | {} | {} | {} |",
                    r.name,
                    r.status.as_str(),
                    value(r.lhs, &r.lhs_rational),
                    value(r.rhs, &r.rhs_rational),
                    r.residual.map(|v| format!("{v:.2e}")).unwrap_or_default(),
                    escape(&r.anchor),
                    escape(r.note.as_deref().unwrap_or("")),
                );
                let _ = writeln!(
                    out,
                    "{}",
                    if timings {
                        format!(" {:.1} |", r.elapsed_ms.unwrap_or(0.0))
                    } else {
                        String::new()
                    }
                );
            }
            out.push('\n');
        }
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('|', "\\|")
}
