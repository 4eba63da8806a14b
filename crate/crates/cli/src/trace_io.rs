//! Trace serialization: one CSV row per recorded round, 12 significant
//! digits, locale-independent, byte-stable for a fixed run. The reader
//! exists so the test harness (and downstream tooling) can consume the
//! files without a second CSV dependency.

use std::path::{Path, PathBuf};

use ppsgda_core::ppsgda::RunTrace;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TraceIoError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
}

/// Renders the trace as CSV text.
///
/// Columns: `t`, `alpha`, then per agent `rel_err_max_<k>`,
/// `consensus_residual_<k>`, `eps_x_norm_<k>`, `eps_mu_norm_<k>` (1-based
/// agent index), then `v`, `u`, `c` when the run carried an oracle. Values
/// are printed with 12 significant digits in scientific notation; a
/// relative-error cell is empty when no oracle was available. An empty
/// trace yields only the two base header columns, since the agent count is
/// unknown.
pub fn trace_to_csv(trace: &RunTrace) -> String {
    let mut out = String::new();
    out.push_str("t,alpha");
    let Some(first) = trace.records.first() else {
        out.push('\n');
        return out;
    };
    let n = first.agents.len();
    for k in 1..=n {
        out.push_str(&format!(
            ",rel_err_max_{k},consensus_residual_{k},eps_x_norm_{k},eps_mu_norm_{k}"
        ));
    }
    let with_lyapunov = trace.records.iter().any(|r| r.lyapunov.is_some());
    if with_lyapunov {
        out.push_str(",v,u,c");
    }
    out.push('\n');
    for record in &trace.records {
        out.push_str(&format!("{},{}", record.t, sig12(record.alpha)));
        for agent in &record.agents {
            match agent.rel_err_max {
                Some(err) => out.push_str(&format!(",{}", sig12(err))),
                None => out.push(','),
            }
            out.push_str(&format!(
                ",{},{},{}",
                sig12(agent.consensus_residual),
                sig12(agent.eps_x_norm),
                sig12(agent.eps_mu_norm)
            ));
        }
        if with_lyapunov {
            match record.lyapunov {
                Some(terms) => out.push_str(&format!(
                    ",{},{},{}",
                    sig12(terms.v),
                    sig12(terms.u),
                    sig12(terms.c)
                )),
                None => out.push_str(",,,"),
            }
        }
        out.push('\n');
    }
    out
}

/// Writes `trace_to_csv` output to a file.
pub fn emit_trace_csv(trace: &RunTrace, path: &Path) -> Result<(), TraceIoError> {
    std::fs::write(path, trace_to_csv(trace)).map_err(|source| TraceIoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// A parsed trace file: the header labels and, per data row, the round
/// index plus every remaining cell (`None` for empty cells).
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTrace {
    pub header: Vec<String>,
    pub rows: Vec<CsvRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub t: usize,
    pub values: Vec<Option<f64>>,
}

/// Parses a file produced by `emit_trace_csv`.
pub fn read_trace_csv(path: &Path) -> Result<CsvTrace, TraceIoError> {
    let text = std::fs::read_to_string(path).map_err(|source| TraceIoError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_trace_csv(&text)
}

/// Parses CSV text produced by `trace_to_csv`.
pub fn parse_trace_csv(text: &str) -> Result<CsvTrace, TraceIoError> {
    let mut lines = text.lines().enumerate();
    let Some((_, header_line)) = lines.next() else {
        return Err(TraceIoError::Malformed {
            line: 1,
            reason: "missing header".to_string(),
        });
    };
    let header: Vec<String> = header_line.split(',').map(str::to_string).collect();
    if header.first().map(String::as_str) != Some("t") {
        return Err(TraceIoError::Malformed {
            line: 1,
            reason: format!("header must start with `t`, got {header_line:?}"),
        });
    }
    let mut rows = Vec::new();
    for (index, line) in lines {
        let lineno = index + 1;
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != header.len() {
            return Err(TraceIoError::Malformed {
                line: lineno,
                reason: format!("{} cells for {} columns", cells.len(), header.len()),
            });
        }
        let t = cells[0].parse::<usize>().map_err(|e| TraceIoError::Malformed {
            line: lineno,
            reason: format!("round index {:?}: {e}", cells[0]),
        })?;
        let mut values = Vec::with_capacity(cells.len() - 1);
        for cell in &cells[1..] {
            if cell.is_empty() {
                values.push(None);
            } else {
                let parsed = cell.parse::<f64>().map_err(|e| TraceIoError::Malformed {
                    line: lineno,
                    reason: format!("cell {cell:?}: {e}"),
                })?;
                values.push(Some(parsed));
            }
        }
        rows.push(CsvRow { t, values });
    }
    Ok(CsvTrace { header, rows })
}

/// 12 significant digits, scientific notation. `format!("{:.11e}")` prints
/// one digit before the point and eleven after it.
fn sig12(x: f64) -> String {
    format!("{x:.11e}")
}
