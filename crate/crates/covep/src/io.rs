//! CSV field formats and JSON summaries.
//!
//! Field files are plain CSV with one value per row and the node multi-index
//! spelled out: `idx0,...,idx{n-1},alpha,i,value` for algebra-valued 1-forms,
//! `idx...,alpha,value` for algebra fields and `idx...,comp,value` for
//! group-valued fields, where `comp` enumerates the representation payload
//! (k reals, 9 matrix entries, 4 quaternion components). Rows are emitted in
//! node-major order so identical runs produce identical bytes.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fields::{AlgebraField, AlgebraOneForm, GroupField};
use crate::grid::MetricGrid;
use crate::lie::GroupModel;
use crate::solvers::TraceRow;

fn write_atomic(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)
        .map_err(|e| Error::Parse(format!("cannot write {}: {e}", path.display())))
}

fn index_prefix(out: &mut String, mi: &[usize]) {
    for idx in mi {
        let _ = write!(out, "{idx},");
    }
}

fn index_header(n: usize) -> String {
    (0..n).map(|d| format!("idx{d},")).collect()
}

pub fn write_one_form(path: &Path, grid: &MetricGrid, form: &AlgebraOneForm) -> Result<()> {
    let mut text = format!("{}alpha,i,value\n", index_header(grid.n));
    grid.for_each_node(|lin, mi| {
        for i in 0..grid.n {
            for (alpha, v) in form.at(lin, i).iter().enumerate() {
                index_prefix(&mut text, mi);
                let _ = writeln!(text, "{alpha},{i},{v}");
            }
        }
    });
    write_atomic(path, &text)
}

pub fn write_algebra_field(path: &Path, grid: &MetricGrid, field: &AlgebraField) -> Result<()> {
    let mut text = format!("{}alpha,value\n", index_header(grid.n));
    grid.for_each_node(|lin, mi| {
        for (alpha, v) in field.at(lin).iter().enumerate() {
            index_prefix(&mut text, mi);
            let _ = writeln!(text, "{alpha},{v}");
        }
    });
    write_atomic(path, &text)
}

pub fn write_group_field(
    path: &Path,
    model: &GroupModel,
    grid: &MetricGrid,
    field: &GroupField,
) -> Result<()> {
    let mut text = format!("{}comp,value\n", index_header(grid.n));
    grid.for_each_node(|lin, mi| {
        for (comp, v) in model.payload(&field.values[lin]).iter().enumerate() {
            index_prefix(&mut text, mi);
            let _ = writeln!(text, "{comp},{v}");
        }
    });
    write_atomic(path, &text)
}

/// Parse a group-valued section from its CSV form. Every node needs all
/// payload components exactly once; errors name the offending line.
pub fn read_group_field(path: &Path, model: &GroupModel, grid: &MetricGrid) -> Result<GroupField> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
    let n = grid.n;
    let plen = model.payload_len();
    let mut payloads = vec![vec![f64::NAN; plen]; grid.node_count];
    let mut seen = vec![0usize; grid.node_count];
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Parse(format!("{}: empty file", path.display())))?;
    let expected = format!("{}comp,value", index_header(n));
    if header.trim() != expected {
        return Err(Error::Parse(format!(
            "{}: bad header {:?}, expected {:?}",
            path.display(),
            header.trim(),
            expected
        )));
    }
    let mut mi = vec![0usize; n];
    for (lineno, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != n + 2 {
            return Err(Error::Parse(format!(
                "{} line {}: expected {} columns, got {}",
                path.display(),
                lineno + 1,
                n + 2,
                cols.len()
            )));
        }
        for d in 0..n {
            mi[d] = cols[d].parse().map_err(|_| {
                Error::Parse(format!(
                    "{} line {}: field idx{d} is not an index: {:?}",
                    path.display(),
                    lineno + 1,
                    cols[d]
                ))
            })?;
            if mi[d] >= grid.shape[d] {
                return Err(Error::Parse(format!(
                    "{} line {}: idx{d} = {} out of range (shape {})",
                    path.display(),
                    lineno + 1,
                    mi[d],
                    grid.shape[d]
                )));
            }
        }
        let comp: usize = cols[n].parse().map_err(|_| {
            Error::Parse(format!(
                "{} line {}: field comp is not an index: {:?}",
                path.display(),
                lineno + 1,
                cols[n]
            ))
        })?;
        if comp >= plen {
            return Err(Error::Parse(format!(
                "{} line {}: comp = {comp} out of range for payload length {plen}",
                path.display(),
                lineno + 1
            )));
        }
        let value: f64 = cols[n + 1].parse().map_err(|_| {
            Error::Parse(format!(
                "{} line {}: field value is not a number: {:?}",
                path.display(),
                lineno + 1,
                cols[n + 1]
            ))
        })?;
        let lin = grid.lin_index(&mi);
        payloads[lin][comp] = value;
        seen[lin] += 1;
    }
    let mut values = Vec::with_capacity(grid.node_count);
    for lin in 0..grid.node_count {
        if seen[lin] != plen {
            let mut mi = vec![0usize; n];
            grid.multi_index(lin, &mut mi);
            return Err(Error::Parse(format!(
                "{}: node {:?} has {} component rows, expected {}",
                path.display(),
                mi,
                seen[lin],
                plen
            )));
        }
        values.push(model.element_from_payload(&payloads[lin])?);
    }
    Ok(GroupField { values })
}

pub fn write_trace(path: &Path, trace: &[TraceRow]) -> Result<()> {
    let mut text = String::from("iteration,energy,grad_norm,tau\n");
    for row in trace {
        let _ = writeln!(text, "{},{},{},{}", row.iteration, row.energy, row.grad_norm, row.tau);
    }
    write_atomic(path, &text)
}

/// One sampled state of the rigid-body trajectory with conservation drifts.
pub struct TrajectoryRow {
    pub t: f64,
    pub mu: Vec<f64>,
    pub casimir_drift: f64,
    pub energy_drift: f64,
}

pub fn write_trajectory(path: &Path, m: usize, rows: &[TrajectoryRow]) -> Result<()> {
    let mut text = String::from("t,");
    for alpha in 0..m {
        let _ = write!(text, "mu{alpha},");
    }
    text.push_str("casimir_drift,energy_drift\n");
    for row in rows {
        let _ = write!(text, "{},", row.t);
        for v in &row.mu {
            let _ = write!(text, "{v},");
        }
        let _ = writeln!(text, "{},{}", row.casimir_drift, row.energy_drift);
    }
    write_atomic(path, &text)
}

/// Serialize a summary with a stable field order and trailing newline.
pub fn write_summary<T: serde::Serialize>(path: &Path, summary: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(summary)
        .map_err(|e| Error::Numeric(format!("summary serialization failed: {e}")))?;
    text.push('\n');
    write_atomic(path, &text)
}
