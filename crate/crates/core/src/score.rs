//! Per-query candidate score matrices and their text persistence.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{KgError, Result};

/// One scoring source's output: a row of candidate scores per query, aligned
/// with the query set's candidate order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    pub source_name: String,
    pub rows: Vec<Vec<f64>>,
}

impl ScoreMatrix {
    pub fn new(source_name: impl Into<String>, rows: Vec<Vec<f64>>) -> Self {
        ScoreMatrix {
            source_name: source_name.into(),
            rows,
        }
    }

    pub fn query_count(&self) -> usize {
        self.rows.len()
    }

    /// Uniform candidate count, or `None` when rows have mixed lengths.
    pub fn uniform_candidates(&self) -> Option<usize> {
        let first = self.rows.first().map(|r| r.len())?;
        self.rows.iter().all(|r| r.len() == first).then_some(first)
    }

    pub fn check_finite(&self) -> Result<()> {
        for (i, row) in self.rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(KgError::NonFinite(format!(
                        "score[{i}][{j}] = {v} in source {:?}",
                        self.source_name
                    )));
                }
            }
        }
        Ok(())
    }

    /// Checks row alignment against another matrix.
    pub fn check_aligned(&self, other: &ScoreMatrix) -> Result<()> {
        if self.rows.len() != other.rows.len() {
            return Err(KgError::Shape(format!(
                "source {:?} has {} rows, source {:?} has {}",
                self.source_name,
                self.rows.len(),
                other.source_name,
                other.rows.len()
            )));
        }
        for (i, (a, b)) in self.rows.iter().zip(&other.rows).enumerate() {
            if a.len() != b.len() {
                return Err(KgError::Shape(format!(
                    "row {i}: {} candidates in {:?} vs {} in {:?}",
                    a.len(),
                    self.source_name,
                    b.len(),
                    other.source_name
                )));
            }
        }
        Ok(())
    }

    /// Writes the matrix as text: a header line `name query_count
    /// candidate_count` (candidate_count 0 when rows have mixed lengths),
    /// then one space-separated row per query.
    pub fn save(&self, path: &Path) -> Result<()> {
        if self.source_name.split_whitespace().count() != 1 {
            return Err(KgError::Format(format!(
                "source name {:?} must be a single token",
                self.source_name
            )));
        }
        let mut out = String::new();
        let cand = self.uniform_candidates().unwrap_or(0);
        writeln!(out, "{} {} {}", self.source_name, self.rows.len(), cand).unwrap();
        for row in &self.rows {
            let mut first = true;
            for v in row {
                if !first {
                    out.push(' ');
                }
                write!(out, "{v}").unwrap();
                first = false;
            }
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| KgError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<ScoreMatrix> {
        let text = fs::read_to_string(path).map_err(|e| KgError::io(path, e))?;
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| KgError::Format(format!("{}: empty score file", path.display())))?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(KgError::Format(format!(
                "{}: header must be `name query_count candidate_count`",
                path.display()
            )));
        }
        let source_name = parts[0].to_string();
        let query_count: usize = parts[1]
            .parse()
            .map_err(|_| KgError::parse(path, 1, "bad query count"))?;
        let cand_count: usize = parts[2]
            .parse()
            .map_err(|_| KgError::parse(path, 1, "bad candidate count"))?;
        let mut rows = Vec::with_capacity(query_count);
        for (lineno, line) in lines.enumerate() {
            let lineno = lineno + 2;
            if line.trim().is_empty() {
                continue;
            }
            let mut row = Vec::new();
            for tok in line.split_whitespace() {
                let v: f64 = tok.parse().map_err(|_| {
                    KgError::parse(path, lineno, format!("not a number: {tok:?}"))
                })?;
                if !v.is_finite() {
                    return Err(KgError::NonFinite(format!(
                        "{}:{lineno}: {v}",
                        path.display()
                    )));
                }
                row.push(v);
            }
            if cand_count != 0 && row.len() != cand_count {
                return Err(KgError::parse(
                    path,
                    lineno,
                    format!("expected {cand_count} scores, found {}", row.len()),
                ));
            }
            rows.push(row);
        }
        if rows.len() != query_count {
            return Err(KgError::Format(format!(
                "{}: header declares {query_count} queries, file has {}",
                path.display(),
                rows.len()
            )));
        }
        Ok(ScoreMatrix { source_name, rows })
    }
}
