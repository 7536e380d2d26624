use serde::Serialize;

use super::ExperimentConfig;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CellKind {
    /// Averages of a nonnegative deviation.
    Deviation,
    /// Empirical coverage probabilities.
    Coverage,
}

/// A Monte Carlo estimate and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cell {
    pub value: f64,
    pub se: f64,
}

impl Cell {
    /// Mean and standard error of the mean.
    pub fn mean_of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Cell { value: mean, se: (var / n).sqrt() }
    }

    /// Proportion of hits with its binomial standard error.
    pub fn proportion(hits: usize, total: usize) -> Self {
        let n = total as f64;
        let p = hits as f64 / n;
        Cell { value: p, se: (p * (1.0 - p) / n).sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub labels: Vec<String>,
    pub cells: Vec<Cell>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub name: String,
    pub kind: CellKind,
    /// Names of the label columns that start each row.
    pub row_header: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<ReportRow>,
    pub config: ExperimentConfig,
    pub notes: Vec<String>,
}

impl ExperimentReport {
    pub fn cell(&self, row: &[&str], column: &str) -> Option<Cell> {
        let j = self.columns.iter().position(|c| c == column)?;
        self.rows
            .iter()
            .find(|r| r.labels.iter().map(String::as_str).eq(row.iter().copied()))
            .map(|r| r.cells[j])
    }

    /// Wide layout: labels, then `value,value_se` per column.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = self.row_header.clone();
        for c in &self.columns {
            header.push(c.clone());
            header.push(format!("{c}_se"));
        }
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = r.labels.clone();
            for c in &r.cells {
                rec.push(c.value.to_string());
                rec.push(c.se.to_string());
            }
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| crate::Error::Io(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}
