//! Result tables for the experiment commands: one metric per table, one
//! cell per (n, m), rendered both as CSV and as an aligned text block.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

/// Marker in the CSV `marker` column and the text layout for cells with no
/// reportable value (unsolved within limits, or an undefined ratio).
pub const MISSING: &str = "---";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CellValue {
    Value(f64),
    Missing,
}

#[derive(Debug, Clone)]
pub struct MetricTable {
    pub title: String,
    /// Value of the CSV `metric` column for every row.
    pub metric: String,
    pub n_values: Vec<usize>,
    pub m_values: Vec<usize>,
    /// Keyed (n, m); absent cells render as missing.
    pub cells: BTreeMap<(usize, usize), CellValue>,
    pub decimals: usize,
}

impl MetricTable {
    pub fn new(title: &str, metric: &str, n_values: &[usize], m_values: &[usize]) -> Self {
        let mut n_values = n_values.to_vec();
        let mut m_values = m_values.to_vec();
        n_values.sort_unstable();
        n_values.dedup();
        m_values.sort_unstable();
        m_values.dedup();
        MetricTable {
            title: title.to_string(),
            metric: metric.to_string(),
            n_values,
            m_values,
            cells: BTreeMap::new(),
            decimals: 2,
        }
    }

    pub fn set(&mut self, n: usize, m: usize, value: CellValue) {
        self.cells.insert((n, m), value);
    }

    fn cell(&self, n: usize, m: usize) -> CellValue {
        self.cells
            .get(&(n, m))
            .copied()
            .unwrap_or(CellValue::Missing)
    }

    fn format_value(&self, value: CellValue) -> String {
        match value {
            CellValue::Value(v) => format!("{v:.*}", self.decimals),
            CellValue::Missing => MISSING.to_string(),
        }
    }

    /// Rows ordered by (n, m); missing cells carry an empty value and the
    /// marker so the file stays rectangular.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,m,metric,value,marker\n");
        for &n in &self.n_values {
            for &m in &self.m_values {
                match self.cell(n, m) {
                    CellValue::Value(v) => {
                        writeln!(out, "{n},{m},{},{v:.*},", self.metric, self.decimals).unwrap()
                    }
                    CellValue::Missing => {
                        writeln!(out, "{n},{m},{},,{MISSING}", self.metric).unwrap()
                    }
                }
            }
        }
        out
    }

    /// Text layout matching the write-ups: machines down, job counts across.
    pub fn render(&self) -> String {
        let mut header = vec!["m\\n".to_string()];
        header.extend(self.n_values.iter().map(|n| n.to_string()));
        let mut rows = vec![header];
        for &m in &self.m_values {
            let mut row = vec![m.to_string()];
            for &n in &self.n_values {
                row.push(self.format_value(self.cell(n, m)));
            }
            rows.push(row);
        }
        let columns = rows[0].len();
        let mut widths = vec![0usize; columns];
        for row in &rows {
            for (i, cell) in row.iter().enumerate() {
                widths[i] = widths[i].max(cell.len());
            }
        }
        let mut out = String::new();
        writeln!(out, "{}", self.title).unwrap();
        for row in &rows {
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    out.push_str("  ");
                }
                write!(out, "{cell:>w$}", w = widths[i]).unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, dir: &Path, file_name: &str) -> io::Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let path = dir.join(file_name);
        fs::write(&path, self.to_csv())?;
        Ok(path)
    }
}

/// Relative saving of having a feature on, in percent of the cost without
/// it. None when the ratio is undefined (zero cost without, nonzero with).
pub fn gap_percent(without: f64, with: f64) -> Option<f64> {
    if without == 0.0 {
        if with == 0.0 {
            Some(0.0)
        } else {
            None
        }
    } else {
        Some((without - with) / without * 100.0)
    }
}

/// Mean of the defined gaps; None when every pair was undefined or the
/// slice is empty.
pub fn mean_gap(pairs: &[(f64, f64)]) -> Option<f64> {
    let gaps: Vec<f64> = pairs
        .iter()
        .filter_map(|&(without, with)| gap_percent(without, with))
        .collect();
    if gaps.is_empty() {
        None
    } else {
        Some(gaps.iter().sum::<f64>() / gaps.len() as f64)
    }
}
