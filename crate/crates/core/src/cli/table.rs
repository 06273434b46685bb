//! Result tables and their CSV/JSON emission.
//!
//! Floats are written with 12 significant digits; the JSON mirror carries the
//! same rounded values. Non-finite values are `NaN` in CSV and `null` in JSON.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use super::config::OutputFormat;
use crate::cavity::EnergyReport;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Flag(bool),
    Text(String),
}

/// Rounds to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) if x.is_finite() => format!("{:.11e}", x),
            Cell::Num(_) => "NaN".into(),
            Cell::Int(i) => i.to_string(),
            Cell::Flag(b) => b.to_string(),
            Cell::Text(s) => {
                if s.contains([',', '"', '\n']) {
                    format!("\"{}\"", s.replace('"', "\"\"").replace('\n', " "))
                } else {
                    s.clone()
                }
            }
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) if x.is_finite() => json!(round12(*x)),
            Cell::Num(_) => Value::Null,
            Cell::Int(i) => json!(i),
            Cell::Flag(b) => json!(b),
            Cell::Text(s) => json!(s),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(x) => Some(*x),
            Cell::Int(i) => Some(*i as f64),
            _ => None,
        }
    }
}

/// `total = sum(parts)` over named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Identity {
    pub total: &'static str,
    pub parts: Vec<&'static str>,
}

/// Name of the boolean column marking converged rows.
pub const CONVERGED: &str = "converged";

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub identities: Vec<Identity>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            identities: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width does not match table {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric values of a column, NaN for non-numeric cells.
    pub fn values(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column(name)?;
        Some(self.rows.iter().map(|r| r[i].as_f64().unwrap_or(f64::NAN)).collect())
    }

    pub fn converged(&self, row: usize) -> bool {
        match self.column(CONVERGED) {
            Some(i) => self.rows[row][i] == Cell::Flag(true),
            None => true,
        }
    }

    pub fn n_flagged(&self) -> usize {
        (0..self.rows.len()).filter(|&r| !self.converged(r)).count()
    }

    /// Re-checks every identity on converged rows, relative to `max(1, |total|)`.
    pub fn check_identities(&self, tol: f64) -> Result<()> {
        for id in &self.identities {
            let (Some(t), Some(parts)) = (self.column(id.total), id.parts.iter().map(|p| self.column(p)).collect::<Option<Vec<_>>>()) else {
                return Err(Error::InvalidInput(format!("table {} lacks columns for the {} identity", self.name, id.total)));
            };
            for (r, row) in self.rows.iter().enumerate() {
                if !self.converged(r) {
                    continue;
                }
                let total = row[t].as_f64().unwrap_or(f64::NAN);
                let sum: f64 = parts.iter().map(|&p| row[p].as_f64().unwrap_or(f64::NAN)).sum();
                let v = (total - sum).abs() / total.abs().max(1.0);
                if !(v <= tol) {
                    return Err(Error::InvalidInput(format!(
                        "table {} row {r}: {} differs from the sum of its parts by {v:e}",
                        self.name, id.total
                    )));
                }
            }
        }
        Ok(())
    }

    /// CSV text with every header line prefixed by `# `.
    pub fn to_csv(&self, header: &str) -> String {
        let mut out = String::new();
        for line in header.lines() {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self, config: &Value) -> String {
        let rows: Vec<Value> = self.rows.iter().map(|r| Value::Array(r.iter().map(Cell::json).collect())).collect();
        let doc = json!({
            "table": self.name,
            "config": config,
            "columns": self.columns,
            "rows": rows,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("table serializes");
        s.push('\n');
        s
    }
}

/// Config text embedded in the CSV header comment.
pub fn config_header(config_toml: &str) -> String {
    format!("cbohf resolved configuration\n{config_toml}")
}

/// Recovers the TOML configuration from a CSV written by [`emit`].
pub fn header_config(csv: &str) -> String {
    let mut out = String::new();
    for line in csv.lines().skip(1) {
        let Some(rest) = line.strip_prefix('#') else { break };
        out.push_str(rest.strip_prefix(' ').unwrap_or(rest));
        out.push('\n');
    }
    out
}

/// Writes `<stem>_<table>.<ext>` for every table and format; returns the paths.
pub fn emit(tables: &[Table], formats: &[OutputFormat], directory: &Path, stem: &str, config_toml: &str, config_json: &Value) -> Result<Vec<PathBuf>> {
    for t in tables {
        t.check_identities(1e-10)?;
    }
    fs::create_dir_all(directory).map_err(|e| Error::io(directory, e))?;
    let header = config_header(config_toml);
    let mut written = Vec::new();
    for t in tables {
        for f in formats {
            let path = directory.join(format!("{stem}_{}.{f}", t.name));
            let text = match f {
                OutputFormat::Csv => t.to_csv(&header),
                OutputFormat::Json => t.to_json(config_json),
            };
            fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Column names of an [`EnergyReport`] in emission order.
pub const REPORT_COLUMNS: [&str; 14] = [
    "q", "e_cbo", "e_el", "e_lin", "e_dis", "e_dse", "e_dse_1e", "e_dse_2j", "e_dse_2k", "e_dse_en", "e_dse_nuc", "mu_x", "mu_y", "mu_z",
];

pub fn report_cells(r: Option<&EnergyReport>) -> Vec<Cell> {
    match r {
        Some(r) => [
            r.q,
            r.e_cbo,
            r.e_el,
            r.e_lin,
            r.e_dis,
            r.e_dse_total,
            r.e_dse_1e,
            r.e_dse_2j,
            r.e_dse_2k,
            r.e_dse_en,
            r.e_dse_nuc,
            r.dipole.x,
            r.dipole.y,
            r.dipole.z,
        ]
        .into_iter()
        .map(Cell::Num)
        .collect(),
        None => vec![Cell::Num(f64::NAN); REPORT_COLUMNS.len()],
    }
}

pub fn report_identities() -> Vec<Identity> {
    vec![
        Identity {
            total: "e_cbo",
            parts: vec!["e_el", "e_lin", "e_dse", "e_dis"],
        },
        Identity {
            total: "e_dse",
            parts: vec!["e_dse_1e", "e_dse_2j", "e_dse_2k", "e_dse_en", "e_dse_nuc"],
        },
    ]
}
