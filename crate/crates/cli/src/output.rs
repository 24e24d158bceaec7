use std::fs::File;
use std::io::{self, Write};

use serde_json::{json, Map, Value};

use crate::{CliError, Format, OutputArgs};

pub const SIGNIFICANT_DIGITS: i32 = 10;

/// `x` with ten significant digits, in plain notation where that stays short.
pub fn sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if (-6..10).contains(&mag) {
        let decimals = (SIGNIFICANT_DIGITS - 1 - mag).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{:.*e}", (SIGNIFICANT_DIGITS - 1) as usize, x)
    }
}

#[derive(Debug, Clone)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => sig(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => json!(x),
            Cell::Int(n) => json!(n),
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n as u64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

/// Rows under a fixed header, rendered as CSV or as JSON objects.
#[derive(Debug, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    /// Leading `# ` lines in CSV, a `notes` array in JSON.
    pub notes: Vec<String>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Table {
            header,
            ..Table::default()
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> Result<String, CliError> {
        match format {
            Format::Csv => {
                let mut out = String::new();
                for n in &self.notes {
                    out.push_str(&format!("# {n}\n"));
                }
                let mut w = csv::Writer::from_writer(Vec::new());
                let io = |e: csv::Error| CliError::Usage(e.to_string());
                w.write_record(&self.header).map_err(io)?;
                for r in &self.rows {
                    w.write_record(r.iter().map(Cell::csv)).map_err(io)?;
                }
                let bytes = w.into_inner().map_err(|e| CliError::Usage(e.to_string()))?;
                out.push_str(&String::from_utf8_lossy(&bytes));
                Ok(out)
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| {
                        let obj: Map<String, Value> = self
                            .header
                            .iter()
                            .zip(r)
                            .map(|(h, c)| (h.to_string(), c.json()))
                            .collect();
                        Value::Object(obj)
                    })
                    .collect();
                let body = if self.notes.is_empty() {
                    Value::Array(rows)
                } else {
                    json!({ "notes": self.notes, "rows": rows })
                };
                Ok(format!(
                    "{}\n",
                    serde_json::to_string_pretty(&body).expect("values serialize")
                ))
            }
        }
    }
}

pub fn emit(text: &str, out: &OutputArgs) -> Result<(), CliError> {
    match &out.out {
        Some(path) => {
            let mut f = File::create(path).map_err(|source| CliError::Io {
                path: path.display().to_string(),
                source,
            })?;
            f.write_all(text.as_bytes()).map_err(|source| CliError::Io {
                path: path.display().to_string(),
                source,
            })
        }
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Io {
                path: "stdout".into(),
                source,
            }),
    }
}
