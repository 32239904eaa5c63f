//! Input tables: one row per hypothesis with a `p` or `e` column and
//! optional `weight`, `group`, and `is_null` columns.
//!
//! CSV files carry a header row; JSON files hold an object of equal-length
//! column arrays, e.g. `{"p": [0.01, 0.2], "group": ["a", "b"]}`. The two
//! forms of the same data parse to the same table.

use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueKind {
    P,
    E,
}

impl ValueKind {
    fn column(self) -> &'static str {
        match self {
            ValueKind::P => "p",
            ValueKind::E => "e",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InputTable {
    pub kind: ValueKind,
    pub values: Vec<f64>,
    pub weights: Option<Vec<f64>>,
    pub groups: Option<Vec<String>>,
    pub is_null: Option<Vec<bool>>,
    /// Source line of each row, for error messages.
    lines: Vec<u64>,
}

impl InputTable {
    pub fn line(&self, row: usize) -> u64 {
        self.lines[row]
    }

    pub fn require_weights(&self) -> CliResult<&[f64]> {
        self.weights
            .as_deref()
            .ok_or_else(|| CliError::input("input has no weight column"))
    }

    pub fn require_groups(&self) -> CliResult<&[String]> {
        self.groups
            .as_deref()
            .ok_or_else(|| CliError::input("input has no group column"))
    }

    /// Rejects values outside the range of the value kind.
    fn check_ranges(&self) -> CliResult<()> {
        for (row, &v) in self.values.iter().enumerate() {
            let ok = match self.kind {
                ValueKind::P => (0.0..=1.0).contains(&v),
                ValueKind::E => v >= 0.0 && !v.is_nan(),
            };
            if !ok {
                let range = match self.kind {
                    ValueKind::P => "[0,1]",
                    ValueKind::E => "[0,inf]",
                };
                return Err(CliError::domain(format!(
                    "line {}: {} = {v} outside {range}",
                    self.line(row),
                    self.kind.column()
                )));
            }
        }
        if let Some(w) = &self.weights {
            if let Some(row) = w.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(CliError::domain(format!(
                    "line {}: weight = {} must be finite and nonnegative",
                    self.line(row),
                    w[row]
                )));
            }
        }
        Ok(())
    }
}

/// Reads a table, choosing JSON for a `.json` extension and CSV otherwise.
pub fn read_table(path: &Path, kind: ValueKind) -> CliResult<InputTable> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let table = if is_json {
        parse_json(&text, kind)?
    } else {
        parse_csv(&text, kind)?
    };
    table.check_ranges()?;
    Ok(table)
}

fn parse_f64(field: &str, column: &str, line: u64) -> CliResult<f64> {
    let t = field.trim();
    match t.to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" => return Ok(f64::INFINITY),
        _ => {}
    }
    t.parse::<f64>()
        .ok()
        .filter(|x| !x.is_nan())
        .ok_or_else(|| {
            CliError::input(format!("line {line}: {column} = {field:?} is not a number"))
        })
}

fn parse_bool(field: &str, line: u64) -> CliResult<bool> {
    match field.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" => Ok(true),
        "0" | "false" | "no" => Ok(false),
        other => Err(CliError::input(format!(
            "line {line}: is_null = {other:?} is not a boolean"
        ))),
    }
}

pub fn parse_csv(text: &str, kind: ValueKind) -> CliResult<InputTable> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| CliError::input(format!("line 1: {e}")))?
        .clone();
    if headers.is_empty() || headers.iter().all(str::is_empty) {
        return Err(CliError::input("input is empty"));
    }
    let mut value_col = None;
    let (mut weight_col, mut group_col, mut null_col) = (None, None, None);
    for (i, h) in headers.iter().enumerate() {
        let slot = match h {
            "p" | "e" if h == kind.column() => &mut value_col,
            "weight" => &mut weight_col,
            "group" => &mut group_col,
            "is_null" => &mut null_col,
            other => {
                return Err(CliError::input(format!(
                    "line 1: unexpected column {other:?}"
                )));
            }
        };
        if slot.replace(i).is_some() {
            return Err(CliError::input(format!("line 1: duplicate column {h:?}")));
        }
    }
    let value_col = value_col
        .ok_or_else(|| CliError::input(format!("line 1: missing column {:?}", kind.column())))?;

    let mut t = InputTable {
        kind,
        values: Vec::new(),
        weights: weight_col.map(|_| Vec::new()),
        groups: group_col.map(|_| Vec::new()),
        is_null: null_col.map(|_| Vec::new()),
        lines: Vec::new(),
    };
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            CliError::input(format!("line {line}: {e}"))
        })?;
        let line = record.position().map_or(0, |p| p.line());
        t.values
            .push(parse_f64(&record[value_col], kind.column(), line)?);
        if let (Some(c), Some(w)) = (weight_col, t.weights.as_mut()) {
            w.push(parse_f64(&record[c], "weight", line)?);
        }
        if let (Some(c), Some(g)) = (group_col, t.groups.as_mut()) {
            if record[c].is_empty() {
                return Err(CliError::input(format!("line {line}: empty group label")));
            }
            g.push(record[c].to_owned());
        }
        if let (Some(c), Some(n)) = (null_col, t.is_null.as_mut()) {
            n.push(parse_bool(&record[c], line)?);
        }
        t.lines.push(line);
    }
    if t.values.is_empty() {
        return Err(CliError::input("input has no rows"));
    }
    Ok(t)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonTable {
    p: Option<Vec<JsonNumber>>,
    e: Option<Vec<JsonNumber>>,
    weight: Option<Vec<JsonNumber>>,
    group: Option<Vec<JsonLabel>>,
    is_null: Option<Vec<bool>>,
}

/// A number, or a string such as `"inf"` for values JSON cannot spell.
#[derive(Deserialize)]
#[serde(untagged)]
enum JsonNumber {
    Number(f64),
    Text(String),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum JsonLabel {
    Text(String),
    Integer(i64),
}

pub fn parse_json(text: &str, kind: ValueKind) -> CliResult<InputTable> {
    if text.trim().is_empty() {
        return Err(CliError::input("input is empty"));
    }
    let raw: JsonTable = serde_json::from_str(text)
        .map_err(|e| CliError::input(format!("line {}: {e}", e.line())))?;
    let (values, other) = match kind {
        ValueKind::P => (raw.p, raw.e),
        ValueKind::E => (raw.e, raw.p),
    };
    if other.is_some() {
        return Err(CliError::input(format!(
            "unexpected column {:?}",
            match kind {
                ValueKind::P => "e",
                ValueKind::E => "p",
            }
        )));
    }
    let values =
        values.ok_or_else(|| CliError::input(format!("missing column {:?}", kind.column())))?;
    if values.is_empty() {
        return Err(CliError::input("input has no rows"));
    }
    let k = values.len();
    // row i is reported as line i + 2, the line it would have in CSV
    let lines: Vec<u64> = (0..k as u64).map(|i| i + 2).collect();
    let numbers = |col: Vec<JsonNumber>, name: &str| -> CliResult<Vec<f64>> {
        col.into_iter()
            .zip(&lines)
            .map(|(v, &line)| match v {
                JsonNumber::Number(x) => Ok(x),
                JsonNumber::Text(s) => parse_f64(&s, name, line),
            })
            .collect()
    };
    let check_len = |len: usize, name: &str| -> CliResult<()> {
        if len == k {
            Ok(())
        } else {
            Err(CliError::input(format!(
                "column {name:?} has {len} entries, expected {k}"
            )))
        }
    };
    let weights = match raw.weight {
        Some(w) => {
            check_len(w.len(), "weight")?;
            Some(numbers(w, "weight")?)
        }
        None => None,
    };
    let groups = match raw.group {
        Some(g) => {
            check_len(g.len(), "group")?;
            let labels: Vec<String> = g
                .into_iter()
                .map(|l| match l {
                    JsonLabel::Text(s) => s,
                    JsonLabel::Integer(i) => i.to_string(),
                })
                .collect();
            if let Some(row) = labels.iter().position(String::is_empty) {
                return Err(CliError::input(format!(
                    "line {}: empty group label",
                    lines[row]
                )));
            }
            Some(labels)
        }
        None => None,
    };
    if let Some(n) = &raw.is_null {
        check_len(n.len(), "is_null")?;
    }
    Ok(InputTable {
        kind,
        values: numbers(values, kind.column())?,
        weights,
        groups,
        is_null: raw.is_null,
        lines,
    })
}
