//! Tabular reports rendered as CSV or JSON with fixed number formatting.

use std::cmp::Ordering;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde_json::{json, Value as Json};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Int(i64),
    Text(String),
    Bool(bool),
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Num(v)
    }
}

impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::Int(v as i64)
    }
}

impl From<u64> for Value {
    fn from(v: u64) -> Self {
        Value::Int(v as i64)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.to_string())
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Text(v)
    }
}

impl Value {
    fn text(&self) -> String {
        match self {
            Value::Num(v) => fmt_sig(*v),
            Value::Int(v) => v.to_string(),
            Value::Text(s) => s.clone(),
            Value::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> Json {
        match self {
            Value::Num(v) => num_json(*v),
            Value::Int(v) => json!(v),
            Value::Text(s) => json!(s),
            Value::Bool(b) => json!(b),
        }
    }

    fn cmp_key(&self, other: &Value) -> Ordering {
        match (self, other) {
            (Value::Num(a), Value::Num(b)) => a.total_cmp(b),
            (Value::Int(a), Value::Int(b)) => a.cmp(b),
            (Value::Num(a), Value::Int(b)) => a.total_cmp(&(*b as f64)),
            (Value::Int(a), Value::Num(b)) => (*a as f64).total_cmp(b),
            (a, b) => a.text().cmp(&b.text()),
        }
    }
}

/// Named columns, rows keyed by their first column, and a free-form summary.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    pub summary: Json,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            summary: json!({}),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        assert_eq!(
            row.len(),
            self.columns.len(),
            "row width matches the header"
        );
        self.rows.push(row);
    }

    pub fn with_summary(mut self, summary: Json) -> Self {
        self.summary = summary;
        self
    }

    fn sorted_rows(&self) -> Vec<&Vec<Value>> {
        let mut rows: Vec<&Vec<Value>> = self.rows.iter().collect();
        rows.sort_by(|a, b| match (a.first(), b.first()) {
            (Some(x), Some(y)) => x.cmp_key(y),
            _ => Ordering::Equal,
        });
        rows
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Formats with 12 significant digits, dropping trailing zeros.
pub fn fmt_sig(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf" } else { "-inf" }.into();
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.11e}");
    let (mant, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mant.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn num_json(v: f64) -> Json {
    if v.is_finite() {
        json!(fmt_sig(v).parse::<f64>().expect("formatted number parses"))
    } else {
        Json::Null
    }
}

/// Rounds every float in a JSON document to 12 significant digits.
pub fn round_json(v: &Json) -> Json {
    match v {
        Json::Number(n) if n.is_f64() => num_json(n.as_f64().unwrap()),
        Json::Array(a) => Json::Array(a.iter().map(round_json).collect()),
        Json::Object(o) => {
            Json::Object(o.iter().map(|(k, v)| (k.clone(), round_json(v))).collect())
        }
        other => other.clone(),
    }
}

/// Renders `table` in `format`.
pub fn render(table: &Table, format: Format) -> Result<Vec<u8>> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&table.columns)?;
            for row in table.sorted_rows() {
                w.write_record(row.iter().map(Value::text))?;
            }
            Ok(w.into_inner().map_err(|e| e.into_error())?)
        }
        Format::Json => {
            let rows: Vec<Json> = table
                .sorted_rows()
                .into_iter()
                .map(|r| Json::Array(r.iter().map(Value::json).collect()))
                .collect();
            let doc = json!({
                "columns": table.columns,
                "rows": rows,
                "summary": round_json(&table.summary),
            });
            let mut out = serde_json::to_vec_pretty(&doc)?;
            out.push(b'\n');
            Ok(out)
        }
    }
}

/// Writes the rendered table to `path`, or to stdout when absent.
pub fn emit_report(table: &Table, format: Format, path: Option<&Path>) -> Result<()> {
    let bytes = render(table, format)?;
    match path {
        Some(p) => fs::write(p, bytes)?,
        None => std::io::stdout().lock().write_all(&bytes)?,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(fmt_sig(1.0), "1");
        assert_eq!(fmt_sig(3f64.ln()), "1.09861228867");
        assert_eq!(fmt_sig(std::f64::consts::PI * 1e-7), "3.14159265359e-7");
        assert_eq!(fmt_sig(-2.5e20), "-2.5e20");
        assert_eq!(fmt_sig(123456789012.4), "123456789012");
        assert_eq!(fmt_sig(9.999999999999999), "10");
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(f64::INFINITY), "inf");
    }

    #[test]
    fn empty_table_is_header_only() {
        let t = Table::new(&["t", "j_image"]);
        assert_eq!(render(&t, Format::Csv).unwrap(), b"t,j_image\n");
    }

    #[test]
    fn rows_sorted_by_first_column() {
        let mut t = Table::new(&["t", "name"]);
        t.push(vec![0.1.into(), "b".into()]);
        t.push(vec![1e-3.into(), "a".into()]);
        t.push(vec![0.01.into(), "c".into()]);
        let csv = String::from_utf8(render(&t, Format::Csv).unwrap()).unwrap();
        assert_eq!(csv, "t,name\n0.001,a\n0.01,c\n0.1,b\n");
        let json: Json = serde_json::from_slice(&render(&t, Format::Json).unwrap()).unwrap();
        assert_eq!(json["rows"][0], json!([0.001, "a"]));
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn output_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::new(&["x", "y"]).with_summary(json!({"pi": std::f64::consts::PI}));
        t.push(vec![2.0f64.sqrt().into(), true.into()]);
        let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
        emit_report(&t, Format::Json, Some(&a)).unwrap();
        emit_report(&t, Format::Json, Some(&b)).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
        let doc: Json = serde_json::from_slice(&fs::read(&a).unwrap()).unwrap();
        assert_eq!(doc["summary"]["pi"], json!(3.14159265359));
    }

    #[test]
    fn unwritable_path_errors() {
        let t = Table::new(&["x"]);
        assert!(emit_report(&t, Format::Csv, Some(Path::new("/nonexistent/dir/out.csv"))).is_err());
    }
}
