//! Tabular results, invariant assertions and their CSV/JSON renderings.

use serde::Serialize;
use serde_json::{Map, Value};

/// One CSV field. Reals are written with 17 significant digits.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Real(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Real(x) => format!("{x:.16e}"),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Real(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_owned())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Derived constants and diagnostics.
    pub summary: Map<String, Value>,
    pub assertions: Vec<Assertion>,
}

impl Report {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Report {
            name: name.to_owned(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            summary: Map::new(),
            assertions: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.summary.insert(key.to_owned(), v);
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.assertions.push(Assertion { name: name.to_owned(), passed, detail: detail.into() });
    }

    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    pub fn failures(&self) -> Vec<&Assertion> {
        self.assertions.iter().filter(|a| !a.passed).collect()
    }

    pub fn to_csv(&self) -> csv::Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.into_inner().map_err(|e| csv::Error::from(e.into_error()))
    }

    /// Summary document: inputs echo, derived constants and assertion outcomes.
    pub fn summary_json(&self, inputs: &Value) -> Value {
        serde_json::json!({
            "experiment": self.name,
            "inputs": inputs,
            "derived": self.summary,
            "assertions": self.assertions,
            "passed": self.passed(),
        })
    }

    /// Rows as a JSON document, for `--format json`.
    pub fn table_json(&self) -> Value {
        serde_json::json!({ "header": self.header, "rows": self.rows })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_round_trip_through_csv() {
        let mut r = Report::new("t", &["n", "x", "label"]);
        let x = 0.1 + 0.2;
        r.push(vec![3usize.into(), x.into(), "a,b".into()]);
        let text = String::from_utf8(r.to_csv().unwrap()).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("n,x,label"));
        let row = lines.next().unwrap();
        assert!(row.starts_with("3,3.0000000000000004e-1,"));
        let field: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(field, x);
        assert!(row.ends_with("\"a,b\""));
    }

    #[test]
    fn assertions_decide_the_outcome() {
        let mut r = Report::new("t", &["x"]);
        assert!(r.passed());
        r.check("ok", true, "");
        r.check("bad", false, "too big");
        assert!(!r.passed());
        assert_eq!(r.failures().len(), 1);
        let s = r.summary_json(&Value::Null);
        assert_eq!(s["passed"], Value::Bool(false));
    }
}
