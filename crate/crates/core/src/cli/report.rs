//! Tabular reports and their CSV / JSON encodings.
//!
//! CSV: comma separated, `.` decimal point, numbers in scientific notation with
//! 9 significant digits, first line is the column header. Empty cells are
//! empty strings. JSON: `{"tool", "version", "command", "seed", "input",
//! "columns", "rows", "warnings"}` where `rows` holds the CSV rows as arrays;
//! numbers are the CSV values parsed back, empty cells are `null`.

use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map(Cell::Num).unwrap_or(Cell::Empty)
    }
}

/// 9 significant digits.
pub fn format_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.8e}")
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => format_num(*x),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) if x.is_finite() => format_num(*x).parse::<f64>().map(Value::from).unwrap_or(Value::Null),
            Cell::Num(_) | Cell::Empty => Value::Null,
            Cell::Text(s) => Value::String(s.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub warnings: Vec<String>,
}

#[derive(Serialize)]
struct Envelope<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    seed: Option<u64>,
    input: &'a Value,
    columns: &'a [String],
    rows: Vec<Vec<Value>>,
    warnings: &'a [String],
}

impl Report {
    pub fn new(command: &str, columns: &[&str]) -> Self {
        Report { command: command.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: vec![], warnings: vec![] }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(vec![]);
        // writing to a Vec cannot fail
        w.write_record(&self.columns).expect("csv header");
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::csv)).expect("csv row");
        }
        String::from_utf8(w.into_inner().expect("csv flush")).expect("utf8")
    }

    pub fn to_json(&self, input: &Value, seed: Option<u64>) -> String {
        let env = Envelope {
            tool: "qctl",
            version: env!("CARGO_PKG_VERSION"),
            command: &self.command,
            seed,
            input,
            columns: &self.columns,
            rows: self.rows.iter().map(|r| r.iter().map(Cell::json).collect()).collect(),
            warnings: &self.warnings,
        };
        let mut s = serde_json::to_string_pretty(&env).expect("report serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_format() {
        let mut r = Report::new("x", &["a", "b", "c"]);
        r.push(vec![1.0.into(), "p, q".into(), Cell::Empty]);
        r.push(vec![(-1.234567891234e-7).into(), "t".into(), f64::INFINITY.into()]);
        assert_eq!(r.to_csv(), "a,b,c\n1.00000000e0,\"p, q\",\n-1.23456789e-7,t,inf\n");
    }

    #[test]
    fn json_mirrors_rows() {
        let mut r = Report::new("x", &["a", "b"]);
        r.push(vec![0.1.into(), Cell::Empty]);
        let v: Value = serde_json::from_str(&r.to_json(&Value::Null, Some(3))).unwrap();
        assert_eq!(v["columns"], serde_json::json!(["a", "b"]));
        assert_eq!(v["rows"], serde_json::json!([[0.1, null]]));
        assert_eq!(v["seed"], 3);
    }
}
