use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};
use serde_json::{Map, Value};

/// Float that serializes non-finite values losslessly: JSON gets
/// `{"nonfinite": "inf"}`, CSV gets the bare token.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Real(pub f64);

fn token(x: f64) -> &'static str {
    if x.is_nan() {
        "nan"
    } else if x > 0.0 {
        "inf"
    } else {
        "-inf"
    }
}

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            let mut m = s.serialize_map(Some(1))?;
            m.serialize_entry("nonfinite", token(self.0))?;
            m.end()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Real(f64),
    Int(u64),
    Bool(bool),
    Text(String),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            // 17 significant digits round-trip every f64
            Cell::Real(x) if x.is_finite() => format!("{x:.16e}"),
            Cell::Real(x) => token(*x).to_string(),
            Cell::Int(n) => n.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(t) => t.clone(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Real(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Real)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n as u64)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<&str> for Cell {
    fn from(t: &str) -> Self {
        Cell::Text(t.to_string())
    }
}

impl From<String> for Cell {
    fn from(t: String) -> Self {
        Cell::Text(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Invalid,
    NonConvergence,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::Invalid => 1,
            Status::NonConvergence => 2,
        }
    }
}

/// Everything a command produces. JSON carries `results`; CSV carries
/// `table`. Both carry the configuration and warnings in their header.
pub struct Report {
    pub command: &'static str,
    pub config: Map<String, Value>,
    pub status: Status,
    pub error: Option<String>,
    pub warnings: Vec<String>,
    pub results: Value,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Report {
    pub fn new(command: &'static str, config: Map<String, Value>) -> Self {
        Self {
            command,
            config,
            status: Status::Ok,
            error: None,
            warnings: Vec::new(),
            results: Value::Null,
            columns: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut top = Map::new();
        top.insert("command".into(), self.command.into());
        top.insert("version".into(), env!("CARGO_PKG_VERSION").into());
        top.insert("config".into(), Value::Object(self.config.clone()));
        top.insert("status".into(), to_value(&self.status));
        if let Some(e) = &self.error {
            top.insert("error".into(), e.as_str().into());
        }
        top.insert("warnings".into(), to_value(&self.warnings));
        top.insert("results".into(), self.results.clone());
        let mut out = serde_json::to_string_pretty(&Value::Object(top)).expect("report serializes");
        out.push('\n');
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# command={}\n", self.command));
        out.push_str(&format!("# version={}\n", env!("CARGO_PKG_VERSION")));
        for (k, v) in &self.config {
            let v = match v {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            out.push_str(&format!("# {k}={v}\n"));
        }
        let status = to_value(&self.status);
        out.push_str(&format!(
            "# status={}\n",
            status.as_str().unwrap_or_default()
        ));
        if let Some(e) = &self.error {
            out.push_str(&format!("# error={e}\n"));
        }
        for w in &self.warnings {
            out.push_str(&format!("# warning={w}\n"));
        }
        let mut writer = csv::Writer::from_writer(Vec::new());
        if !self.columns.is_empty() {
            writer.write_record(&self.columns).expect("in-memory write");
        }
        for row in &self.rows {
            writer
                .write_record(row.iter().map(Cell::render))
                .expect("in-memory write");
        }
        let body = writer.into_inner().expect("in-memory flush");
        out.push_str(&String::from_utf8(body).expect("csv is utf-8"));
        out
    }
}

pub fn to_value<T: Serialize + ?Sized>(x: &T) -> Value {
    serde_json::to_value(x).expect("value serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn non_finite_values_are_tagged() {
        assert_eq!(serde_json::to_string(&Real(1.5)).unwrap(), "1.5");
        assert_eq!(
            serde_json::to_string(&Real(f64::INFINITY)).unwrap(),
            r#"{"nonfinite":"inf"}"#
        );
        assert_eq!(Cell::Real(f64::INFINITY).render(), "inf");
        assert_eq!(Cell::Real(0.1).render(), "1.0000000000000001e-1");
        let back: f64 = Cell::Real(0.1).render().parse().unwrap();
        assert_eq!(back, 0.1);
    }
}
