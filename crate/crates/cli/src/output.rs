use std::io::Write;
use std::path::Path;

use serde_json::{json, Value};

use crate::args::Format;
use crate::error::CliError;

/// A command's result: a CSV table and a JSON document.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub json: Value,
    pub headers: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Report {
    pub fn new(command: &str, body: Value, headers: Vec<&'static str>, rows: Vec<Vec<String>>) -> Self {
        let mut json = json!({ "schema": 1, "command": command });
        if let (Some(obj), Value::Object(extra)) = (json.as_object_mut(), body) {
            obj.extend(extra);
        }
        Report { json, headers, rows }
    }

    pub fn render(&self, format: Format) -> Result<Vec<u8>, CliError> {
        match format {
            Format::Json => {
                let mut out = serde_json::to_vec_pretty(&self.json).map_err(|e| CliError::Io(e.to_string()))?;
                out.push(b'\n');
                Ok(out)
            }
            Format::Csv => csv_bytes(&self.headers, &self.rows),
        }
    }
}

/// Shortest round-tripping text; scientific outside `[1e-5, 1e16)`.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-5..1e16).contains(&a) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

pub fn csv_bytes(headers: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(headers).map_err(|e| CliError::Io(e.to_string()))?;
    for r in rows {
        w.write_record(r).map_err(|e| CliError::Io(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

pub fn write_out(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => std::io::stdout().write_all(bytes).map_err(|e| CliError::Io(e.to_string())),
    }
}
