use std::path::Path;

use serde::Deserialize;
use serde_json::{Map, Value};

use crate::args::Format;
use crate::error::CliError;

/// A `run --config` file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    pub command: String,
    #[serde(default)]
    pub args: Map<String, Value>,
    pub out: Option<String>,
    pub format: Option<Format>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let cfg: RunConfig = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if cfg.schema != 1 {
            return Err(CliError::Config(format!("unsupported schema {}", cfg.schema)));
        }
        if cfg.command == "run" {
            return Err(CliError::Config("a config cannot run another config".into()));
        }
        Ok(cfg)
    }

    /// Command line equivalent, program name first.
    pub fn argv(&self) -> Result<Vec<String>, CliError> {
        let mut v = vec!["bvs".to_string(), self.command.clone()];
        for (key, val) in &self.args {
            let flag = format!("--{key}");
            match val {
                Value::Bool(true) => v.push(flag),
                Value::Bool(false) | Value::Null => {}
                Value::String(s) => v.extend([flag, s.clone()]),
                Value::Number(n) => v.extend([flag, n.to_string()]),
                Value::Array(items) => {
                    let parts = items
                        .iter()
                        .map(|x| match x {
                            Value::Number(n) => Ok(n.to_string()),
                            Value::String(s) => Ok(s.clone()),
                            other => Err(CliError::Config(format!("{key}: unsupported list item {other}"))),
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    v.extend([flag, parts.join(",")]);
                }
                Value::Object(_) => v.extend([flag, val.to_string()]),
            }
        }
        if let Some(o) = &self.out {
            v.extend(["--out".into(), o.clone()]);
        }
        if let Some(f) = self.format {
            v.extend(["--format".into(), if f == Format::Json { "json" } else { "csv" }.into()]);
        }
        if let Some(s) = self.seed {
            v.extend(["--seed".into(), s.to_string()]);
        }
        if let Some(t) = self.threads {
            v.extend(["--threads".into(), t.to_string()]);
        }
        Ok(v)
    }
}
