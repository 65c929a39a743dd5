//! Merging a `--config` JSON object into the argument list.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

use serde_json::Value;

use crate::error::CliError;

/// Returns the value of the first `--config` flag, if any.
pub fn config_path(argv: &[OsString]) -> Option<OsString> {
    let mut iter = argv.iter();
    while let Some(arg) = iter.next() {
        let s = arg.to_string_lossy();
        if s == "--config" {
            return iter.next().cloned();
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(v.into());
        }
    }
    None
}

/// Inserts flags from the config file right after the subcommand name, so
/// that flags given on the command line take precedence. Keys already
/// present on the command line are skipped.
pub fn merge(argv: Vec<OsString>, path: &Path) -> Result<Vec<OsString>, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}:{}: {}", path.display(), e.line(), e)))?;
    let Value::Object(map) = value else {
        return Err(CliError::Usage(format!("{}: expected a JSON object", path.display())));
    };
    let given: Vec<String> = argv
        .iter()
        .filter_map(|a| a.to_str())
        .filter_map(|a| a.strip_prefix("--"))
        .map(|a| a.split('=').next().unwrap_or(a).to_string())
        .collect();
    let mut extra = Vec::new();
    for (key, val) in map {
        let flag = key.replace('_', "-");
        if flag == "config" || given.contains(&flag) {
            continue;
        }
        let rendered = match val {
            Value::Bool(true) => {
                extra.push(format!("--{flag}"));
                continue;
            }
            Value::Bool(false) | Value::Null => continue,
            Value::String(s) => s,
            Value::Number(n) => n.to_string(),
            Value::Array(items) => items
                .iter()
                .map(|v| match v {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                })
                .collect::<Vec<_>>()
                .join(","),
            Value::Object(_) => return Err(CliError::Usage(format!("config key `{key}` holds an object"))),
        };
        extra.push(format!("--{flag}"));
        extra.push(rendered);
    }
    // argv[0] is the program; the subcommand is the first bare word after it.
    let at =
        argv.iter().skip(1).position(|a| !a.to_string_lossy().starts_with('-')).map(|p| p + 2).unwrap_or(argv.len());
    let mut out = argv[..at.min(argv.len())].to_vec();
    out.extend(extra.into_iter().map(OsString::from));
    out.extend_from_slice(&argv[at.min(argv.len())..]);
    Ok(out)
}
