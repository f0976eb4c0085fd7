//! Subcommands of the `fastconv` binary.
//!
//! Every subcommand resolves its options from an optional JSON file plus
//! flags (flags win), runs, and returns an [`Outcome`]: a JSON report for
//! stdout, the resolved options, and whether its checks passed. Feeding the
//! resolved options back through `--config` repeats the run exactly.

use std::fs;
use std::path::Path;

use anyhow::Context;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

pub mod audit;
pub mod bench;
pub mod check;
pub mod run;
pub mod slices;
pub mod synth;

pub struct Outcome {
    pub report: Value,
    pub resolved: Value,
    pub passed: bool,
}

impl Outcome {
    pub fn new<C: Serialize, R: Serialize>(
        command: &str,
        config: &C,
        report: &R,
        passed: bool,
    ) -> anyhow::Result<Self> {
        let resolved = resolved(command, config)?;
        let report = json!({
            "command": command,
            "passed": passed,
            "config": resolved,
            "report": serde_json::to_value(report)?,
        });
        Ok(Outcome {
            report,
            resolved,
            passed,
        })
    }
}

/// The options of a run tagged with its subcommand name.
pub fn resolved<C: Serialize>(command: &str, config: &C) -> anyhow::Result<Value> {
    let mut value = serde_json::to_value(config)?;
    if let Value::Object(map) = &mut value {
        map.insert("command".into(), Value::String(command.into()));
    }
    Ok(value)
}

/// Options from a JSON file, or the defaults. A `command` key, as written in
/// resolved configs, must match when present.
pub fn load_config<C: DeserializeOwned + Default>(
    path: Option<&Path>,
    command: &str,
) -> anyhow::Result<C> {
    let Some(path) = path else {
        return Ok(C::default());
    };
    let text =
        fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let mut value: Value = serde_json::from_str(&text)
        .with_context(|| format!("parsing config {}", path.display()))?;
    if let Value::Object(map) = &mut value {
        if let Some(tag) = map.remove("command") {
            anyhow::ensure!(
                tag.as_str() == Some(command),
                "config {} is for command {tag}, not {command:?}",
                path.display()
            );
        }
    }
    serde_json::from_value(value).with_context(|| {
        format!(
            "config {} does not describe a {command} run",
            path.display()
        )
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Parses `a,b,c` into exactly `N` unsigned integers.
pub fn parse_dims<const N: usize>(s: &str) -> Result<[usize; N], String> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    parts
        .try_into()
        .map_err(|v: Vec<usize>| format!("expected {N} comma-separated values, got {}", v.len()))
}
