//! Flag/config-file resolution and run manifests.
//!
//! Flags are serialized to a JSON object (unset flags omitted) and laid over
//! the config file, which is either a flat object or a previous run's
//! manifest. The merged object deserializes into the command's resolved
//! config, whose serde defaults supply everything else.

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.code)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<simt::Error> for CliError {
    fn from(e: simt::Error) -> Self {
        let code = if e.is_endpoint_failure() { 3 } else { 2 };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

fn load_config_file(path: &Path) -> Result<Map<String, Value>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    let Value::Object(mut obj) = value else {
        return Err(CliError::usage(format!("{}: config must be a JSON object", path.display())));
    };
    // A manifest carries the resolved config of the run it describes.
    if obj.contains_key("command") {
        if let Some(Value::Object(inner)) = obj.remove("config") {
            return Ok(inner);
        }
    }
    Ok(obj)
}

/// Merges `flags` and the global `--seed` over the optional config file and
/// deserializes the result.
pub fn resolve<T: DeserializeOwned>(
    flags: &impl Serialize,
    config: Option<&Path>,
    seed: Option<u64>,
) -> Result<T, CliError> {
    let mut merged = match config {
        Some(path) => load_config_file(path)?,
        None => Map::new(),
    };
    let Value::Object(flags) = serde_json::to_value(flags).expect("flags serialize") else {
        unreachable!("flag structs serialize to objects");
    };
    for (k, v) in flags {
        if !v.is_null() {
            merged.insert(k, v);
        }
    }
    if let Some(seed) = seed {
        merged.insert("seed".into(), seed.into());
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::usage(format!("configuration: {e}")))
}

/// Record of one command invocation, written next to its primary output.
pub struct Manifest {
    command: &'static str,
    started: Instant,
    config: Value,
    seed: Option<u64>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    report: Option<Value>,
}

impl Manifest {
    pub fn start(command: &'static str, config: &impl Serialize, seed: Option<u64>) -> Self {
        let config = serde_json::to_value(config).expect("configs serialize");
        Manifest {
            command,
            started: Instant::now(),
            config,
            seed,
            inputs: Vec::new(),
            outputs: Vec::new(),
            report: None,
        }
    }

    pub fn input(&mut self, path: &Path) -> &mut Self {
        self.inputs.push(path.to_owned());
        self
    }

    pub fn output(&mut self, path: &Path) -> &mut Self {
        self.outputs.push(path.to_owned());
        self
    }

    pub fn report(&mut self, report: &impl Serialize) -> &mut Self {
        self.report = Some(serde_json::to_value(report).expect("reports serialize"));
        self
    }

    /// Writes `<primary>.manifest.json` and returns its path.
    pub fn finish(&self, primary: &Path) -> Result<PathBuf, CliError> {
        let mut name = primary.as_os_str().to_owned();
        name.push(".manifest.json");
        let path = PathBuf::from(name);
        let paths = |v: &[PathBuf]| v.iter().map(|p| p.display().to_string()).collect::<Vec<_>>();
        let doc = serde_json::json!({
            "command": self.command,
            "tool_version": env!("CARGO_PKG_VERSION"),
            "seed": self.seed,
            "config": self.config,
            "inputs": paths(&self.inputs),
            "outputs": paths(&self.outputs),
            "duration_ms": self.started.elapsed().as_millis() as u64,
            "report": self.report,
        });
        let text = serde_json::to_string_pretty(&doc).expect("manifest serializes");
        std::fs::write(&path, text + "\n").map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        Ok(path)
    }
}
