//! Config resolution, content hashing and the output envelope.

use std::fmt::Display;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

/// Overrides the built-in default seed; config files and `--seed` still win.
pub const SEED_ENV: &str = "GEOLOCAL_SEED";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

pub(crate) fn usage(e: impl Display) -> CliError {
    CliError::Usage(e.to_string())
}

pub(crate) fn internal(e: impl Display) -> CliError {
    CliError::Internal(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    PropertyFailure,
    /// The reduction failed at some stage; the report is still written.
    StageFailure,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::PropertyFailure => 1,
            Outcome::StageFailure => 3,
        }
    }

    pub fn from_pass(pass: bool) -> Self {
        if pass {
            Outcome::Pass
        } else {
            Outcome::PropertyFailure
        }
    }
}

/// What a command produced, before it is wrapped with its config.
#[derive(Debug, Clone)]
pub struct Run {
    pub outcome: Outcome,
    pub result: Value,
}

#[derive(Debug, Clone)]
pub struct Resolved<C> {
    pub config: C,
    pub value: Value,
    pub hash: String,
}

/// `sha256` over `config <len>\0<canonical json>`, in the manner of a git blob id.
pub fn content_hash(value: &Value) -> String {
    let body = serde_json::to_string(value).expect("json values serialize");
    let mut h = Sha256::new();
    h.update(format!("config {}\0", body.len()).as_bytes());
    h.update(body.as_bytes());
    let hex: String = h.finalize().iter().map(|b| format!("{b:02x}")).collect();
    format!("sha256:{hex}")
}

fn overlay(base: &mut Map<String, Value>, top: Map<String, Value>) {
    for (k, v) in top {
        if !v.is_null() {
            base.insert(k, v);
        }
    }
}

fn as_object(v: Value, what: &str) -> Result<Map<String, Value>, CliError> {
    match v {
        Value::Object(m) => Ok(m),
        other => Err(CliError::Usage(format!("{what} must be a JSON object, got {other}"))),
    }
}

pub fn env_seed() -> Result<Option<u64>, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s.trim().parse().map(Some).map_err(|e| CliError::Usage(format!("{SEED_ENV}={s}: {e}"))),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(usage(format!("{SEED_ENV}: {e}"))),
    }
}

/// Defaults, then the seed variable, then the config file, then flags.
pub fn resolve<C>(flags: Value, file: Option<&Path>, env_seed: Option<u64>) -> Result<Resolved<C>, CliError>
where
    C: Serialize + DeserializeOwned + Default,
{
    let mut merged = as_object(serde_json::to_value(C::default()).map_err(internal)?, "defaults")?;
    if let Some(seed) = env_seed {
        if merged.contains_key("seed") {
            merged.insert("seed".into(), json!(seed));
        }
    }
    if let Some(path) = file {
        let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        let parsed: Value = serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        overlay(&mut merged, as_object(parsed, "config file")?);
    }
    overlay(&mut merged, as_object(flags, "flags")?);
    let config: C = serde_json::from_value(Value::Object(merged)).map_err(usage)?;
    let value = serde_json::to_value(&config).map_err(internal)?;
    let hash = content_hash(&value);
    Ok(Resolved { config, value, hash })
}

pub fn document<C>(command: &str, resolved: &Resolved<C>, run: &Run) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": resolved.value,
        "config_hash": resolved.hash,
        "outcome": run.outcome,
        "result": run.result,
    })
}

pub fn write_document(doc: &Value, output: Option<&Path>) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(doc).map_err(internal)?;
    text.push('\n');
    match output {
        Some(p) => std::fs::write(p, text)?,
        None => {
            use std::io::Write;
            std::io::stdout().lock().write_all(text.as_bytes())?;
        }
    }
    Ok(())
}
