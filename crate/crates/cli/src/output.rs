use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const SCHEMA: &str = "v1";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Pass/fail evidence for one acceptance criterion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub criterion: usize,
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(criterion: usize, name: &str, pass: bool, detail: impl Into<String>) -> Check {
        Check { criterion, name: name.into(), pass, detail: detail.into() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Artifact {
    pub schema: String,
    pub command: String,
    pub version: String,
    pub config_fingerprint: String,
    pub config: serde_json::Value,
    pub status: String,
    #[serde(default)]
    pub checks: Vec<Check>,
    pub result: serde_json::Value,
}

/// Time-dependent facts, kept apart so reruns give identical artifacts.
#[derive(Serialize)]
struct Sidecar<'a> {
    artifact: &'a str,
    created_unix_s: u64,
    elapsed_s: f64,
}

pub fn fingerprint(command: &str, config: &serde_json::Value) -> String {
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    h.update([0]);
    h.update(serde_json::to_vec(config).expect("json value serializes"));
    h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

pub fn artifact(
    command: &str,
    config: serde_json::Value,
    ok: bool,
    checks: Vec<Check>,
    result: serde_json::Value,
) -> Artifact {
    Artifact {
        schema: SCHEMA.into(),
        command: command.into(),
        version: VERSION.into(),
        config_fingerprint: fingerprint(command, &config),
        config,
        status: if ok { "ok" } else { "failed" }.into(),
        checks,
        result,
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_stem().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".meta.json");
    path.with_file_name(name)
}

pub fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Config(format!("cannot create output directory {}: {e}", dir.display())))?;
    }
    let f = File::create(path).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
    Ok(BufWriter::new(f))
}

pub fn write_artifact(path: &Path, a: &Artifact, elapsed: Duration) -> Result<(), CliError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, a)?;
    w.write_all(b"\n")?;
    w.flush()?;
    let side = Sidecar {
        artifact: path.file_name().and_then(|s| s.to_str()).unwrap_or(""),
        created_unix_s: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        elapsed_s: elapsed.as_secs_f64(),
    };
    let mut w = create(&sidecar_path(path))?;
    serde_json::to_writer_pretty(&mut w, &side)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}
