use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

use msic_core::Instance;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const TOOL: &str = "msic";

/// Machine-readable record of one invocation.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: CommandEcho,
    /// SHA-256 of the canonical serialization, absent for `gen` failures.
    pub instance_digest: Option<String>,
    pub exit_code: i32,
    pub results: Value,
    /// Milliseconds per phase.
    pub timings: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CommandEcho {
    pub name: String,
    pub args: Vec<String>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }
}

pub fn digest(inst: &Instance) -> String {
    format!("{:x}", Sha256::digest(inst.serialize().as_bytes()))
}

pub fn millis(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

pub fn write_file(path: &Path, contents: &str) -> std::io::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, contents)
}
