//! Atomic, hash-stamped output files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::CliError;

/// Magic of binary outputs; followed by the 64-byte hex config hash and the payload.
pub const BINARY_MAGIC: &[u8; 8] = b"SDRCCFG\0";

#[derive(Debug, Clone, PartialEq)]
pub enum Body {
    /// CSV text; a `# config_hash=` line is prepended.
    Csv(String),
    /// JSON object; a `config_hash` key is added.
    Json(Value),
    /// Binary payload; the magic and hash are prepended.
    Binary(Vec<u8>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub body: Body,
}

impl Artifact {
    pub fn csv(name: impl Into<String>, text: String) -> Self {
        Self { name: name.into(), body: Body::Csv(text) }
    }

    pub fn json(name: impl Into<String>, value: Value) -> Self {
        Self { name: name.into(), body: Body::Json(value) }
    }

    pub fn binary(name: impl Into<String>, bytes: Vec<u8>) -> Self {
        Self { name: name.into(), body: Body::Binary(bytes) }
    }

    /// Final file bytes for a given config hash.
    pub fn render(&self, hash: &str) -> Vec<u8> {
        match &self.body {
            Body::Csv(text) => format!("# config_hash={hash}\n{text}").into_bytes(),
            Body::Json(value) => {
                let mut v = value.clone();
                if let Value::Object(map) = &mut v {
                    map.insert("config_hash".into(), Value::String(hash.into()));
                }
                let mut s = serde_json::to_string_pretty(&v).expect("json value");
                s.push('\n');
                s.into_bytes()
            }
            Body::Binary(bytes) => {
                let mut out = Vec::with_capacity(8 + hash.len() + bytes.len());
                out.extend_from_slice(BINARY_MAGIC);
                out.extend_from_slice(hash.as_bytes());
                out.extend_from_slice(bytes);
                out
            }
        }
    }
}

/// Splits a binary output into its config hash and payload.
pub fn read_binary(bytes: &[u8]) -> Option<(&str, &[u8])> {
    let rest = bytes.strip_prefix(BINARY_MAGIC.as_slice())?;
    if rest.len() < 64 {
        return None;
    }
    let (hash, payload) = rest.split_at(64);
    Some((std::str::from_utf8(hash).ok()?, payload))
}

fn check_name(name: &str) -> Result<(), CliError> {
    let ok = !name.is_empty()
        && !name.starts_with('.')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'));
    if ok {
        Ok(())
    } else {
        Err(CliError::Runtime(format!("refusing output name {name:?}")))
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Files written under one root directory, in order.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    hash: String,
    files: Vec<(String, String, usize)>,
}

impl OutputDir {
    pub fn create(root: &Path, hash: &str) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::Runtime(format!("{}: {e}", root.display())))?;
        Ok(Self { root: root.to_path_buf(), hash: hash.to_string(), files: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        check_name(name)?;
        let target = self.root.join(name);
        let tmp = self.root.join(format!(".{name}.tmp"));
        let io = |e: std::io::Error| CliError::Runtime(format!("{}: {e}", target.display()));
        {
            let mut f = fs::File::create(&tmp).map_err(io)?;
            f.write_all(bytes).map_err(io)?;
            f.sync_all().map_err(io)?;
        }
        fs::rename(&tmp, &target).map_err(|e| {
            let _ = fs::remove_file(&tmp);
            io(e)
        })?;
        self.files.push((name.to_string(), sha256_hex(bytes), bytes.len()));
        Ok(())
    }

    pub fn write(&mut self, artifact: &Artifact) -> Result<(), CliError> {
        let bytes = artifact.render(&self.hash);
        self.write_bytes(&artifact.name, &bytes)
    }

    /// The effective configuration, so the run can be repeated from the output alone.
    pub fn write_config(&mut self, cfg: &ExperimentConfig) -> Result<(), CliError> {
        let mut c = cfg.clone();
        c.output_dir = None;
        let text = toml::to_string(&c).map_err(|e| CliError::Runtime(format!("config.toml: {e}")))?;
        let bytes = format!("# config_hash={}\n{text}", self.hash).into_bytes();
        self.write_bytes("config.toml", &bytes)
    }

    /// Writes `manifest.json` listing every file with its digest.
    pub fn finish(mut self, command: &str) -> Result<(), CliError> {
        let files: Vec<Value> = self
            .files
            .iter()
            .map(|(name, digest, size)| json!({ "name": name, "sha256": digest, "bytes": size }))
            .collect();
        let manifest = Artifact::json(
            "manifest.json",
            json!({ "command": command, "version": env!("CARGO_PKG_VERSION"), "files": files }),
        );
        self.write(&manifest)
    }
}
