//! Run manifest and hash-stamped output files.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use qlbm::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub instance: Option<String>,
    pub config_path: Option<String>,
    pub config_sha256: Option<String>,
    pub overrides: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    /// Always empty: the pipeline draws no random numbers.
    pub seed: Option<u64>,
    pub tool_version: String,
}

impl RunManifest {
    pub fn sha256(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("manifest serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

enum Body {
    Json(Value),
    /// Text with a line-comment prefix for the hash header.
    Text(&'static str, String),
}

pub struct Output {
    pub name: String,
    body: Body,
}

impl Output {
    pub fn json(name: &str, v: Value) -> Self {
        Self { name: name.into(), body: Body::Json(v) }
    }

    pub fn csv(name: &str, s: String) -> Self {
        Self { name: name.into(), body: Body::Text("#", s) }
    }

    pub fn coo(name: &str, s: String) -> Self {
        Self { name: name.into(), body: Body::Text("%", s) }
    }

    fn render(&self, hash: &str) -> Result<String> {
        Ok(match &self.body {
            Body::Json(v) => {
                let doc = json!({"manifest_sha256": hash, "report": v});
                let mut s = serde_json::to_string_pretty(&doc).map_err(|e| Error::Numerical(e.to_string()))?;
                s.push('\n');
                s
            }
            Body::Text(prefix, s) => format!("{prefix} manifest_sha256={hash}\n{s}"),
        })
    }
}

pub fn write_all(out: &Path, manifest: &RunManifest, outputs: &[Output]) -> Result<()> {
    let io = |e: std::io::Error| Error::Config(format!("cannot write to {}: {e}", out.display()));
    fs::create_dir_all(out).map_err(io)?;
    let hash = manifest.sha256();
    for o in outputs {
        fs::write(out.join(&o.name), o.render(&hash)?).map_err(io)?;
    }
    let m = json!({"manifest": manifest, "sha256": hash});
    let mut s = serde_json::to_string_pretty(&m).map_err(|e| Error::Numerical(e.to_string()))?;
    s.push('\n');
    fs::write(out.join("manifest.json"), s).map_err(io)?;
    Ok(())
}
