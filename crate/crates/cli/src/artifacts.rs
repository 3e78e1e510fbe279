//! Staged artifact writing: files land in a hidden sibling directory and are
//! renamed into place only once everything has been written.

use std::fs;
use std::path::{Path, PathBuf};

use krylov_toda::io::Table;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const MANIFEST: &str = "manifest.json";

pub enum Content {
    Csv(Table),
    Json(Value),
}

pub struct Artifact {
    pub name: String,
    pub content: Content,
    /// Parameters that produced the file, recorded in the manifest.
    pub params: Value,
}

impl Artifact {
    pub fn csv(name: &str, table: Table, params: Value) -> Self {
        Artifact { name: name.into(), content: Content::Csv(table), params }
    }

    pub fn json<T: Serialize>(name: &str, value: &T, params: Value) -> Result<Self, CliError> {
        let v = serde_json::to_value(value).map_err(anyhow::Error::from)?;
        Ok(Artifact { name: name.into(), content: Content::Json(v), params })
    }

    fn bytes(&self) -> Vec<u8> {
        match &self.content {
            Content::Csv(t) => t.to_csv_string().into_bytes(),
            Content::Json(v) => {
                let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
                s.push('\n');
                s.into_bytes()
            }
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes `artifacts` plus a manifest to `out`, replacing an earlier run's
/// output there. Nothing is left behind on failure.
pub fn commit(out: &Path, artifacts: &[Artifact], header: Value) -> Result<PathBuf, CliError> {
    if out.exists() && !replaceable(out)? {
        return Err(CliError::Config(format!(
            "{} exists and does not hold a previous run's output",
            out.display()
        )));
    }
    let parent = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&parent)?;
    let staging = tempfile::Builder::new().prefix(".krylov-toda-staging-").tempdir_in(&parent)?;

    let mut files = Vec::with_capacity(artifacts.len());
    for a in artifacts {
        let bytes = a.bytes();
        fs::write(staging.path().join(&a.name), &bytes)?;
        let mut entry = json!({
            "name": a.name,
            "sha256": sha256_hex(&bytes),
            "parameters": a.params,
        });
        if let Content::Csv(t) = &a.content {
            entry["rows"] = json!(t.len());
            entry["columns"] = json!(t.columns());
        }
        files.push(entry);
    }
    let mut manifest = header;
    manifest["files"] = Value::Array(files);
    let mut text = serde_json::to_string_pretty(&manifest).map_err(anyhow::Error::from)?;
    text.push('\n');
    fs::write(staging.path().join(MANIFEST), text)?;

    if out.exists() {
        fs::remove_dir_all(out)?;
    }
    let kept = staging.keep();
    if let Err(e) = fs::rename(&kept, out) {
        let _ = fs::remove_dir_all(&kept);
        return Err(e.into());
    }
    Ok(out.join(MANIFEST))
}

fn replaceable(dir: &Path) -> Result<bool, CliError> {
    if !dir.is_dir() {
        return Ok(false);
    }
    Ok(dir.join(MANIFEST).is_file() || fs::read_dir(dir)?.next().is_none())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> Table {
        let mut t = Table::new(["x"]);
        t.push(vec![1.0]).unwrap();
        t
    }

    #[test]
    fn commits_and_replaces() {
        let tmp = tempfile::tempdir().unwrap();
        let out = tmp.path().join("run");
        let a = [Artifact::csv("a.csv", table(), json!({}))];
        commit(&out, &a, json!({"command": "test"})).unwrap();
        let m: Value = serde_json::from_str(&fs::read_to_string(out.join(MANIFEST)).unwrap()).unwrap();
        assert_eq!(m["files"][0]["rows"], 1);
        assert_eq!(m["files"][0]["sha256"], sha256_hex(b"x\n1.0000000000000000e0\n"));
        commit(&out, &a, json!({})).unwrap();
        // only the output directory remains next to the staging area
        assert_eq!(fs::read_dir(tmp.path()).unwrap().count(), 1);
    }

    #[test]
    fn refuses_foreign_directories() {
        let tmp = tempfile::tempdir().unwrap();
        fs::write(tmp.path().join("keep.txt"), "x").unwrap();
        let err = commit(tmp.path(), &[], json!({})).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(tmp.path().join("keep.txt").exists());
    }
}
