//! Output bookkeeping: run manifests and removal of partial outputs on failure.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Replayable record of one command invocation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    /// Arguments after the program name, exactly as given.
    pub argv: Vec<String>,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, argv: &[String], seed: Option<u64>, config: impl Serialize) -> Result<Self> {
        Ok(RunManifest {
            command: command.to_string(),
            tool_version: TOOL_VERSION.to_string(),
            argv: argv.to_vec(),
            seed,
            config: serde_json::to_value(config)?,
            outputs: Vec::new(),
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))
    }
}

/// Tracks every file and directory a command creates so a failed command
/// leaves nothing behind.
#[derive(Debug, Default)]
pub struct Outputs {
    files: Vec<PathBuf>,
    dirs: Vec<PathBuf>,
}

impl Outputs {
    pub fn create_dir(&mut self, dir: &Path) -> Result<()> {
        let mut missing = Vec::new();
        let mut cur = Some(dir);
        while let Some(d) = cur {
            if d.as_os_str().is_empty() || d.exists() {
                break;
            }
            missing.push(d.to_path_buf());
            cur = d.parent();
        }
        for d in missing.into_iter().rev() {
            fs::create_dir(&d).with_context(|| format!("creating {}", d.display()))?;
            self.dirs.push(d);
        }
        Ok(())
    }

    pub fn write(&mut self, path: &Path, contents: &str) -> Result<()> {
        if let Some(parent) = path.parent() {
            self.create_dir(parent)?;
        }
        self.files.push(path.to_path_buf());
        fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
    }

    pub fn written(&self) -> Vec<String> {
        self.files.iter().map(|p| p.display().to_string()).collect()
    }

    /// Writes the manifest last, listing every output written before it.
    pub fn write_manifest(&mut self, path: &Path, mut manifest: RunManifest) -> Result<()> {
        manifest.outputs = self.written();
        manifest.outputs.push(path.display().to_string());
        let mut json = serde_json::to_string_pretty(&manifest)?;
        json.push('\n');
        self.write(path, &json)
    }

    pub fn remove_all(&mut self) {
        for f in self.files.drain(..).rev() {
            let _ = fs::remove_file(f);
        }
        for d in self.dirs.drain(..).rev() {
            let _ = fs::remove_dir(d);
        }
    }
}

/// `dir/s.xyz` → `dir/s.manifest.json`.
pub fn sidecar_manifest(path: &Path) -> PathBuf {
    path.with_extension("manifest.json")
}

/// `dir/s.xyz` → `dir/s_partial.xyz`.
pub fn partial_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}_partial.{}", ext.to_string_lossy()),
        None => format!("{stem}_partial"),
    };
    path.with_file_name(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_paths() {
        assert_eq!(partial_path(Path::new("a/s.xyz")), PathBuf::from("a/s_partial.xyz"));
        assert_eq!(partial_path(Path::new("s")), PathBuf::from("s_partial"));
        assert_eq!(sidecar_manifest(Path::new("a/s.xyz")), PathBuf::from("a/s.manifest.json"));
    }

    #[test]
    fn failed_outputs_are_removed() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("x/y");
        let mut out = Outputs::default();
        out.write(&dir.join("a.txt"), "a").unwrap();
        assert!(dir.join("a.txt").exists());
        out.remove_all();
        assert!(!tmp.path().join("x").exists());
        assert!(tmp.path().exists());
    }
}
