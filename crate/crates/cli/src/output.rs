use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct ExperimentManifest {
    pub command: String,
    pub inputs: Vec<String>,
    pub seed: u64,
    pub output_dir: String,
    pub overrides: BTreeMap<String, String>,
    pub version: String,
}

/// A fresh `out/<command>/<name>/` directory. An existing directory is never
/// reused; a numeric suffix is appended instead.
pub struct RunDir {
    pub path: PathBuf,
    manifest: ExperimentManifest,
}

impl RunDir {
    pub fn create(root: &Path, command: &str, name: Option<&str>, seed: u64) -> Result<Self> {
        let base = match name {
            Some(n) => n.to_string(),
            None => SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
                .to_string(),
        };
        let parent = root.join(command);
        fs::create_dir_all(&parent).with_context(|| format!("creating {}", parent.display()))?;
        let mut path = parent.join(&base);
        let mut k = 1;
        loop {
            match fs::create_dir(&path) {
                Ok(()) => break,
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                    path = parent.join(format!("{base}-{k}"));
                    k += 1;
                }
                Err(e) => return Err(e).with_context(|| format!("creating {}", path.display())),
            }
        }
        let manifest = ExperimentManifest {
            command: command.to_string(),
            inputs: Vec::new(),
            seed,
            output_dir: path.display().to_string(),
            overrides: BTreeMap::new(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        };
        Ok(Self { path, manifest })
    }

    pub fn input(&mut self, path: impl Into<String>) {
        self.manifest.inputs.push(path.into());
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.manifest.overrides.insert(key.to_string(), value.to_string());
    }

    pub fn seed(&self) -> u64 {
        self.manifest.seed
    }

    pub fn write(&self, file: &str, contents: &str) -> Result<PathBuf> {
        let p = self.path.join(file);
        fs::write(&p, contents).with_context(|| format!("writing {}", p.display()))?;
        Ok(p)
    }

    /// Writes `value` as pretty JSON with the run seed added at top level.
    pub fn write_json(&self, file: &str, value: serde_json::Value) -> Result<PathBuf> {
        let mut value = value;
        if let serde_json::Value::Object(map) = &mut value {
            map.insert("seed".into(), self.seed().into());
        }
        self.write(file, &(serde_json::to_string_pretty(&value)? + "\n"))
    }

    pub fn finish(self) -> Result<PathBuf> {
        let text = serde_json::to_string_pretty(&self.manifest)? + "\n";
        fs::write(self.path.join("manifest.json"), text)?;
        Ok(self.path)
    }
}

/// Appends `row` to the CSV at `path`, writing `header` first if the file
/// is new or empty.
pub fn append_csv(path: &Path, header: &str, row: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let fresh = fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let mut f = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .with_context(|| format!("opening {}", path.display()))?;
    if fresh {
        writeln!(f, "{header}")?;
    }
    writeln!(f, "{row}")?;
    Ok(())
}
