//! Output writing with a content-hash manifest.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const MANIFEST: &str = "manifest.json";

#[derive(Serialize)]
struct InputEntry {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct FileEntry {
    path: String,
    sha256: String,
    bytes: usize,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    inputs: &'a [InputEntry],
    files: &'a [FileEntry],
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Collects the files a command writes. When an output directory is set,
/// relative names resolve under it and `finish` writes `manifest.json` there.
pub struct Outputs {
    command: String,
    dir: Option<PathBuf>,
    seed: Option<u64>,
    inputs: Vec<InputEntry>,
    files: Vec<FileEntry>,
}

impl Outputs {
    pub fn new(command: &str, dir: Option<&Path>) -> Result<Outputs> {
        if let Some(d) = dir {
            fs::create_dir_all(d).with_context(|| format!("creating {}", d.display()))?;
        }
        Ok(Outputs { command: command.into(), dir: dir.map(Path::to_path_buf), seed: None, inputs: Vec::new(), files: Vec::new() })
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = Some(seed);
    }

    /// Records an input file and its hash.
    pub fn input(&mut self, path: &Path) -> Result<()> {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.inputs.push(InputEntry { path: path.display().to_string(), sha256: sha256_hex(&bytes) });
        Ok(())
    }

    pub fn resolve(&self, name: &Path) -> PathBuf {
        match &self.dir {
            Some(d) if name.is_relative() => d.join(name),
            _ => name.to_path_buf(),
        }
    }

    pub fn write(&mut self, name: impl AsRef<Path>, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.resolve(name.as_ref());
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        let shown = match &self.dir {
            Some(d) => path.strip_prefix(d).unwrap_or(&path).to_path_buf(),
            None => path.clone(),
        };
        self.files.push(FileEntry { path: shown.to_string_lossy().replace('\\', "/"), sha256: sha256_hex(bytes), bytes: bytes.len() });
        Ok(path)
    }

    pub fn finish(self) -> Result<()> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let manifest = Manifest { command: &self.command, seed: self.seed, inputs: &self.inputs, files: &self.files };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        let path = dir.join(MANIFEST);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}
