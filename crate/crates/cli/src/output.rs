use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Writes a file by streaming into a temporary sibling and renaming it into
/// place, so readers never observe a partial file.
pub fn write_atomic<F>(path: &Path, write: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<()>,
{
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp-{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    let result = (|| -> Result<()> {
        let file = File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
        let mut w = BufWriter::new(file);
        write(&mut w)?;
        w.flush().with_context(|| format!("writing {}", tmp.display()))?;
        w.get_ref()
            .sync_all()
            .with_context(|| format!("syncing {}", tmp.display()))?;
        Ok(())
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(e);
    }
    fs::rename(&tmp, path).with_context(|| format!("renaming {} to {}", tmp.display(), path.display()))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = file
            .read(&mut buf)
            .with_context(|| format!("reading {}", path.display()))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to re-run a command and check its outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'static str,
    pub config_file: Option<String>,
    pub parameters: serde_json::Value,
    pub seed: Option<u64>,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
    pub started_at: String,
    pub finished_at: String,
}

/// Collects inputs and outputs of one run and writes its manifest.
pub struct Run {
    subcommand: &'static str,
    config_file: Option<PathBuf>,
    started_at: String,
    inputs: Vec<InputDigest>,
    outputs: Vec<PathBuf>,
}

fn now_rfc3339() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

impl Run {
    pub fn start(subcommand: &'static str, config_file: Option<PathBuf>) -> Self {
        Self {
            subcommand,
            config_file,
            started_at: now_rfc3339(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256: sha256_file(path)?,
        });
        Ok(())
    }

    /// Writes `path` atomically and records it as an output.
    pub fn output<F>(&mut self, path: &Path, write: F) -> Result<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<()>,
    {
        write_atomic(path, write)?;
        self.outputs.push(path.to_path_buf());
        Ok(())
    }

    fn manifest(self, parameters: serde_json::Value, seed: Option<u64>) -> RunManifest {
        RunManifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            subcommand: self.subcommand,
            config_file: self.config_file.map(|p| p.display().to_string()),
            parameters,
            seed,
            inputs: self.inputs,
            outputs: self.outputs.iter().map(|p| p.display().to_string()).collect(),
            started_at: self.started_at,
            finished_at: now_rfc3339(),
        }
    }

    /// Writes the manifest to `<primary>.manifest.json`.
    pub fn finish(self, primary: &Path, parameters: impl Serialize, seed: Option<u64>) -> Result<PathBuf> {
        let path = manifest_path(primary);
        let manifest = self.manifest(serde_json::to_value(parameters)?, seed);
        write_atomic(&path, |w| {
            serde_json::to_writer_pretty(&mut *w, &manifest)?;
            writeln!(w)?;
            Ok(())
        })?;
        Ok(path)
    }

    /// For runs without output files: the manifest goes to stderr as one
    /// JSON line.
    pub fn finish_to_stderr(self, parameters: impl Serialize, seed: Option<u64>) -> Result<()> {
        let manifest = self.manifest(serde_json::to_value(parameters)?, seed);
        eprintln!("manifest: {}", serde_json::to_string(&manifest)?);
        Ok(())
    }
}

pub fn manifest_path(primary: &Path) -> PathBuf {
    let mut s = primary.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}
