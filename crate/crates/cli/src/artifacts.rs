//! Run-directory layout, atomic writes and the single-writer lock.

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;

use crate::CliError;

pub const LOCK_FILE: &str = ".uhisr.lock";
pub const LATENTS: &str = "latents.csv";
pub const EQUATIONS: &str = "equations.txt";
pub const REPORT: &str = "report.csv";
pub const STAGES: &str = "stages.csv";
pub const PREDICTIONS: &str = "predictions.csv";
pub const SUMMARY: &str = "summary.txt";

pub fn stage_params(n: usize) -> String {
    format!("stage{n}.params")
}

pub fn stage_manifest(n: usize) -> String {
    format!("stage{n}.manifest")
}

pub fn stage_history(n: usize) -> String {
    format!("stage{n}.history.csv")
}

pub fn frontier(level: &str) -> String {
    format!("frontier_{level}.txt")
}

pub fn level_equation(level: &str) -> String {
    format!("equation_{level}.txt")
}

pub fn probe_table(n: usize) -> String {
    format!("probe_stage{n}.csv")
}

/// Writes to a temporary sibling, syncs, then renames over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .context("artifact path has no file name")?
        .to_string_lossy();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let mut f = File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
    f.write_all(bytes)?;
    f.sync_all()?;
    drop(f);
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

/// Exclusive claim on a run directory, released on drop.
#[derive(Debug)]
pub struct RunLock {
    path: PathBuf,
}

impl RunLock {
    pub fn acquire(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(RunLock { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(CliError::Input(format!(
                    "{} is in use by another run (delete {} if that run is gone)",
                    dir.display(),
                    path.display()
                )))
            }
            Err(e) => Err(CliError::Other(
                anyhow::Error::new(e).context(format!("locking {}", dir.display())),
            )),
        }
    }
}

impl Drop for RunLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// Reads an artifact an earlier command should have produced.
pub fn read_required(path: &Path, hint: &str) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => {
            CliError::Missing(format!("missing artifact {} ({hint})", path.display()))
        }
        _ => CliError::Other(anyhow::Error::new(e).context(format!("reading {}", path.display()))),
    })
}
