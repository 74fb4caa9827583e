//! Byte-level storage behind the pipeline, and the atomic commit of a set of
//! output files.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

/// Minimal file operations the pipeline needs. An object-store backend only has
/// to provide these.
pub trait Storage: Sync {
    fn read(&self, path: &Path) -> io::Result<Vec<u8>>;
    /// Writes the whole file, durably.
    fn write(&self, path: &Path, bytes: &[u8]) -> io::Result<()>;
    fn rename(&self, from: &Path, to: &Path) -> io::Result<()>;
    fn remove(&self, path: &Path) -> io::Result<()>;
    fn exists(&self, path: &Path) -> bool;
    fn create_dir_all(&self, path: &Path) -> io::Result<()>;
}

/// The local filesystem.
#[derive(Debug, Clone, Copy, Default)]
pub struct LocalStorage;

impl Storage for LocalStorage {
    fn read(&self, path: &Path) -> io::Result<Vec<u8>> {
        fs::read(path)
    }

    fn write(&self, path: &Path, bytes: &[u8]) -> io::Result<()> {
        let mut f = fs::File::create(path)?;
        f.write_all(bytes)?;
        f.sync_all()
    }

    fn rename(&self, from: &Path, to: &Path) -> io::Result<()> {
        fs::rename(from, to)
    }

    fn remove(&self, path: &Path) -> io::Result<()> {
        fs::remove_file(path)
    }

    fn exists(&self, path: &Path) -> bool {
        path.exists()
    }

    fn create_dir_all(&self, path: &Path) -> io::Result<()> {
        fs::create_dir_all(path)
    }
}

fn temp_path(target: &Path, tag: &str) -> PathBuf {
    let name = target
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    target.with_file_name(format!(".{name}.{tag}.tmp"))
}

/// Writes every `(path, bytes)` pair to a temporary sibling, then renames them
/// all into place.
///
/// On failure every temporary file is removed, as is every target that did
/// not exist before the call, so the directory is left with no new files.
/// Returns the failing path with the error.
pub fn commit(storage: &dyn Storage, files: &[(PathBuf, Vec<u8>)], tag: &str) -> Result<(), (PathBuf, io::Error)> {
    let mut temps: Vec<PathBuf> = Vec::new();
    let mut placed: Vec<PathBuf> = Vec::new();
    let fresh: Vec<bool> = files.iter().map(|(p, _)| !storage.exists(p)).collect();

    let result = (|| {
        for (path, bytes) in files {
            let tmp = temp_path(path, tag);
            temps.push(tmp.clone());
            storage.write(&tmp, bytes).map_err(|e| (path.clone(), e))?;
        }
        for ((path, _), tmp) in files.iter().zip(&temps) {
            storage.rename(tmp, path).map_err(|e| (path.clone(), e))?;
            placed.push(path.clone());
        }
        Ok(())
    })();

    if result.is_err() {
        for tmp in &temps {
            if storage.exists(tmp) {
                let _ = storage.remove(tmp);
            }
        }
        for (i, (path, _)) in files.iter().enumerate() {
            if fresh[i] && placed.contains(path) {
                let _ = storage.remove(path);
            }
        }
    }
    result
}
