use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// An output directory that is cleaned up unless the run commits.
///
/// Files written through it are removed on drop, and so is the directory
/// if this run created it. Inputs registered up front are never
/// overwritten.
pub struct Outputs {
    dir: PathBuf,
    created: bool,
    written: Vec<PathBuf>,
    inputs: Vec<PathBuf>,
    committed: bool,
}

impl Outputs {
    pub fn create(dir: &Path, inputs: &[&Path]) -> Result<Self> {
        if dir.exists() && !dir.is_dir() {
            return Err(Error::Usage(format!("output path {} is not a directory", dir.display())));
        }
        let created = !dir.exists();
        if created {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        Ok(Outputs {
            dir: dir.to_path_buf(),
            created,
            written: Vec::new(),
            inputs: inputs.iter().filter_map(|p| fs::canonicalize(p).ok()).collect(),
            committed: false,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.path(name);
        if let Ok(existing) = fs::canonicalize(&path) {
            if self.inputs.contains(&existing) {
                return Err(Error::Usage(format!("refusing to overwrite input {}", path.display())));
            }
        }
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    pub fn commit(mut self) {
        self.committed = true;
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for p in &self.written {
            let _ = fs::remove_file(p);
        }
        if self.created {
            let _ = fs::remove_dir_all(&self.dir);
        }
    }
}
