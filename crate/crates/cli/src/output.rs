//! All-or-nothing output: files are staged next to their targets and only
//! renamed into place once every stage has succeeded.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use tempfile::NamedTempFile;

#[derive(Default)]
pub struct OutputSet {
    staged: Vec<(NamedTempFile, PathBuf)>,
    created_dirs: Vec<PathBuf>,
}

impl OutputSet {
    pub fn new() -> Self {
        Self::default()
    }

    fn ensure_dir(&mut self, dir: &Path) -> Result<()> {
        let mut missing = Vec::new();
        let mut cur = Some(dir);
        while let Some(d) = cur.filter(|d| !d.as_os_str().is_empty() && !d.exists()) {
            missing.push(d.to_path_buf());
            cur = d.parent();
        }
        for d in missing.into_iter().rev() {
            fs::create_dir(&d).with_context(|| format!("creating {}", d.display()))?;
            self.created_dirs.push(d);
        }
        Ok(())
    }

    pub fn add(&mut self, path: &Path, contents: &str) -> Result<()> {
        let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        self.ensure_dir(dir)?;
        let mut tmp = NamedTempFile::new_in(dir).with_context(|| format!("staging {}", path.display()))?;
        tmp.write_all(contents.as_bytes()).with_context(|| format!("staging {}", path.display()))?;
        self.staged.push((tmp, path.to_path_buf()));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.staged.len()
    }

    pub fn is_empty(&self) -> bool {
        self.staged.is_empty()
    }

    pub fn commit(mut self) -> Result<Vec<PathBuf>> {
        let mut written = Vec::new();
        for (tmp, path) in std::mem::take(&mut self.staged) {
            tmp.as_file().sync_all().with_context(|| format!("writing {}", path.display()))?;
            tmp.persist(&path).with_context(|| format!("writing {}", path.display()))?;
            written.push(path);
        }
        self.created_dirs.clear();
        Ok(written)
    }
}

impl Drop for OutputSet {
    fn drop(&mut self) {
        self.staged.clear();
        for d in self.created_dirs.iter().rev() {
            let _ = fs::remove_dir(d);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn abandoned_set_leaves_nothing() {
        let root = tempfile::tempdir().unwrap();
        let out = root.path().join("a/b");
        {
            let mut set = OutputSet::new();
            set.add(&out.join("x.tsv"), "x").unwrap();
            set.add(&out.join("y.tsv"), "y").unwrap();
        }
        assert!(!root.path().join("a").exists());
        let mut set = OutputSet::new();
        set.add(&out.join("x.tsv"), "x").unwrap();
        set.commit().unwrap();
        assert_eq!(fs::read_to_string(out.join("x.tsv")).unwrap(), "x");
        assert_eq!(fs::read_dir(&out).unwrap().count(), 1);
    }
}
