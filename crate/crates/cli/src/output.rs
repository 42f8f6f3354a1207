//! Staged output files: everything is written into a private directory and
//! only moved next to the manifest once the whole run has succeeded.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};

use crate::settings::Settings;

pub const MANIFEST: &str = "manifest.txt";

pub struct OutputSet {
    dir: PathBuf,
    staging: PathBuf,
    files: Vec<String>,
    started: Instant,
    committed: bool,
}

impl OutputSet {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let staging = dir.join(format!(".staging-{}", std::process::id()));
        fs::create_dir_all(&staging).with_context(|| format!("creating {}", staging.display()))?;
        Ok(Self { dir: dir.to_path_buf(), staging, files: Vec::new(), started: Instant::now(), committed: false })
    }

    /// Write a CSV with `header` and one line per row.
    pub fn csv<I>(&mut self, name: &str, header: &str, rows: I) -> Result<()>
    where
        I: IntoIterator<Item = String>,
    {
        let path = self.staging.join(name);
        let mut f = std::io::BufWriter::new(fs::File::create(&path).with_context(|| format!("creating {name}"))?);
        writeln!(f, "{header}")?;
        for row in rows {
            writeln!(f, "{row}")?;
        }
        f.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// Move staged files into place, then write the manifest last.
    pub fn commit(mut self, command: &str, settings: &Settings) -> Result<Vec<PathBuf>> {
        let mut placed = Vec::new();
        for name in &self.files {
            let target = self.dir.join(name);
            fs::rename(self.staging.join(name), &target).with_context(|| format!("moving {name} into place"))?;
            placed.push(target);
        }
        let mut text = format!(
            "tool_version = {}\ncommand = {command}\nwall_time_s = {:.3}\noutputs = {}\n",
            env!("CARGO_PKG_VERSION"),
            self.started.elapsed().as_secs_f64(),
            self.files.join(",")
        );
        text.push_str(&settings.render());
        let tmp = self.staging.join(MANIFEST);
        fs::write(&tmp, text)?;
        let target = self.dir.join(MANIFEST);
        fs::rename(&tmp, &target)?;
        placed.push(target);
        fs::remove_dir(&self.staging).ok();
        self.committed = true;
        Ok(placed)
    }
}

impl Drop for OutputSet {
    fn drop(&mut self) {
        if !self.committed {
            fs::remove_dir_all(&self.staging).ok();
        }
    }
}

/// Linear power to dB; zero becomes the literal `-inf`.
pub fn fmt_db(x: f64) -> String {
    if x == 0.0 {
        "-inf".into()
    } else {
        format!("{}", 10.0 * x.log10())
    }
}
