//! Exit-coded failures and a write-once output directory.

use std::fs::{self, File, OpenOptions};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use trajmode::Error;

/// Exit code 1: configuration or schema problem.
pub const EXIT_CONFIG: u8 = 1;
/// Exit code 2: missing or unusable data.
pub const EXIT_DATA: u8 = 2;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Self { code: EXIT_CONFIG, message: message.into() }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self { code: EXIT_DATA, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) | Error::MissingColumn(_) => EXIT_CONFIG,
            _ => EXIT_DATA,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::data(e.to_string())
    }
}

/// Output directory whose files are created once and never replaced.
pub struct OutDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, Failure> {
        fs::create_dir_all(root)
            .map_err(|e| Failure::config(format!("cannot create output directory {}: {e}", root.display())))?;
        Ok(Self { root: root.to_path_buf(), written: Vec::new() })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }

    /// Fails if `name` already exists.
    pub fn file(&mut self, name: &str) -> Result<BufWriter<File>, Failure> {
        let path = self.root.join(name);
        let f = OpenOptions::new().write(true).create_new(true).open(&path).map_err(|e| {
            if e.kind() == io::ErrorKind::AlreadyExists {
                Failure::config(format!("refusing to overwrite {}", path.display()))
            } else {
                Failure::config(format!("cannot create {}: {e}", path.display()))
            }
        })?;
        self.written.push(name.to_string());
        Ok(BufWriter::new(f))
    }

    /// Fail early, before any work, if any of `names` exists.
    pub fn ensure_free(&self, names: &[&str]) -> Result<(), Failure> {
        for n in names {
            let p = self.root.join(n);
            if p.exists() {
                return Err(Failure::config(format!("refusing to overwrite {}", p.display())));
            }
        }
        Ok(())
    }

    pub fn write_with(
        &mut self,
        name: &str,
        f: impl FnOnce(&mut BufWriter<File>) -> trajmode::Result<()>,
    ) -> Result<(), Failure> {
        let mut w = self.file(name)?;
        f(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn write_json<T: serde::Serialize>(&mut self, name: &str, value: &T) -> Result<(), Failure> {
        self.write_with(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            w.write_all(b"\n")?;
            Ok(())
        })
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<(), Failure> {
        self.write_with(name, |w| Ok(w.write_all(text.as_bytes())?))
    }
}
