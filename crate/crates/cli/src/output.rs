//! CSV formatting, atomic file writes and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use sha2::{Digest, Sha256};

/// One CSV table, built in memory.
pub struct Table {
    pub file: String,
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(subcommand: &str, file: &str, header: &[&str]) -> Result<Self> {
        let mut buf = format!("# ergolab-csv v1 {subcommand}\r\n").into_bytes();
        buf.reserve(4096);
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(buf);
        writer.write_record(header)?;
        Ok(Table {
            file: file.into(),
            writer,
        })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields)?;
        Ok(())
    }

    pub fn into_bytes(self) -> Result<Vec<u8>> {
        self.writer
            .into_inner()
            .map_err(|e| anyhow::anyhow!("csv buffer: {}", e.error()))
    }
}

/// Full-precision float: 17 significant digits.
pub fn f(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

pub fn b(v: bool) -> &'static str {
    if v {
        "true"
    } else {
        "false"
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Writes files through `<name>.tmp` + rename; on drop without
/// [`Writer::commit`] every file written so far is removed again.
pub struct Writer {
    dir: PathBuf,
    written: Vec<PathBuf>,
    committed: bool,
}

impl Writer {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Writer {
            dir: dir.to_path_buf(),
            written: Vec::new(),
            committed: false,
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let dest = self.dir.join(name);
        let tmp = self.dir.join(format!("{name}.tmp"));
        let res = fs::write(&tmp, bytes)
            .and_then(|_| fs::rename(&tmp, &dest))
            .with_context(|| format!("writing {}", dest.display()));
        if res.is_err() {
            let _ = fs::remove_file(&tmp);
        } else {
            self.written.push(dest);
        }
        res
    }

    pub fn commit(mut self) {
        self.committed = true;
    }
}

impl Drop for Writer {
    fn drop(&mut self) {
        if !self.committed {
            for p in &self.written {
                let _ = fs::remove_file(p);
            }
        }
    }
}
