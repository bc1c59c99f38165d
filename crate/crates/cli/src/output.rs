//! File headers, hashing and atomic writes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

pub const TOOL: &str = concat!("hybridsim ", env!("CARGO_PKG_VERSION"));

pub const UNITS: &str = "SI units; the suffix of a name gives its unit (_m metre, _s second, _j joule, _t tesla, _v volt, _c coulomb, _kg kilogram); _hz is an ordinary frequency f, angular rates are 2 pi f; unsuffixed quantities are dimensionless";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Comment lines opening every CSV file.
pub fn csv_header(scenario_hash: &str) -> String {
    format!("# tool: {TOOL}\n# scenario_sha256: {scenario_hash}\n# units: {UNITS}\n")
}

/// Quote a CSV cell when it needs it.
pub fn cell(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// A set of files written together: nothing lands on disk until every file is
/// rendered, and each file appears through a rename.
#[derive(Debug, Default)]
pub struct OutputSet {
    files: Vec<(String, String)>,
}

impl OutputSet {
    pub fn add(&mut self, name: impl Into<String>, contents: String) {
        self.files.push((name.into(), contents));
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    pub fn into_files(self) -> Vec<(String, String)> {
        self.files
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut staged = Vec::new();
        for (name, contents) in &self.files {
            let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
            let res = fs::File::create(&tmp).and_then(|mut f| {
                f.write_all(contents.as_bytes())?;
                f.sync_all()
            });
            if let Err(e) = res {
                let _ = fs::remove_file(&tmp);
                for (t, _) in &staged {
                    let _ = fs::remove_file(t);
                }
                return Err(e);
            }
            staged.push((tmp, dir.join(name)));
        }
        let mut written = Vec::new();
        for (tmp, dst) in staged {
            fs::rename(&tmp, &dst)?;
            written.push(dst);
        }
        Ok(written)
    }
}
