// SPDX-License-Identifier: Apache-2.0

//! CSV artifacts and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "DRESSED_LASING_OUT";

/// 17 significant digits, enough to round-trip an `f64`.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, num)
}

/// A CSV table with a fixed header.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config_snapshot: String,
    pub config_given: BTreeMap<String, String>,
    pub flags: BTreeMap<String, String>,
    pub timings_s: BTreeMap<String, f64>,
    pub diagnostics: BTreeMap<String, serde_json::Value>,
    pub outputs: Vec<String>,
}

/// Output directory plus the bookkeeping that ends up in the manifest.
pub struct Run {
    pub dir: PathBuf,
    pub manifest: RunManifest,
    started: Instant,
}

impl Run {
    pub fn new(dir: PathBuf, command: &str, config_snapshot: String, config_given: BTreeMap<String, String>) -> std::io::Result<Self> {
        fs::create_dir_all(&dir)?;
        Ok(Self {
            dir,
            manifest: RunManifest {
                command: command.into(),
                version: env!("CARGO_PKG_VERSION").into(),
                config_snapshot,
                config_given,
                flags: BTreeMap::new(),
                timings_s: BTreeMap::new(),
                diagnostics: BTreeMap::new(),
                outputs: Vec::new(),
            },
            started: Instant::now(),
        })
    }

    pub fn flag(&mut self, k: &str, v: impl ToString) {
        self.manifest.flags.insert(k.into(), v.to_string());
    }

    pub fn diag(&mut self, k: &str, v: impl Serialize) {
        if let Ok(v) = serde_json::to_value(v) {
            self.manifest.diagnostics.insert(k.into(), v);
        }
    }

    pub fn time(&mut self, k: &str, since: Instant) {
        self.manifest.timings_s.insert(k.into(), since.elapsed().as_secs_f64());
    }

    pub fn write(&mut self, name: &str, contents: &str) -> std::io::Result<PathBuf> {
        let path = self.dir.join(name);
        let mut f = fs::File::create(&path)?;
        f.write_all(contents.as_bytes())?;
        self.manifest.outputs.push(name.into());
        Ok(path)
    }

    pub fn write_table(&mut self, name: &str, t: &Table) -> std::io::Result<PathBuf> {
        self.write(name, &t.render())
    }

    /// Writes `manifest.json` after checking that every listed output exists
    /// and is non-empty.
    pub fn finish(mut self) -> std::io::Result<PathBuf> {
        self.manifest
            .timings_s
            .insert("total".into(), self.started.elapsed().as_secs_f64());
        for o in &self.manifest.outputs {
            let len = fs::metadata(self.dir.join(o))?.len();
            if len == 0 {
                return Err(std::io::Error::other(format!("output {o} is empty")));
            }
        }
        let path = self.dir.join("manifest.json");
        let json = serde_json::to_string_pretty(&self.manifest).map_err(std::io::Error::other)?;
        fs::write(&path, json + "\n")?;
        Ok(path)
    }
}

pub fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV).map_or_else(|| Path::new("out").to_path_buf(), PathBuf::from)
}
