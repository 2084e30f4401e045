use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use ranker_core::config::KeyValues;
use sha2::{Digest, Sha256};

pub const MANIFEST_VERSION: &str = "ranker-manifest v1";

/// Record of one CLI run: what was asked for, what was read, what was
/// written, how long it took.
pub struct Manifest {
    subcommand: &'static str,
    started: Instant,
    seed: Option<u64>,
    config: KeyValues,
    inputs: Vec<(String, PathBuf, String)>,
    outputs: Vec<(String, PathBuf)>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut file = fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    loop {
        let n = file
            .read(&mut buf)
            .with_context(|| format!("cannot read {}", path.display()))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

impl Manifest {
    pub fn start(subcommand: &'static str) -> Self {
        Manifest {
            subcommand,
            started: Instant::now(),
            seed: None,
            config: KeyValues::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn seed(&mut self, seed: u64) {
        self.seed = Some(seed);
    }

    /// Records settings; `prefix` separates the parts of composite configs.
    pub fn config(&mut self, prefix: &str, kv: &KeyValues) {
        for (k, v) in kv.iter() {
            self.config.set(&format!("{prefix}{k}"), v);
        }
    }

    pub fn setting(&mut self, key: &str, value: impl ToString) {
        self.config.set(key, value.to_string());
    }

    pub fn input(&mut self, name: &str, path: &Path) -> Result<()> {
        let digest = sha256_file(path)?;
        self.inputs.push((name.to_string(), path.to_path_buf(), digest));
        Ok(())
    }

    pub fn output(&mut self, name: &str, path: &Path) {
        self.outputs.push((name.to_string(), path.to_path_buf()));
    }

    fn render(&self) -> String {
        let mut kv = KeyValues::new();
        kv.set("subcommand", self.subcommand);
        kv.set("version", env!("CARGO_PKG_VERSION"));
        if let Some(s) = self.seed {
            kv.set("seed", s.to_string());
        }
        for (k, v) in self.config.iter() {
            kv.set(&format!("config.{k}"), v);
        }
        for (name, path, digest) in &self.inputs {
            kv.set(&format!("input.{name}"), path.display().to_string());
            kv.set(&format!("input.{name}.sha256"), digest.clone());
        }
        for (name, path) in &self.outputs {
            kv.set(&format!("output.{name}"), path.display().to_string());
        }
        kv.set("wall_seconds", format!("{:.3}", self.started.elapsed().as_secs_f64()));
        format!("# {MANIFEST_VERSION}\n{}", kv.to_text())
    }

    /// Writes the manifest to `path`, or to `<default_next_to>.manifest`.
    pub fn finish(self, path: Option<&Path>, default_next_to: &Path) -> Result<PathBuf> {
        let path = match path {
            Some(p) => p.to_path_buf(),
            None => with_suffix(default_next_to, "manifest"),
        };
        fs::write(&path, self.render()).with_context(|| format!("cannot write manifest {}", path.display()))?;
        Ok(path)
    }
}

/// `file.ext` -> `file.ext.<suffix>`.
pub fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}
