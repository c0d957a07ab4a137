//! Per-run provenance: every written artifact gets `<artifact>.manifest.json`
//! recording the invocation, resolved flags, input digests and seeds.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    pub argv: Vec<String>,
    pub flags: serde_json::Value,
    pub threads: usize,
    /// Input path as given on the command line to the SHA-256 of its bytes.
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub rng_seeds: BTreeMap<String, u64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    pub wall_time_secs: f64,
}

/// Collects provenance while a subcommand runs.
pub struct Run {
    manifest: RunManifest,
    input_paths: Vec<PathBuf>,
    start: Instant,
}

impl Run {
    pub fn new(subcommand: &str, flags: serde_json::Value, threads: usize) -> Self {
        Run {
            manifest: RunManifest {
                tool: env!("CARGO_PKG_NAME"),
                version: env!("CARGO_PKG_VERSION"),
                subcommand: subcommand.to_string(),
                argv: std::env::args().collect(),
                flags,
                threads,
                inputs: BTreeMap::new(),
                outputs: Vec::new(),
                rng_seeds: BTreeMap::new(),
                warnings: Vec::new(),
                wall_time_secs: 0.0,
            },
            input_paths: Vec::new(),
            start: Instant::now(),
        }
    }

    /// Registers an input file and records its digest.
    pub fn input<'a>(&mut self, path: &'a Path) -> Result<&'a Path, CliError> {
        let bytes = fs::read(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
        let digest = Sha256::digest(&bytes);
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        self.manifest.inputs.insert(path.display().to_string(), hex);
        self.input_paths.push(path.to_path_buf());
        Ok(path)
    }

    pub fn seed(&mut self, name: &str, value: u64) {
        self.manifest.rng_seeds.insert(name.to_string(), value);
    }

    pub fn warn(&mut self, message: String) {
        eprintln!("warning: {message}");
        self.manifest.warnings.push(message);
    }

    /// Registers an output path. Writing over an input is refused.
    pub fn output<'a>(&mut self, path: &'a Path) -> Result<&'a Path, CliError> {
        let same = |a: &Path| match (fs::canonicalize(a), fs::canonicalize(path)) {
            (Ok(x), Ok(y)) => x == y,
            _ => a == path,
        };
        if let Some(clash) = self.input_paths.iter().find(|p| same(p)) {
            return Err(CliError::Usage(format!(
                "output {} would overwrite input {}",
                path.display(),
                clash.display()
            )));
        }
        self.manifest.outputs.push(path.display().to_string());
        Ok(path)
    }

    /// Writes one manifest next to every registered output.
    pub fn finish(mut self) -> Result<(), CliError> {
        self.manifest.wall_time_secs = self.start.elapsed().as_secs_f64();
        let json = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes") + "\n";
        for out in &self.manifest.outputs {
            let path = manifest_path(Path::new(out));
            fs::write(&path, &json).map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
        }
        Ok(())
    }
}

pub fn manifest_path(artifact: &Path) -> PathBuf {
    let mut name = artifact.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    artifact.with_file_name(name)
}
