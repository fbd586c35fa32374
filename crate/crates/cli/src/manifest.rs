use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::failure::{Failure, ResultExt, USAGE};

/// Sidecar written next to every output file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    /// Arguments after the program name, subcommand first.
    pub args: Vec<String>,
    pub seed: u64,
    pub working_directory: PathBuf,
    /// SHA-256 of each input, keyed by the path as given.
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub wall_time_seconds: f64,
    pub metadata: serde_json::Value,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Collects what a manifest needs while a subcommand runs.
pub struct Recorder {
    subcommand: String,
    args: Vec<String>,
    seed: u64,
    inputs: BTreeMap<String, String>,
    started: Instant,
    pub metadata: serde_json::Value,
}

impl Recorder {
    pub fn new(args: &[String], seed: u64) -> Recorder {
        println!("seed: {seed}");
        Recorder {
            subcommand: args.first().cloned().unwrap_or_default(),
            args: args.to_vec(),
            seed,
            inputs: BTreeMap::new(),
            started: Instant::now(),
            metadata: serde_json::Value::Null,
        }
    }

    /// Reads an input file and records its digest.
    pub fn read_input(&mut self, path: &Path) -> Result<String, Failure> {
        let bytes = fs::read(path).with_code(USAGE, || format!("cannot read {}", path.display()))?;
        self.inputs.insert(path.display().to_string(), sha256_hex(&bytes));
        String::from_utf8(bytes).with_code(USAGE, || format!("{} is not UTF-8", path.display()))
    }

    /// Writes the output and its manifest.
    pub fn finish(self, output: &Path, contents: &[u8]) -> Result<(), Failure> {
        fs::write(output, contents).with_code(USAGE, || format!("cannot write {}", output.display()))?;
        let manifest = Manifest {
            tool: "bedkit".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            subcommand: self.subcommand,
            args: self.args,
            seed: self.seed,
            working_directory: std::env::current_dir().with_code(USAGE, || "no working directory")?,
            inputs: self.inputs,
            outputs: BTreeMap::from([(output.display().to_string(), sha256_hex(contents))]),
            wall_time_seconds: self.started.elapsed().as_secs_f64(),
            metadata: self.metadata,
        };
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        let path = manifest_path(output);
        fs::write(&path, text).with_code(USAGE, || format!("cannot write {}", path.display()))
    }
}

/// Replaces every occurrence of a flag (`-o X`, `--output X`, `--output=X`)
/// with a single `names[0] value` at the end.
pub fn set_flag(args: &[String], names: &[&str], value: &str) -> Vec<String> {
    let mut out = Vec::with_capacity(args.len() + 2);
    let mut i = 0;
    while i < args.len() {
        let a = &args[i];
        if names.contains(&a.as_str()) {
            i += 2;
            continue;
        }
        let joined = names
            .iter()
            .any(|n| n.starts_with("--") && a.starts_with(&format!("{n}=")));
        if !joined {
            out.push(a.clone());
        }
        i += 1;
    }
    out.push(names[0].to_string());
    out.push(value.to_string());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn flags_are_replaced_in_every_form() {
        let args = strings(&["distmat", "-o", "a.csv", "--seed=4", "--metric", "edit", "--seed", "5"]);
        let out = set_flag(&args, &["--seed"], "9");
        assert_eq!(out, strings(&["distmat", "-o", "a.csv", "--metric", "edit", "--seed", "9"]));
        let out = set_flag(&out, &["--output", "-o"], "b.csv");
        assert_eq!(out, strings(&["distmat", "--metric", "edit", "--seed", "9", "--output", "b.csv"]));
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(manifest_path(Path::new("out/m.csv")), PathBuf::from("out/m.csv.manifest.json"));
    }
}
