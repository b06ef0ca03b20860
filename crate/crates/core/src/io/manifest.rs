//! Reproducibility envelopes written next to every result file.

use std::fs::{self, File};
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::measures::Measure;

pub const MANIFEST_SUFFIX: &str = ".manifest.json";
pub const TOOL_NAME: &str = "eucompare";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// A file named by its content hash.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    /// File name without directories, so manifests do not depend on where
    /// the pipeline ran.
    pub name: String,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Ok(FileDigest {
            name: file_name(path),
            sha256: sha256_file(path)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    /// The command that produced the result, e.g. `eval-selective`.
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<usize>,
    #[serde(default)]
    pub measures: Vec<Measure>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub betas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Free-form settings that change the output, such as the WD scaling.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub settings: Vec<(String, String)>,
    pub inputs: Vec<FileDigest>,
    pub output: FileDigest,
}

impl RunManifest {
    /// A manifest for `command` with everything optional left empty. The
    /// output digest is filled in by [`RunManifest::seal`].
    pub fn new(command: impl Into<String>) -> Self {
        RunManifest {
            tool: TOOL_NAME.to_string(),
            tool_version: TOOL_VERSION.to_string(),
            command: command.into(),
            dataset: None,
            model: None,
            task: None,
            run: None,
            measures: Vec::new(),
            betas: None,
            alpha: None,
            seed: None,
            settings: Vec::new(),
            inputs: Vec::new(),
            output: FileDigest {
                name: String::new(),
                sha256: String::new(),
            },
        }
    }

    pub fn add_input(&mut self, path: impl AsRef<Path>) -> Result<()> {
        self.inputs.push(FileDigest::of(path)?);
        Ok(())
    }

    pub fn setting(&mut self, key: &str, value: impl ToString) {
        self.settings.push((key.to_string(), value.to_string()));
    }

    /// Hashes the finished result file and writes the sibling manifest.
    pub fn seal(mut self, output: impl AsRef<Path>) -> Result<PathBuf> {
        let output = output.as_ref();
        self.output = FileDigest::of(output)?;
        let path = manifest_path(output);
        let mut text = serde_json::to_string_pretty(&self).map_err(std::io::Error::from)?;
        text.push('\n');
        fs::write(&path, text)?;
        Ok(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::invalid(format!("cannot read manifest {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::invalid(format!("malformed manifest {}: {e}", path.display())))
    }

    /// Path of the result file this manifest describes, checked against the
    /// recorded hash.
    pub fn verified_output(&self, manifest_path: &Path) -> Result<PathBuf> {
        let dir = manifest_path.parent().unwrap_or_else(|| Path::new("."));
        let output = dir.join(&self.output.name);
        if !output.is_file() {
            return Err(Error::invalid(format!(
                "manifest {} names a missing result file `{}`",
                manifest_path.display(),
                self.output.name
            )));
        }
        let actual = sha256_file(&output)?;
        if actual != self.output.sha256 {
            return Err(Error::invalid(format!(
                "result file {} does not match the hash in its manifest",
                output.display()
            )));
        }
        Ok(output)
    }
}

/// `<output>.manifest.json`.
pub fn manifest_path(output: impl AsRef<Path>) -> PathBuf {
    let mut name = output.as_ref().as_os_str().to_owned();
    name.push(MANIFEST_SUFFIX);
    PathBuf::from(name)
}

pub fn sha256_file(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let file = File::open(path)
        .map_err(|e| Error::invalid(format!("cannot open {}: {e}", path.display())))?;
    let mut reader = BufReader::new(file);
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    loop {
        let n = reader.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_of_known_content() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("abc.txt");
        fs::write(&path, "abc").unwrap();
        assert_eq!(
            sha256_file(&path).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn seal_then_load_and_verify() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("preds.jsonl");
        let output = dir.path().join("scores.csv");
        fs::write(&input, "x").unwrap();
        fs::write(&output, "y").unwrap();
        let mut m = RunManifest::new("quantify");
        m.measures = vec![Measure::Mi, Measure::Gh];
        m.seed = Some(3);
        m.add_input(&input).unwrap();
        m.setting("wd-prefactor", "eq8");
        let path = m.clone().seal(&output).unwrap();
        assert_eq!(path, dir.path().join("scores.csv.manifest.json"));

        let loaded = RunManifest::load(&path).unwrap();
        assert_eq!(loaded.inputs[0].name, "preds.jsonl");
        assert_eq!(loaded.output.name, "scores.csv");
        assert_eq!(loaded.measures, m.measures);
        assert_eq!(loaded.verified_output(&path).unwrap(), output);

        fs::write(&output, "tampered").unwrap();
        assert!(loaded.verified_output(&path).is_err());
    }
}
