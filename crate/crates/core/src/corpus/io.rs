use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::parse::parse_interactions;
use super::{DatasetFormat, InteractionLog, SplitPair};
use crate::error::{Error, Result};

pub fn file_sha256(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub(crate) fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub(crate) fn log_to_tsv(log: &InteractionLog) -> String {
    let mut out = String::new();
    for r in log.records() {
        let _ = writeln!(out, "{}\t{}\t{}", r.user, r.item, r.weight);
    }
    out
}

/// Writes `user \t item \t weight` rows in log order.
pub fn write_log_tsv(log: &InteractionLog, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), log_to_tsv(log))
}

/// Sidecar describing how a split was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub ratio: f64,
    pub kcore: usize,
    /// raw input file -> sha256
    pub source_checksums: BTreeMap<String, String>,
    pub train_sha256: String,
    pub test_sha256: String,
}

/// Writes `train.tsv`, `test.tsv` and `split.toml` into `dir`.
pub fn write_split(
    split: &SplitPair,
    kcore: usize,
    source_checksums: BTreeMap<String, String>,
    dir: impl AsRef<Path>,
) -> Result<SplitManifest> {
    let dir = dir.as_ref();
    let train = log_to_tsv(&split.train);
    let test = log_to_tsv(&split.test);
    let manifest = SplitManifest {
        seed: split.seed,
        ratio: split.ratio,
        kcore,
        source_checksums,
        train_sha256: hex::encode(Sha256::digest(train.as_bytes())),
        test_sha256: hex::encode(Sha256::digest(test.as_bytes())),
    };
    write_file(&dir.join("train.tsv"), train)?;
    write_file(&dir.join("test.tsv"), test)?;
    let text = toml::to_string(&manifest).map_err(|e| Error::Serialization(e.to_string()))?;
    write_file(&dir.join("split.toml"), text)?;
    Ok(manifest)
}

/// Reads a split written by [`write_split`], verifying both checksums.
pub fn read_split(dir: impl AsRef<Path>) -> Result<(SplitPair, SplitManifest)> {
    let dir = dir.as_ref();
    let manifest_path = dir.join("split.toml");
    let text = std::fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest: SplitManifest =
        toml::from_str(&text).map_err(|e| Error::Serialization(format!("{}: {e}", manifest_path.display())))?;
    for (file, expected) in [
        ("train.tsv", &manifest.train_sha256),
        ("test.tsv", &manifest.test_sha256),
    ] {
        let got = file_sha256(dir.join(file))?;
        if &got != expected {
            return Err(Error::InvalidArgument(format!(
                "{file} checksum {got} does not match manifest {expected}"
            )));
        }
    }
    let split = SplitPair {
        train: parse_interactions(dir.join("train.tsv"), DatasetFormat::GenericTsv)?,
        test: parse_interactions(dir.join("test.tsv"), DatasetFormat::GenericTsv)?,
        seed: manifest.seed,
        ratio: manifest.ratio,
    };
    Ok((split, manifest))
}
