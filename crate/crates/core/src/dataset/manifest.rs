use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{LabeledExample, SplitBundle};
use crate::corpus::OriginLabel;
use crate::{Error, Result};

/// One manifest line. Manifests are the authoritative record of split
/// membership; reruns read them instead of re-randomizing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub label: OriginLabel,
    pub source: String,
    pub year: i32,
}

impl From<&LabeledExample> for ManifestEntry {
    fn from(x: &LabeledExample) -> Self {
        ManifestEntry {
            id: x.id.clone(),
            label: x.label,
            source: x.source.clone(),
            year: x.year,
        }
    }
}

fn write_jsonl<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for row in rows {
        serde_json::to_writer(&mut w, &row)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| {
            Error::InvalidInput(format!("{}:{}: {e}", path.display(), i + 1))
        })?);
    }
    Ok(out)
}

pub fn write_manifest(path: impl AsRef<Path>, examples: &[LabeledExample]) -> Result<()> {
    write_jsonl(path.as_ref(), examples.iter().map(ManifestEntry::from))
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    read_jsonl(path.as_ref())
}

pub fn write_examples(path: impl AsRef<Path>, examples: &[LabeledExample]) -> Result<()> {
    write_jsonl(path.as_ref(), examples)
}

pub fn read_examples(path: impl AsRef<Path>) -> Result<Vec<LabeledExample>> {
    read_jsonl(path.as_ref())
}

impl SplitBundle {
    /// Rebuilds a bundle from example texts and the three manifests.
    pub fn from_manifests(
        examples: &[LabeledExample],
        manifests: [&[ManifestEntry]; 3],
        ratios: [f64; 3],
        seed: u64,
    ) -> Result<Self> {
        let by_id: HashMap<&str, &LabeledExample> =
            examples.iter().map(|x| (x.id.as_str(), x)).collect();
        let resolve = |entries: &[ManifestEntry]| -> Result<Vec<LabeledExample>> {
            entries
                .iter()
                .map(|e| {
                    let x = by_id
                        .get(e.id.as_str())
                        .ok_or_else(|| Error::InvalidInput(format!("manifest id {} has no example", e.id)))?;
                    if x.label != e.label {
                        return Err(Error::InvalidInput(format!("label mismatch for {}", e.id)));
                    }
                    Ok((*x).clone())
                })
                .collect()
        };
        Ok(SplitBundle {
            train: resolve(manifests[0])?,
            validation: resolve(manifests[1])?,
            test: resolve(manifests[2])?,
            ratios,
            seed,
        })
    }
}
