use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, MotionClass, Sample};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub split: String,
    pub class: MotionClass,
    pub label: usize,
    pub seed: u64,
    pub path: String,
}

/// Writes every clip as `{split}/clip_{i:05}.t5b` plus `manifest.json`.
pub fn write_dataset(dataset: &Dataset, dir: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    let dir = dir.as_ref();
    let mut entries = Vec::new();
    for (split, samples) in [("train", &dataset.train), ("val", &dataset.val)] {
        let sub = dir.join(split);
        fs::create_dir_all(&sub).map_err(|e| Error::io(&sub, e))?;
        for (i, s) in samples.iter().enumerate() {
            let path = format!("{split}/clip_{i:05}.t5b");
            s.clip.save_t5b(dir.join(&path))?;
            entries.push(ManifestEntry {
                split: split.to_string(),
                class: s.class,
                label: s.label,
                seed: s.seed,
                path,
            });
        }
    }
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&entries)?).map_err(|e| Error::io(&path, e))?;
    Ok(entries)
}

/// Reads the clips listed in a manifest back as `(train, val)` samples.
pub fn read_dataset(dir: impl AsRef<Path>) -> Result<(Vec<Sample>, Vec<Sample>)> {
    let dir = dir.as_ref();
    let path = dir.join("manifest.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let entries: Vec<ManifestEntry> = serde_json::from_str(&text)?;
    let (mut train, mut val) = (Vec::new(), Vec::new());
    for e in entries {
        let sample = Sample {
            clip: crate::tensor::Tensor5::load_t5b(dir.join(&e.path))?,
            label: e.label,
            class: e.class,
            seed: e.seed,
        };
        match e.split.as_str() {
            "train" => train.push(sample),
            "val" => val.push(sample),
            other => {
                return Err(Error::format(
                    "dataset manifest",
                    format!("unknown split {other:?}"),
                ))
            }
        }
    }
    Ok((train, val))
}
