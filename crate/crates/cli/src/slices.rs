use std::fs;
use std::path::PathBuf;

use anyhow::Context;
use fastconv::data::{
    argmax_trajectory, extract_slice, trajectory_slope, ClipSource, GrayImage, Plane,
};
use serde::{Deserialize, Serialize};

use crate::Outcome;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SlicesConfig {
    /// A `.t5b` clip `(1, c, T, H, W)` in raw pixel range, or a frame directory.
    pub input: PathBuf,
    /// Row fixed for the XT slice.
    pub row: usize,
    /// Column fixed for the YT slice.
    pub col: usize,
    pub out: PathBuf,
}

#[derive(Serialize)]
struct SliceInfo {
    path: PathBuf,
    /// `[T, width]` of the image.
    shape: [usize; 2],
    /// Least-squares slope of the per-frame arg-max, pixels per frame.
    argmax_slope: f64,
}

#[derive(Serialize)]
struct SlicesReport {
    xt: SliceInfo,
    yt: SliceInfo,
}

fn write(img: &GrayImage, path: PathBuf) -> anyhow::Result<SliceInfo> {
    img.to_pnm().save(&path)?;
    Ok(SliceInfo {
        shape: [img.height, img.width],
        argmax_slope: trajectory_slope(&argmax_trajectory(img), img.width),
        path,
    })
}

/// Writes `xt.pgm` (row fixed) and `yt.pgm` (column fixed).
pub fn slices(cfg: &SlicesConfig) -> anyhow::Result<Outcome> {
    let clip = ClipSource::from_path(&cfg.input, None).load()?;
    let xt = extract_slice(&clip, Plane::XT, cfg.row)?;
    let yt = extract_slice(&clip, Plane::YT, cfg.col)?;
    fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    let report = SlicesReport {
        xt: write(&xt, cfg.out.join("xt.pgm"))?,
        yt: write(&yt, cfg.out.join("yt.pgm"))?,
    };
    Outcome::new("slices", cfg, &report, true)
}
