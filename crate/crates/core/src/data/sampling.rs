use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::load_frame_dir;
use crate::error::{Error, Result};
use crate::tensor::{Shape5, Tensor5};

/// Where a clip comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClipSource {
    /// A directory of `frame_%06d.ppm` / `.pgm` files.
    Frames { dir: PathBuf, fps: Option<f64> },
    /// A `.t5b` tensor `(1, c, T, H, W)`.
    Tensor { path: PathBuf, fps: Option<f64> },
}

impl ClipSource {
    pub fn from_path(path: impl AsRef<Path>, fps: Option<f64>) -> Self {
        let path = path.as_ref().to_path_buf();
        if path.is_dir() {
            ClipSource::Frames { dir: path, fps }
        } else {
            ClipSource::Tensor { path, fps }
        }
    }

    pub fn fps(&self) -> f64 {
        match self {
            ClipSource::Frames { fps, .. } | ClipSource::Tensor { fps, .. } => fps.unwrap_or(24.0),
        }
    }

    pub fn load(&self) -> Result<Tensor5<f32>> {
        let clip = match self {
            ClipSource::Frames { dir, .. } => load_frame_dir(dir)?,
            ClipSource::Tensor { path, .. } => Tensor5::load_t5b(path)?,
        };
        if clip.shape().n != 1 {
            return Err(Error::format(
                "clip",
                format!("expected a single clip, got shape {}", clip.shape()),
            ));
        }
        Ok(clip)
    }
}

/// Temporal window and output size of the clip sampler.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sampling {
    pub window_seconds: f64,
    pub frames: usize,
    pub step: usize,
    pub height: usize,
    pub width: usize,
}

impl Default for Sampling {
    /// 24 frames, every second frame of a 2 s window, resized to 224×224.
    fn default() -> Self {
        Sampling {
            window_seconds: 2.0,
            frames: 24,
            step: 2,
            height: 224,
            width: 224,
        }
    }
}

impl Sampling {
    /// Source frame indices for a clip of `total` frames at `fps`.
    ///
    /// The window holds `round(window_seconds · fps)` consecutive frames,
    /// centered on frame `total / 2` and shifted to lie inside the clip. Output
    /// frame `j` takes window slot `(j · step) mod window`. A clip shorter than
    /// the window fills it cyclically, so slot `s` maps to frame `s mod total`.
    pub fn indices(&self, total: usize, fps: f64) -> Result<Vec<usize>> {
        if total == 0 {
            return Err(Error::format("clip", "no frames".to_string()));
        }
        let window = ((self.window_seconds * fps).round() as usize).max(1);
        let start = if total >= window {
            (total / 2).saturating_sub(window / 2).min(total - window)
        } else {
            0
        };
        Ok((0..self.frames)
            .map(|j| (start + (j * self.step) % window) % total)
            .collect())
    }
}

/// [`Sampling::indices`] with the default window: 24 of 48 frames at 24 fps.
pub fn sample_indices(total: usize, fps: f64) -> Result<Vec<usize>> {
    Sampling::default().indices(total, fps)
}

/// Bilinear resize of every `(h, w)` frame with corner-aligned sampling:
/// output pixel `i` reads source coordinate `i · (H_in − 1) / (H_out − 1)`
/// (0 when the output has one row), likewise for columns.
pub fn resize_bilinear(x: &Tensor5<f32>, height: usize, width: usize) -> Result<Tensor5<f32>> {
    let s = x.shape();
    let out = Shape5 {
        h: height,
        w: width,
        ..s
    };
    out.validate()?;
    let axis = |n_in: usize, n_out: usize| -> Vec<(usize, usize, f64)> {
        (0..n_out)
            .map(|i| {
                let pos = if n_out == 1 {
                    0.0
                } else {
                    i as f64 * (n_in - 1) as f64 / (n_out - 1) as f64
                };
                let lo = (pos.floor() as usize).min(n_in - 1);
                let hi = (lo + 1).min(n_in - 1);
                (lo, hi, pos - lo as f64)
            })
            .collect()
    };
    let rows = axis(s.h, height);
    let cols = axis(s.w, width);
    Tensor5::from_fn(out, |[n, c, t, i, j]| {
        let (y0, y1, fy) = rows[i];
        let (x0, x1, fx) = cols[j];
        let v00 = x.at(n, c, t, y0, x0) as f64;
        let v01 = x.at(n, c, t, y0, x1) as f64;
        let v10 = x.at(n, c, t, y1, x0) as f64;
        let v11 = x.at(n, c, t, y1, x1) as f64;
        let top = v00 + (v01 - v00) * fx;
        let bottom = v10 + (v11 - v10) * fx;
        (top + (bottom - top) * fy) as f32
    })
}

/// Windows, subsamples, then resizes a clip `(1, c, T, H, W)` to
/// `(1, c, frames, height, width)`.
pub fn sample_clip_tensor(
    clip: &Tensor5<f32>,
    fps: f64,
    sampling: &Sampling,
) -> Result<Tensor5<f32>> {
    let s = clip.shape();
    let idx = sampling.indices(s.t, fps)?;
    let picked = Tensor5::from_fn(Shape5 { t: idx.len(), ..s }, |[n, c, t, h, w]| {
        clip.at(n, c, idx[t], h, w)
    })?;
    resize_bilinear(&picked, sampling.height, sampling.width)
}

/// Loads a source and samples it with the default protocol, giving `(1, c, 24, 224, 224)`.
pub fn sample_clip(src: &ClipSource) -> Result<Tensor5<f32>> {
    sample_clip_tensor(&src.load()?, src.fps(), &Sampling::default())
}
