//! Binary PGM (`P5`) and PPM (`P6`) with 8-bit samples.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::tensor::{Shape5, Tensor5};

/// An 8-bit image with interleaved channels (1 for PGM, 3 for PPM).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PnmImage {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<u8>,
}

/// A single-channel float image, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    pub height: usize,
    pub width: usize,
    pub data: Vec<f32>,
}

impl GrayImage {
    pub fn at(&self, row: usize, col: usize) -> f32 {
        self.data[row * self.width + col]
    }

    pub fn row(&self, row: usize) -> &[f32] {
        &self.data[row * self.width..(row + 1) * self.width]
    }

    /// Rounds and clamps to `[0, 255]`.
    pub fn to_pnm(&self) -> PnmImage {
        PnmImage {
            channels: 1,
            height: self.height,
            width: self.width,
            data: self
                .data
                .iter()
                .map(|v| v.round().clamp(0.0, 255.0) as u8)
                .collect(),
        }
    }
}

impl PnmImage {
    pub fn to_bytes(&self) -> Vec<u8> {
        let magic = if self.channels == 1 { "P5" } else { "P6" };
        let mut out = format!("{magic}\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.data);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |d: &str| Error::format("pnm", d.to_string());
        let mut pos = 0;
        let mut token = || -> Result<String> {
            loop {
                while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                    pos += 1;
                }
                if pos < bytes.len() && bytes[pos] == b'#' {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                    continue;
                }
                break;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(bad("truncated header"));
            }
            Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
        };
        let channels = match token()?.as_str() {
            "P5" => 1,
            "P6" => 3,
            other => return Err(bad(&format!("unsupported magic {other:?}"))),
        };
        let mut number = || -> Result<usize> {
            token()?
                .parse()
                .map_err(|_| bad("non-numeric header field"))
        };
        let width = number()?;
        let height = number()?;
        let maxval = number()?;
        if width == 0 || height == 0 {
            return Err(bad("zero image extent"));
        }
        if maxval == 0 || maxval > 255 {
            return Err(bad(&format!(
                "only 8-bit samples are supported, maxval {maxval}"
            )));
        }
        // Exactly one whitespace byte separates the header from the raster.
        let start = pos + 1;
        let len = channels * height * width;
        let raster = bytes
            .get(start..start + len)
            .ok_or_else(|| bad("truncated raster"))?;
        let data = if maxval == 255 {
            raster.to_vec()
        } else {
            raster
                .iter()
                .map(|&v| ((v as usize * 255 + maxval / 2) / maxval) as u8)
                .collect()
        };
        Ok(PnmImage {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_bytes(&fs::read(path).map_err(|e| Error::io(path, e))?)
    }
}

fn is_frame(path: &Path) -> bool {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
    name.starts_with("frame_") && (name.ends_with(".ppm") || name.ends_with(".pgm"))
}

/// Reads `frame_%06d.ppm` (or `.pgm`) files in name order into a raw-range
/// clip `(1, c, T, H, W)`.
pub fn load_frame_dir(dir: impl AsRef<Path>) -> Result<Tensor5<f32>> {
    let dir = dir.as_ref();
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(dir, err)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|p| is_frame(p))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::format(
            "frame directory",
            format!("no frame_*.ppm files in {}", dir.display()),
        ));
    }
    let frames = paths
        .iter()
        .map(PnmImage::load)
        .collect::<Result<Vec<_>>>()?;
    let first = &frames[0];
    if let Some((p, _)) = paths.iter().zip(&frames).find(|(_, f)| {
        (f.channels, f.height, f.width) != (first.channels, first.height, first.width)
    }) {
        return Err(Error::format(
            "frame directory",
            format!("{} differs in size or channels", p.display()),
        ));
    }
    let shape = Shape5::new(1, first.channels, frames.len(), first.height, first.width);
    Tensor5::from_fn(shape, |[_, c, t, h, w]| {
        let f = &frames[t];
        f.data[(h * f.width + w) * f.channels + c] as f32
    })
}

/// Writes every frame of `clip` (batch item 0) as `frame_%06d.ppm` (or `.pgm` for one channel).
pub fn write_frame_dir(clip: &Tensor5<f32>, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let s = clip.shape();
    if s.c != 1 && s.c != 3 {
        return Err(Error::format(
            "frame directory",
            format!("{} channels cannot be stored as PNM", s.c),
        ));
    }
    let ext = if s.c == 1 { "pgm" } else { "ppm" };
    for t in 0..s.t {
        let mut data = Vec::with_capacity(s.c * s.h * s.w);
        for h in 0..s.h {
            for w in 0..s.w {
                for c in 0..s.c {
                    data.push(clip.at(0, c, t, h, w).round().clamp(0.0, 255.0) as u8);
                }
            }
        }
        let img = PnmImage {
            channels: s.c,
            height: s.h,
            width: s.w,
            data,
        };
        img.save(dir.join(format!("frame_{t:06}.{ext}")))?;
    }
    Ok(())
}
