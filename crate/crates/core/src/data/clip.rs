use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PixelRange {
    /// `[0, 255]`
    Raw,
    /// `[0, 1]`
    Unit,
}

/// A clip tensor `(1, c, T, H, W)` tagged with its value range.
#[derive(Clone, Debug, PartialEq)]
pub struct Clip {
    pixels: Tensor5<f32>,
    range: PixelRange,
}

impl Clip {
    /// Wraps raw pixels, checking every value lies in `[0, 255]`.
    pub fn raw(pixels: Tensor5<f32>) -> Result<Self> {
        if let Some(&value) = pixels
            .as_slice()
            .iter()
            .find(|v| !(0.0..=255.0).contains(*v))
        {
            return Err(Error::ValueOutOfRange { value });
        }
        Ok(Clip {
            pixels,
            range: PixelRange::Raw,
        })
    }

    pub fn pixels(&self) -> &Tensor5<f32> {
        &self.pixels
    }

    pub fn range(&self) -> PixelRange {
        self.range
    }

    pub fn into_tensor(self) -> Tensor5<f32> {
        self.pixels
    }

    /// Divides by 255. A clip can be normalized once.
    pub fn normalize(self) -> Result<Self> {
        if self.range == PixelRange::Unit {
            return Err(Error::AlreadyNormalized);
        }
        Ok(Clip {
            pixels: self.pixels.map(|v| v / 255.0),
            range: PixelRange::Unit,
        })
    }
}
