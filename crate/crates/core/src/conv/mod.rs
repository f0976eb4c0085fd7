//! Cross-correlation over [`Tensor5`] ("convolution" in the CNN sense).
//!
//! There are two forward paths. [`conv3d_naive`] is the reference: a direct
//! six-loop sum over a zero-padded copy of the input. [`conv3d_forward`] is
//! the optimized path and accumulates every output element in the same order
//! (input channel outermost, then kernel `t`, `h`, `w`), so the two agree
//! bit for bit on finite inputs. Backward and kernel composition live in
//! their own submodules.

mod backward;
mod cases;
mod compose;
mod forward;
mod kernels;
mod naive;

pub use backward::{conv3d_backward, conv3d_backward_input, conv3d_backward_weights, ConvGrads};
pub use cases::{random_case, ConvCase};
pub use compose::compose_kernels;
pub use forward::conv3d_forward;
pub use naive::conv3d_naive;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{Shape5, Tensor5};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Padding {
    /// No padding.
    Valid,
    /// `(k - 1) / 2` zeros per side on every axis; odd extents only.
    Same,
}

/// Geometry of one convolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConvSpec {
    pub kt: usize,
    pub kh: usize,
    pub kw: usize,
    pub c_in: usize,
    pub c_out: usize,
    /// `[st, sh, sw]`
    pub stride: [usize; 3],
    pub padding: Padding,
    pub bias: bool,
}

impl ConvSpec {
    /// Stride-1, `Same`-padded, bias-free convolution.
    pub fn new(kernel: [usize; 3], c_in: usize, c_out: usize) -> Self {
        ConvSpec {
            kt: kernel[0],
            kh: kernel[1],
            kw: kernel[2],
            c_in,
            c_out,
            stride: [1, 1, 1],
            padding: Padding::Same,
            bias: false,
        }
    }

    pub fn with_stride(self, stride: [usize; 3]) -> Self {
        ConvSpec { stride, ..self }
    }

    pub fn with_padding(self, padding: Padding) -> Self {
        ConvSpec { padding, ..self }
    }

    pub fn with_bias(self, bias: bool) -> Self {
        ConvSpec { bias, ..self }
    }

    pub fn kernel(&self) -> [usize; 3] {
        [self.kt, self.kh, self.kw]
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.kernel();
        if k.contains(&0) || self.c_in == 0 || self.c_out == 0 || self.stride.contains(&0) {
            return Err(Error::InvalidSpec(format!(
                "extents, channels and strides must be >= 1: {self:?}"
            )));
        }
        if self.padding == Padding::Same && k.iter().any(|&e| e % 2 == 0) {
            return Err(Error::InvalidSpec(format!(
                "Same padding needs odd kernel extents, got {k:?}"
            )));
        }
        Ok(())
    }

    /// Per-side zero padding on `[t, h, w]`.
    pub fn pads(&self) -> [usize; 3] {
        match self.padding {
            Padding::Valid => [0, 0, 0],
            Padding::Same => [(self.kt - 1) / 2, (self.kh - 1) / 2, (self.kw - 1) / 2],
        }
    }

    /// Shape of `(c_out, c_in, kt, kh, kw)` kernels.
    pub fn kernel_shape(&self) -> Shape5 {
        Shape5::new(self.c_out, self.c_in, self.kt, self.kh, self.kw)
    }

    pub fn output_shape(&self, input: Shape5) -> Result<Shape5> {
        self.validate()?;
        input.validate()?;
        if input.c != self.c_in {
            return Err(Error::ChannelMismatch {
                expected: self.c_in,
                got: input.c,
            });
        }
        let p = self.pads();
        let padded = [input.t + 2 * p[0], input.h + 2 * p[1], input.w + 2 * p[2]];
        let k = self.kernel();
        if (0..3).any(|i| padded[i] < k[i]) {
            return Err(Error::KernelTooLarge {
                kernel: k,
                input: padded,
            });
        }
        let out = |i: usize| (padded[i] - k[i]) / self.stride[i] + 1;
        Ok(Shape5::new(input.n, self.c_out, out(0), out(1), out(2)))
    }

    pub fn param_count(&self) -> usize {
        self.kernel_shape().numel() + if self.bias { self.c_out } else { 0 }
    }

    /// Multiply-adds counted as two operations, for a given output shape.
    pub fn flops(&self, output: Shape5) -> u64 {
        2 * (self.kt * self.kh * self.kw * self.c_in) as u64 * output.numel() as u64
    }
}

/// Kernels `(c_out, c_in, kt, kh, kw)` plus a per-output-channel bias.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvWeights<T> {
    pub kernels: Tensor5<T>,
    /// Length `c_out`; all zero when `spec.bias` is false.
    pub bias: Vec<T>,
}

impl<T: Scalar> ConvWeights<T> {
    pub fn zeros(spec: &ConvSpec) -> Result<Self> {
        spec.validate()?;
        Ok(ConvWeights {
            kernels: Tensor5::zeros(spec.kernel_shape())?,
            bias: vec![T::zero(); spec.c_out],
        })
    }

    /// Uniform in `±sqrt(6 / (fan_in + fan_out))`; bias starts at zero.
    pub fn init_uniform<R: Rng + ?Sized>(spec: &ConvSpec, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        let taps = spec.kt * spec.kh * spec.kw;
        let bound = (6.0 / ((spec.c_in + spec.c_out) * taps) as f64).sqrt();
        Ok(ConvWeights {
            kernels: Tensor5::random_uniform(spec.kernel_shape(), -bound, bound, rng)?,
            bias: vec![T::zero(); spec.c_out],
        })
    }

    pub fn check(&self, spec: &ConvSpec) -> Result<()> {
        if self.kernels.shape() != spec.kernel_shape() {
            return Err(Error::ShapeMismatch {
                op: "conv weights",
                left: spec.kernel_shape(),
                right: self.kernels.shape(),
            });
        }
        if self.bias.len() != spec.c_out {
            return Err(Error::InvalidSpec(format!(
                "bias length {} != c_out {}",
                self.bias.len(),
                spec.c_out
            )));
        }
        Ok(())
    }

    pub fn cast<U: Scalar>(&self) -> ConvWeights<U> {
        ConvWeights {
            kernels: self.kernels.cast(),
            bias: self.bias.iter().map(|&b| U::of(b.to_f64_lossy())).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.kernels.is_finite() && self.bias.iter().all(|b| b.is_finite())
    }
}

/// Validated sizes shared by the forward and backward paths.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Geometry {
    pub input: Shape5,
    pub output: Shape5,
    /// Padded `[t, h, w]`.
    pub padded: [usize; 3],
    pub pads: [usize; 3],
    pub stride: [usize; 3],
}

impl Geometry {
    pub fn new<T: Scalar>(input: Shape5, spec: &ConvSpec, wts: &ConvWeights<T>) -> Result<Self> {
        let output = spec.output_shape(input)?;
        wts.check(spec)?;
        let pads = spec.pads();
        Ok(Geometry {
            input,
            output,
            padded: [
                input.t + 2 * pads[0],
                input.h + 2 * pads[1],
                input.w + 2 * pads[2],
            ],
            pads,
            stride: spec.stride,
        })
    }

    pub fn padded_shape(&self) -> Shape5 {
        Shape5::new(
            self.input.n,
            self.input.c,
            self.padded[0],
            self.padded[1],
            self.padded[2],
        )
    }

    /// Elements in one padded `(t, h, w)` volume.
    pub fn padded_volume(&self) -> usize {
        self.padded[0] * self.padded[1] * self.padded[2]
    }

    /// Stride 1 along `h` and `w`: output rows can be accumulated on the padded
    /// row pitch as one contiguous run per output frame.
    pub fn planar_unit_stride(&self) -> bool {
        self.stride[1] == 1 && self.stride[2] == 1
    }

    /// Length of the contiguous run covering all valid outputs of one frame
    /// when laid out on the padded pitch.
    pub fn frame_run(&self) -> usize {
        (self.output.h - 1) * self.padded[2] + self.output.w
    }
}
