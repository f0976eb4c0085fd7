use crate::conv::ConvWeights;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{Shape5, Tensor5};

/// Turns 2D kernels `(c_out, c_in, 1, kh, kw)` into 3D kernels of temporal
/// extent `kt` by repeating them along `t` and dividing by `kt`. On a clip
/// that is constant over time the inflated kernel reproduces the per-frame
/// 2D response. The bias is kept as is.
pub fn inflate_kernel<T: Scalar>(w2d: &ConvWeights<T>, kt: usize) -> Result<ConvWeights<T>> {
    let s = w2d.kernels.shape();
    if s.t != 1 {
        return Err(Error::InvalidSpec(format!(
            "inflation expects a 2D kernel, got shape {s}"
        )));
    }
    if kt == 0 {
        return Err(Error::InvalidSpec("temporal extent must be >= 1".into()));
    }
    let scale = T::of(1.0 / kt as f64);
    let shape = Shape5 { t: kt, ..s };
    let kernels = Tensor5::from_fn(shape, |[o, i, _, h, w]| {
        if kt == 1 {
            w2d.kernels.at(o, i, 0, h, w)
        } else {
            w2d.kernels.at(o, i, 0, h, w) * scale
        }
    })?;
    Ok(ConvWeights {
        kernels,
        bias: w2d.bias.clone(),
    })
}
