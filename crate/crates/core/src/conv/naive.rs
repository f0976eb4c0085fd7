use crate::conv::{ConvSpec, ConvWeights, Geometry};
use crate::error::Result;
use crate::scalar::Scalar;
use crate::tensor::Tensor5;

/// Reference cross-correlation: pad, then sum directly over every output
/// element. Deliberately unoptimized; other paths are tested against it.
pub fn conv3d_naive<T: Scalar>(
    x: &Tensor5<T>,
    spec: &ConvSpec,
    wts: &ConvWeights<T>,
) -> Result<Tensor5<T>> {
    let geo = Geometry::new(x.shape(), spec, wts)?;
    let xp = x.pad_zero(geo.pads);
    let out_shape = geo.output;
    let [st, sh, sw] = geo.stride;
    let mut out = Tensor5::zeros(out_shape)?;
    for n in 0..out_shape.n {
        for oc in 0..spec.c_out {
            for ot in 0..out_shape.t {
                for oh in 0..out_shape.h {
                    for ow in 0..out_shape.w {
                        let mut sum = T::zero();
                        for ic in 0..spec.c_in {
                            for a in 0..spec.kt {
                                for b in 0..spec.kh {
                                    for c in 0..spec.kw {
                                        sum += xp.at(n, ic, ot * st + a, oh * sh + b, ow * sw + c)
                                            * wts.kernels.at(oc, ic, a, b, c);
                                    }
                                }
                            }
                        }
                        out.set(n, oc, ot, oh, ow, sum + wts.bias[oc]);
                    }
                }
            }
        }
    }
    Ok(out)
}
