use rayon::prelude::*;

use crate::conv::kernels::{axpy, axpy_strided};
use crate::conv::{ConvSpec, ConvWeights, Geometry};
use crate::error::Result;
use crate::scalar::Scalar;
use crate::tensor::Tensor5;

/// Optimized cross-correlation.
///
/// Work is split into independent `(n, c_out)` output volumes, so the result
/// does not depend on the rayon worker count. Within a volume the kernel taps
/// are applied as whole-run `axpy`s over the padded input; each output element
/// still receives its terms in `(c_in, kt, kh, kw)` order and the bias last.
pub fn conv3d_forward<T: Scalar>(
    x: &Tensor5<T>,
    spec: &ConvSpec,
    wts: &ConvWeights<T>,
) -> Result<Tensor5<T>> {
    let geo = Geometry::new(x.shape(), spec, wts)?;
    let xp = x.pad_zero(geo.pads);
    let out_shape = geo.output;
    let mut data = vec![T::zero(); out_shape.numel()];
    data.par_chunks_mut(out_shape.volume())
        .enumerate()
        .for_each(|(idx, out)| {
            let (n, oc) = (idx / spec.c_out, idx % spec.c_out);
            if geo.planar_unit_stride() {
                planar(
                    &geo,
                    spec,
                    xp.as_slice(),
                    wts.kernels.as_slice(),
                    n,
                    oc,
                    out,
                    wts.bias[oc],
                );
            } else {
                rows(
                    &geo,
                    spec,
                    xp.as_slice(),
                    wts.kernels.as_slice(),
                    n,
                    oc,
                    out,
                );
                let b = wts.bias[oc];
                out.iter_mut().for_each(|v| *v += b);
            }
        });
    Tensor5::from_vec(out_shape, data)
}

/// Unit stride in `h` and `w`: accumulate each output frame on the padded row
/// pitch, then gather the valid columns. With unit temporal stride all frames
/// collapse into a single run.
#[allow(clippy::too_many_arguments)]
fn planar<T: Scalar>(
    geo: &Geometry,
    spec: &ConvSpec,
    xp: &[T],
    k: &[T],
    n: usize,
    oc: usize,
    out: &mut [T],
    bias: T,
) {
    let [tp, hp, wp] = geo.padded;
    let hw = hp * wp;
    let o = geo.output;
    let st = geo.stride[0];
    let run = geo.frame_run();
    let (segments, seg_len) = if st == 1 {
        (1, (o.t - 1) * hw + run)
    } else {
        (o.t, run)
    };
    let mut acc = vec![T::zero(); (segments - 1) * hw + seg_len];
    let taps = spec.kt * spec.kh * spec.kw;
    for ic in 0..spec.c_in {
        let xbase = (n * spec.c_in + ic) * tp * hw;
        let kbase = (oc * spec.c_in + ic) * taps;
        for a in 0..spec.kt {
            for b in 0..spec.kh {
                for c in 0..spec.kw {
                    let w = k[kbase + (a * spec.kh + b) * spec.kw + c];
                    for s in 0..segments {
                        let src = xbase + (s * st + a) * hw + b * wp + c;
                        let dst = s * hw;
                        axpy(&mut acc[dst..dst + seg_len], w, &xp[src..src + seg_len]);
                    }
                }
            }
        }
    }
    for ot in 0..o.t {
        for oh in 0..o.h {
            let src = ot * hw + oh * wp;
            let dst = (ot * o.h + oh) * o.w;
            for (d, &s) in out[dst..dst + o.w].iter_mut().zip(&acc[src..src + o.w]) {
                *d = s + bias;
            }
        }
    }
}

/// General strides: accumulate one output row at a time.
fn rows<T: Scalar>(
    geo: &Geometry,
    spec: &ConvSpec,
    xp: &[T],
    k: &[T],
    n: usize,
    oc: usize,
    out: &mut [T],
) {
    let [tp, hp, wp] = geo.padded;
    let hw = hp * wp;
    let o = geo.output;
    let [st, sh, sw] = geo.stride;
    let taps = spec.kt * spec.kh * spec.kw;
    for ic in 0..spec.c_in {
        let xbase = (n * spec.c_in + ic) * tp * hw;
        let kbase = (oc * spec.c_in + ic) * taps;
        for a in 0..spec.kt {
            for b in 0..spec.kh {
                for c in 0..spec.kw {
                    let w = k[kbase + (a * spec.kh + b) * spec.kw + c];
                    for ot in 0..o.t {
                        for oh in 0..o.h {
                            let src = xbase + (ot * st + a) * hw + (oh * sh + b) * wp + c;
                            let dst = (ot * o.h + oh) * o.w;
                            let acc = &mut out[dst..dst + o.w];
                            if sw == 1 {
                                axpy(acc, w, &xp[src..src + o.w]);
                            } else {
                                axpy_strided(acc, w, &xp[src..], sw);
                            }
                        }
                    }
                }
            }
        }
    }
}
