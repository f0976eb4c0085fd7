use rayon::prelude::*;

use crate::conv::kernels::{axpy, dot, dot_strided, scatter_strided};
use crate::conv::{ConvSpec, ConvWeights, Geometry};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{Shape5, Tensor5};

#[derive(Clone, Debug)]
pub struct ConvGrads<T> {
    pub input: Tensor5<T>,
    pub weights: ConvWeights<T>,
}

/// Gradients of a convolution with respect to its input and its weights.
///
/// `grad_x` is the transposed convolution of `grad_out` with the kernels,
/// `grad_w[o, i]` correlates input channel `i` with `grad_out` channel `o`,
/// and the bias gradient is the per-channel sum of `grad_out`.
pub fn conv3d_backward<T: Scalar>(
    x: &Tensor5<T>,
    spec: &ConvSpec,
    wts: &ConvWeights<T>,
    grad_out: &Tensor5<T>,
) -> Result<ConvGrads<T>> {
    let geo = checked(x, spec, wts, grad_out)?;
    let xp = x.pad_zero(geo.pads);
    let g = Upstream::new(&geo, grad_out);
    Ok(ConvGrads {
        input: input_grad(&geo, spec, wts, &g)?,
        weights: weight_grad(&geo, spec, &xp, grad_out, &g)?,
    })
}

pub fn conv3d_backward_input<T: Scalar>(
    x_shape: Shape5,
    spec: &ConvSpec,
    wts: &ConvWeights<T>,
    grad_out: &Tensor5<T>,
) -> Result<Tensor5<T>> {
    let geo = Geometry::new(x_shape, spec, wts)?;
    check_grad_shape(&geo, grad_out)?;
    input_grad(&geo, spec, wts, &Upstream::new(&geo, grad_out))
}

pub fn conv3d_backward_weights<T: Scalar>(
    x: &Tensor5<T>,
    spec: &ConvSpec,
    wts: &ConvWeights<T>,
    grad_out: &Tensor5<T>,
) -> Result<ConvWeights<T>> {
    let geo = checked(x, spec, wts, grad_out)?;
    let xp = x.pad_zero(geo.pads);
    weight_grad(&geo, spec, &xp, grad_out, &Upstream::new(&geo, grad_out))
}

fn checked<T: Scalar>(
    x: &Tensor5<T>,
    spec: &ConvSpec,
    wts: &ConvWeights<T>,
    grad_out: &Tensor5<T>,
) -> Result<Geometry> {
    let geo = Geometry::new(x.shape(), spec, wts)?;
    check_grad_shape(&geo, grad_out)?;
    Ok(geo)
}

fn check_grad_shape<T: Scalar>(geo: &Geometry, grad_out: &Tensor5<T>) -> Result<()> {
    if grad_out.shape() != geo.output {
        return Err(Error::ShapeMismatch {
            op: "conv backward",
            left: geo.output,
            right: grad_out.shape(),
        });
    }
    Ok(())
}

/// Upstream gradient, re-laid on the padded row pitch when the planar paths apply.
enum Upstream<'a, T> {
    /// `(n, c_out)` volumes of `o.t * hp * wp`, zeros off the valid columns.
    Wide {
        data: Vec<T>,
        volume: usize,
    },
    Dense(&'a Tensor5<T>),
}

impl<'a, T: Scalar> Upstream<'a, T> {
    fn new(geo: &Geometry, grad_out: &'a Tensor5<T>) -> Self {
        if !geo.planar_unit_stride() {
            return Upstream::Dense(grad_out);
        }
        let o = geo.output;
        let [_, hp, wp] = geo.padded;
        let volume = o.t * hp * wp;
        let mut data = vec![T::zero(); o.n * o.c * volume];
        for (dst, src) in data
            .chunks_exact_mut(volume)
            .zip(grad_out.as_slice().chunks_exact(o.volume()))
        {
            for ot in 0..o.t {
                for oh in 0..o.h {
                    let d = ot * hp * wp + oh * wp;
                    let s = (ot * o.h + oh) * o.w;
                    dst[d..d + o.w].copy_from_slice(&src[s..s + o.w]);
                }
            }
        }
        Upstream::Wide { data, volume }
    }
}

fn weight_grad<T: Scalar>(
    geo: &Geometry,
    spec: &ConvSpec,
    xp: &Tensor5<T>,
    grad_out: &Tensor5<T>,
    g: &Upstream<'_, T>,
) -> Result<ConvWeights<T>> {
    let [tp, hp, wp] = geo.padded;
    let hw = hp * wp;
    let o = geo.output;
    let [st, sh, sw] = geo.stride;
    let taps = spec.kt * spec.kh * spec.kw;
    let xs = xp.as_slice();
    let mut kernels = vec![T::zero(); spec.kernel_shape().numel()];
    kernels
        .par_chunks_mut(taps)
        .enumerate()
        .for_each(|(idx, gk)| {
            let (oc, ic) = (idx / spec.c_in, idx % spec.c_in);
            for a in 0..spec.kt {
                for b in 0..spec.kh {
                    for c in 0..spec.kw {
                        let mut s = T::zero();
                        for n in 0..o.n {
                            let xbase = (n * spec.c_in + ic) * tp * hw;
                            match g {
                                Upstream::Wide { data, volume } => {
                                    let gv = &data[(n * spec.c_out + oc) * volume..][..*volume];
                                    let (segments, seg_len) = if st == 1 {
                                        (1, (o.t - 1) * hw + geo.frame_run())
                                    } else {
                                        (o.t, geo.frame_run())
                                    };
                                    for seg in 0..segments {
                                        let src = xbase + (seg * st + a) * hw + b * wp + c;
                                        s += dot(
                                            &gv[seg * hw..seg * hw + seg_len],
                                            &xs[src..src + seg_len],
                                        );
                                    }
                                }
                                Upstream::Dense(gd) => {
                                    let gv = gd.volume(n, oc);
                                    for ot in 0..o.t {
                                        for oh in 0..o.h {
                                            let row = &gv[(ot * o.h + oh) * o.w..][..o.w];
                                            let src =
                                                xbase + (ot * st + a) * hw + (oh * sh + b) * wp + c;
                                            s += if sw == 1 {
                                                dot(row, &xs[src..src + o.w])
                                            } else {
                                                dot_strided(row, &xs[src..], sw)
                                            };
                                        }
                                    }
                                }
                            }
                        }
                        gk[(a * spec.kh + b) * spec.kw + c] = s;
                    }
                }
            }
        });
    let bias = (0..spec.c_out)
        .map(|oc| {
            (0..o.n).fold(T::zero(), |acc, n| {
                grad_out.volume(n, oc).iter().fold(acc, |s, &v| s + v)
            })
        })
        .collect();
    Ok(ConvWeights {
        kernels: Tensor5::from_vec(spec.kernel_shape(), kernels)?,
        bias,
    })
}

fn input_grad<T: Scalar>(
    geo: &Geometry,
    spec: &ConvSpec,
    wts: &ConvWeights<T>,
    g: &Upstream<'_, T>,
) -> Result<Tensor5<T>> {
    let [_, hp, wp] = geo.padded;
    let hw = hp * wp;
    let o = geo.output;
    let [st, sh, sw] = geo.stride;
    let taps = spec.kt * spec.kh * spec.kw;
    let k = wts.kernels.as_slice();
    let mut padded = vec![T::zero(); geo.padded_shape().numel()];
    padded
        .par_chunks_mut(geo.padded_volume())
        .enumerate()
        .for_each(|(idx, gx)| {
            let (n, ic) = (idx / spec.c_in, idx % spec.c_in);
            for oc in 0..spec.c_out {
                let kbase = (oc * spec.c_in + ic) * taps;
                for a in 0..spec.kt {
                    for b in 0..spec.kh {
                        for c in 0..spec.kw {
                            let w = k[kbase + (a * spec.kh + b) * spec.kw + c];
                            match g {
                                Upstream::Wide { data, volume } => {
                                    let gv = &data[(n * spec.c_out + oc) * volume..][..*volume];
                                    let (segments, seg_len) = if st == 1 {
                                        (1, (o.t - 1) * hw + geo.frame_run())
                                    } else {
                                        (o.t, geo.frame_run())
                                    };
                                    for seg in 0..segments {
                                        let dst = (seg * st + a) * hw + b * wp + c;
                                        axpy(
                                            &mut gx[dst..dst + seg_len],
                                            w,
                                            &gv[seg * hw..seg * hw + seg_len],
                                        );
                                    }
                                }
                                Upstream::Dense(gd) => {
                                    let gv = gd.volume(n, oc);
                                    for ot in 0..o.t {
                                        for oh in 0..o.h {
                                            let row = &gv[(ot * o.h + oh) * o.w..][..o.w];
                                            let dst = (ot * st + a) * hw + (oh * sh + b) * wp + c;
                                            if sw == 1 {
                                                axpy(&mut gx[dst..dst + o.w], w, row);
                                            } else {
                                                scatter_strided(&mut gx[dst..], w, row, sw);
                                            }
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        });
    Tensor5::from_vec(geo.padded_shape(), padded)?.crop(geo.pads)
}
