use crate::conv::{conv3d_forward, ConvSpec, ConvWeights, Padding};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{Shape5, Tensor5};

/// Effective single kernel of two chained stride-1 convolutions, `a` then `b`.
///
/// For `Valid` padding and no nonlinearity in between,
/// `conv(conv(x, a), b) == conv(x, e)`. The composed taps are the full
/// (flipped) convolution of the two kernels contracted over the shared
/// channel, computed by running the correlation machinery with `a`'s kernels
/// as a batch of inputs and `b`'s flipped kernels as filters. Biases fold into
/// `e`'s bias: `b.bias[o] + Σ_m a.bias[m] · Σ b[o, m, ·]`.
pub fn compose_kernels<T: Scalar>(
    a: (&ConvSpec, &ConvWeights<T>),
    b: (&ConvSpec, &ConvWeights<T>),
) -> Result<(ConvSpec, ConvWeights<T>)> {
    let (sa, wa) = a;
    let (sb, wb) = b;
    sa.validate()?;
    sb.validate()?;
    wa.check(sa)?;
    wb.check(sb)?;
    if sa.c_out != sb.c_in {
        return Err(Error::ChannelMismatch {
            expected: sa.c_out,
            got: sb.c_in,
        });
    }
    if sa.stride != [1, 1, 1] || sb.stride != [1, 1, 1] {
        return Err(Error::InvalidSpec(
            "kernel composition needs unit strides".into(),
        ));
    }
    let mid = sa.c_out;

    // a as a batch over its input channels: (c_in_a, mid, ka...).
    let ka = wa.kernels.shape();
    let batch = Tensor5::from_fn(
        Shape5::new(ka.c, ka.n, ka.t, ka.h, ka.w),
        |[i, m, t, h, w]| wa.kernels.at(m, i, t, h, w),
    )?;
    let kb = wb.kernels.shape();
    let flipped = Tensor5::from_fn(kb, |[o, m, t, h, w]| {
        wb.kernels
            .at(o, m, kb.t - 1 - t, kb.h - 1 - h, kb.w - 1 - w)
    })?;
    let padded = batch.pad_zero([kb.t - 1, kb.h - 1, kb.w - 1]);
    let corr_spec = ConvSpec::new([kb.t, kb.h, kb.w], mid, sb.c_out).with_padding(Padding::Valid);
    let corr = conv3d_forward(
        &padded,
        &corr_spec,
        &ConvWeights {
            kernels: flipped,
            bias: vec![T::zero(); sb.c_out],
        },
    )?;

    let cs = corr.shape();
    let kernels = Tensor5::from_fn(
        Shape5::new(cs.c, cs.n, cs.t, cs.h, cs.w),
        |[o, i, t, h, w]| corr.at(i, o, t, h, w),
    )?;
    let bias = (0..sb.c_out)
        .map(|o| {
            (0..mid).fold(wb.bias[o], |acc, m| {
                let tap_sum = wb
                    .kernels
                    .volume(o, m)
                    .iter()
                    .fold(T::zero(), |s, &v| s + v);
                acc + wa.bias[m] * tap_sum
            })
        })
        .collect();
    let spec = ConvSpec {
        kt: sa.kt + sb.kt - 1,
        kh: sa.kh + sb.kh - 1,
        kw: sa.kw + sb.kw - 1,
        c_in: sa.c_in,
        c_out: sb.c_out,
        stride: [1, 1, 1],
        padding: Padding::Valid,
        bias: sa.bias || sb.bias,
    };
    Ok((spec, ConvWeights { kernels, bias }))
}
