use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::conv::{ConvSpec, ConvWeights, Padding};
use crate::scalar::Scalar;
use crate::tensor::{Shape5, Tensor5};

/// A seeded random convolution problem.
#[derive(Clone, Debug)]
pub struct ConvCase<T> {
    pub seed: u64,
    pub input: Tensor5<T>,
    pub spec: ConvSpec,
    pub weights: ConvWeights<T>,
}

/// Draws a convolution problem from `seed`.
///
/// Kernel extents come from `{1, 2, 3}` per axis (`{1, 3}` under `Same`
/// padding), strides from `{1, 2}`, channels from `1..=4`, batch from
/// `{1, 2}`, padding is `Valid` or `Same` with equal odds, and each input
/// extent is at least the kernel extent and at most 9. Inputs, kernels and
/// (half the time) biases are uniform in `[-1, 1)`.
pub fn random_case<T: Scalar>(seed: u64) -> ConvCase<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let padding = if rng.random_bool(0.5) {
        Padding::Same
    } else {
        Padding::Valid
    };
    let mut extent = || match padding {
        Padding::Same => [1, 3][rng.random_range(0..2)],
        Padding::Valid => rng.random_range(1..=3),
    };
    let kernel = [extent(), extent(), extent()];
    let stride = [
        rng.random_range(1..=2),
        rng.random_range(1..=2),
        rng.random_range(1..=2),
    ];
    let c_in = rng.random_range(1..=4);
    let c_out = rng.random_range(1..=4);
    let bias = rng.random_bool(0.5);
    let spec = ConvSpec::new(kernel, c_in, c_out)
        .with_stride(stride)
        .with_padding(padding)
        .with_bias(bias);
    let n = rng.random_range(1..=2);
    let mut dim = |k: usize| rng.random_range(k.max(2)..=9);
    let shape = Shape5::new(n, c_in, dim(kernel[0]), dim(kernel[1]), dim(kernel[2]));
    let input = Tensor5::random_uniform(shape, -1.0, 1.0, &mut rng).expect("valid shape");
    let kernels =
        Tensor5::random_uniform(spec.kernel_shape(), -1.0, 1.0, &mut rng).expect("valid shape");
    let bias = (0..c_out)
        .map(|_| {
            if bias {
                T::of(rng.random_range(-1.0..1.0))
            } else {
                T::zero()
            }
        })
        .collect();
    ConvCase {
        seed,
        input,
        spec,
        weights: ConvWeights { kernels, bias },
    }
}
