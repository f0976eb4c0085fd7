use fastconv::conv::{
    compose_kernels, conv3d_backward, conv3d_forward, conv3d_naive, random_case, ConvSpec,
    ConvWeights, Padding,
};
use fastconv::{Error, Shape5, Tensor5};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn weights<T: fastconv::Scalar>(spec: &ConvSpec, seed: u64) -> ConvWeights<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ConvWeights {
        kernels: Tensor5::random_uniform(spec.kernel_shape(), -1.0, 1.0, &mut rng).unwrap(),
        bias: vec![T::zero(); spec.c_out],
    }
}

fn random<T: fastconv::Scalar>(shape: Shape5, seed: u64) -> Tensor5<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Tensor5::random_uniform(shape, -1.0, 1.0, &mut rng).unwrap()
}

#[test]
fn ones_kernel_sums_eight() {
    let x = Tensor5::<f32>::ones(Shape5::new(1, 1, 3, 3, 3)).unwrap();
    let spec = ConvSpec::new([2, 2, 2], 1, 1).with_padding(Padding::Valid);
    let w = ConvWeights {
        kernels: Tensor5::ones(spec.kernel_shape()).unwrap(),
        bias: vec![0.0],
    };
    for y in [
        conv3d_naive(&x, &spec, &w).unwrap(),
        conv3d_forward(&x, &spec, &w).unwrap(),
    ] {
        assert_eq!(y.shape(), Shape5::new(1, 1, 2, 2, 2));
        assert!(y.as_slice().iter().all(|&v| v == 8.0));
    }
}

#[test]
fn delta_kernel_is_identity() {
    let x = random::<f32>(Shape5::new(2, 1, 3, 4, 5), 7);
    let spec = ConvSpec::new([1, 1, 1], 1, 1);
    let w = ConvWeights {
        kernels: Tensor5::ones(spec.kernel_shape()).unwrap(),
        bias: vec![0.0],
    };
    assert_eq!(conv3d_naive(&x, &spec, &w).unwrap(), x);
    assert_eq!(conv3d_forward(&x, &spec, &w).unwrap(), x);
}

/// Values computed once by an independent float64 re-implementation of the
/// six-loop sum over the same seeded tensors.
#[test]
fn naive_matches_hand_checked_values() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let x =
        Tensor5::<f32>::random_uniform(Shape5::new(2, 3, 5, 8, 8), -1.0, 1.0, &mut rng).unwrap();
    let spec = ConvSpec::new([3, 3, 3], 3, 4).with_stride([1, 2, 2]);
    let k = Tensor5::<f32>::random_uniform(spec.kernel_shape(), -1.0, 1.0, &mut rng).unwrap();
    let w = ConvWeights {
        kernels: k,
        bias: vec![0.0; 4],
    };
    let y = conv3d_naive(&x, &spec, &w).unwrap();
    assert_eq!(y.shape(), Shape5::new(2, 4, 5, 4, 4));
    assert!((y.at(0, 0, 0, 0, 0) as f64 - 0.545_544_060_329_585_4).abs() < 1e-5);
    assert!((y.at(1, 3, 4, 3, 2) as f64 - 1.502_735_138_518_752_4).abs() < 1e-5);
}

#[test]
fn forward_matches_oracle_on_random_cases() {
    for seed in 0..120 {
        let case = random_case::<f32>(seed);
        let want = conv3d_naive(&case.input, &case.spec, &case.weights).unwrap();
        let got = conv3d_forward(&case.input, &case.spec, &case.weights).unwrap();
        let rel = got.max_rel_diff(&want).unwrap();
        assert!(rel <= 1e-5, "seed {seed}: {:?} rel {rel}", case.spec);
    }
}

#[test]
fn zeros_in_bias_out() {
    let spec = ConvSpec::new([3, 3, 3], 2, 3).with_bias(true);
    let mut w = weights::<f32>(&spec, 1);
    w.bias = vec![0.5, -1.0, 2.0];
    let x = Tensor5::<f32>::zeros(Shape5::new(1, 2, 4, 4, 4)).unwrap();
    let y = conv3d_forward(&x, &spec, &w).unwrap();
    for oc in 0..3 {
        assert!(y.volume(0, oc).iter().all(|&v| v == w.bias[oc]));
    }
}

#[test]
fn forward_is_deterministic_across_thread_counts() {
    let case = random_case::<f32>(99);
    let x = random::<f32>(Shape5::new(2, 4, 6, 9, 9), 5);
    let spec = ConvSpec::new([3, 3, 3], 4, 4);
    let w = weights::<f32>(&spec, 3);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                (
                    conv3d_forward(&x, &spec, &w).unwrap(),
                    conv3d_forward(&case.input, &case.spec, &case.weights).unwrap(),
                    conv3d_backward(&x, &spec, &w, &x).unwrap(),
                )
            })
    };
    let (a1, b1, g1) = run(1);
    let (a4, b4, g4) = run(4);
    assert_eq!(a1.to_t5b_bytes(), a4.to_t5b_bytes());
    assert_eq!(b1.to_t5b_bytes(), b4.to_t5b_bytes());
    assert_eq!(g1.input.to_t5b_bytes(), g4.input.to_t5b_bytes());
    assert_eq!(
        g1.weights.kernels.to_t5b_bytes(),
        g4.weights.kernels.to_t5b_bytes()
    );
    assert_eq!(conv3d_forward(&x, &spec, &w).unwrap(), a1);
}

#[test]
fn rejects_bad_geometry() {
    let x = Tensor5::<f32>::zeros(Shape5::new(1, 2, 2, 2, 2)).unwrap();
    let spec = ConvSpec::new([3, 3, 3], 3, 1);
    assert!(matches!(
        conv3d_forward(&x, &spec, &ConvWeights::zeros(&spec).unwrap()),
        Err(Error::ChannelMismatch { .. })
    ));
    let spec = ConvSpec::new([3, 3, 3], 2, 1).with_padding(Padding::Valid);
    assert!(matches!(
        conv3d_naive(&x, &spec, &ConvWeights::zeros(&spec).unwrap()),
        Err(Error::KernelTooLarge { .. })
    ));
    let spec = ConvSpec::new([2, 3, 3], 2, 1);
    assert!(matches!(spec.validate(), Err(Error::InvalidSpec(_))));
    let spec = ConvSpec::new([1, 1, 1], 2, 1);
    let wrong = ConvWeights::<f32>::zeros(&ConvSpec::new([1, 1, 1], 2, 2)).unwrap();
    assert!(conv3d_forward(&x, &spec, &wrong).is_err());
}

#[test]
fn backward_zero_grad_out() {
    let x = random::<f32>(Shape5::new(1, 2, 4, 5, 5), 1);
    let spec = ConvSpec::new([3, 3, 3], 2, 3).with_bias(true);
    let w = weights::<f32>(&spec, 2);
    let g = Tensor5::zeros(spec.output_shape(x.shape()).unwrap()).unwrap();
    let grads = conv3d_backward(&x, &spec, &w, &g).unwrap();
    assert!(grads.input.as_slice().iter().all(|&v| v == 0.0));
    assert!(grads.weights.kernels.as_slice().iter().all(|&v| v == 0.0));
    assert!(grads.weights.bias.iter().all(|&v| v == 0.0));
}

#[test]
fn backward_scalar_kernel_scales() {
    let x = random::<f32>(Shape5::new(1, 1, 3, 4, 5), 4);
    let spec = ConvSpec::new([1, 1, 1], 1, 1);
    let w = ConvWeights {
        kernels: Tensor5::full(spec.kernel_shape(), 1.75).unwrap(),
        bias: vec![0.0],
    };
    let g = random::<f32>(x.shape(), 5);
    let grads = conv3d_backward(&x, &spec, &w, &g).unwrap();
    assert_eq!(grads.input, g.scale(1.75));
}

#[test]
fn backward_rejects_wrong_grad_shape() {
    let x = random::<f32>(Shape5::new(1, 1, 3, 4, 5), 4);
    let spec = ConvSpec::new([1, 1, 1], 1, 1);
    let w = weights::<f32>(&spec, 1);
    let g = Tensor5::zeros(Shape5::new(1, 1, 3, 4, 4)).unwrap();
    assert!(matches!(
        conv3d_backward(&x, &spec, &w, &g),
        Err(Error::ShapeMismatch { .. })
    ));
}

/// Central differences of `L = Σ y² / 2`, entry by entry, in f64.
fn finite_difference_check(seed: u64) {
    let case = random_case::<f64>(seed);
    let (x, spec, w) = (&case.input, &case.spec, &case.weights);
    let loss = |x: &Tensor5<f64>, w: &ConvWeights<f64>| {
        let y = conv3d_naive(x, spec, w).unwrap();
        y.as_slice().iter().map(|v| v * v).sum::<f64>() / 2.0
    };
    let y = conv3d_forward(x, spec, w).unwrap();
    let grads = conv3d_backward(x, spec, w, &y).unwrap();
    let h = 1e-3;
    let check = |analytic: f64, numeric: f64, what: &str| {
        let scale = analytic.abs().max(numeric.abs());
        if scale > 1e-6 {
            let rel = (analytic - numeric).abs() / scale;
            assert!(
                rel <= 1e-3,
                "seed {seed} {what}: analytic {analytic} numeric {numeric}"
            );
        }
    };
    for i in 0..x.numel() {
        let mut xp = x.clone();
        xp.as_mut_slice()[i] += h;
        let mut xm = x.clone();
        xm.as_mut_slice()[i] -= h;
        check(
            grads.input.as_slice()[i],
            (loss(&xp, w) - loss(&xm, w)) / (2.0 * h),
            "input",
        );
    }
    for i in 0..w.kernels.numel() {
        let mut wp = w.clone();
        wp.kernels.as_mut_slice()[i] += h;
        let mut wm = w.clone();
        wm.kernels.as_mut_slice()[i] -= h;
        check(
            grads.weights.kernels.as_slice()[i],
            (loss(x, &wp) - loss(x, &wm)) / (2.0 * h),
            "kernel",
        );
    }
    for o in 0..spec.c_out {
        let mut wp = w.clone();
        wp.bias[o] += h;
        let mut wm = w.clone();
        wm.bias[o] -= h;
        check(
            grads.weights.bias[o],
            (loss(x, &wp) - loss(x, &wm)) / (2.0 * h),
            "bias",
        );
    }
}

#[test]
fn backward_matches_finite_differences() {
    for seed in 0..12 {
        finite_difference_check(seed);
    }
}

#[test]
fn compose_with_identity_returns_other() {
    let a = ConvSpec::new([1, 1, 1], 2, 2).with_padding(Padding::Valid);
    let mut kernels = Tensor5::<f64>::zeros(a.kernel_shape()).unwrap();
    kernels.set(0, 0, 0, 0, 0, 1.0);
    kernels.set(1, 1, 0, 0, 0, 1.0);
    let wa = ConvWeights {
        kernels,
        bias: vec![0.0; 2],
    };
    let b = ConvSpec::new([3, 1, 3], 2, 3).with_padding(Padding::Valid);
    let wb = weights::<f64>(&b, 8);
    let (spec, e) = compose_kernels((&a, &wa), (&b, &wb)).unwrap();
    assert_eq!(spec.kernel(), [3, 1, 3]);
    assert_eq!(e.kernels, wb.kernels);
}

#[test]
fn compose_is_polynomial_product() {
    let (p, q, r, s) = (2.0f64, -3.0, 0.5, 4.0);
    let spec = ConvSpec::new([1, 1, 2], 1, 1).with_padding(Padding::Valid);
    let wa = ConvWeights {
        kernels: Tensor5::from_vec(spec.kernel_shape(), vec![p, q]).unwrap(),
        bias: vec![0.0],
    };
    let wb = ConvWeights {
        kernels: Tensor5::from_vec(spec.kernel_shape(), vec![r, s]).unwrap(),
        bias: vec![0.0],
    };
    let (e_spec, e) = compose_kernels((&spec, &wa), (&spec, &wb)).unwrap();
    assert_eq!(e_spec.kernel(), [1, 1, 3]);
    assert_eq!(e.kernels.as_slice(), &[p * r, p * s + q * r, q * s]);
}

#[test]
fn compose_rejects_mismatch() {
    let a = ConvSpec::new([1, 1, 1], 2, 3);
    let b = ConvSpec::new([1, 1, 1], 2, 3);
    let (wa, wb) = (weights::<f32>(&a, 1), weights::<f32>(&b, 2));
    assert!(matches!(
        compose_kernels((&a, &wa), (&b, &wb)),
        Err(Error::ChannelMismatch { .. })
    ));
    let b = ConvSpec::new([1, 1, 1], 3, 3).with_stride([2, 1, 1]);
    let wb = weights::<f32>(&b, 2);
    assert!(matches!(
        compose_kernels((&a, &wa), (&b, &wb)),
        Err(Error::InvalidSpec(_))
    ));
}

#[test]
fn fast_triple_composes_to_five_cube() {
    let valid = |k| ConvSpec::new(k, 2, 2).with_padding(Padding::Valid);
    let (xy, xt, yt) = (valid([1, 3, 3]), valid([3, 1, 3]), valid([3, 3, 1]));
    let (w1, w2, w3) = (
        weights::<f64>(&xy, 1),
        weights::<f64>(&xt, 2),
        weights::<f64>(&yt, 3),
    );
    let (s12, w12) = compose_kernels((&xy, &w1), (&xt, &w2)).unwrap();
    let (s, e) = compose_kernels((&s12, &w12), (&yt, &w3)).unwrap();
    assert_eq!(s.kernel(), [5, 5, 5]);
    let x = random::<f64>(Shape5::new(1, 2, 7, 8, 9), 11);
    let chained = conv3d_forward(
        &conv3d_forward(&conv3d_forward(&x, &xy, &w1).unwrap(), &xt, &w2).unwrap(),
        &yt,
        &w3,
    )
    .unwrap();
    let single = conv3d_forward(&x, &s, &e).unwrap();
    assert!(chained.max_rel_diff(&single).unwrap() <= 1e-5);
}

#[test]
fn composed_bias_folds_through() {
    let a = ConvSpec::new([1, 2, 2], 1, 2)
        .with_padding(Padding::Valid)
        .with_bias(true);
    let b = ConvSpec::new([2, 1, 1], 2, 1)
        .with_padding(Padding::Valid)
        .with_bias(true);
    let mut wa = weights::<f64>(&a, 4);
    wa.bias = vec![0.3, -0.7];
    let mut wb = weights::<f64>(&b, 5);
    wb.bias = vec![1.1];
    let (s, e) = compose_kernels((&a, &wa), (&b, &wb)).unwrap();
    let x = random::<f64>(Shape5::new(1, 1, 4, 5, 5), 6);
    let chained = conv3d_forward(&conv3d_forward(&x, &a, &wa).unwrap(), &b, &wb).unwrap();
    assert!(
        chained
            .max_abs_diff(&conv3d_forward(&x, &s, &e).unwrap())
            .unwrap()
            < 1e-12
    );
}

fn spec_strategy() -> impl Strategy<Value = ConvSpec> {
    (1usize..=3, 1usize..=3, 1usize..=3, 1usize..=3, 1usize..=3).prop_map(|(kt, kh, kw, ci, co)| {
        ConvSpec::new([kt, kh, kw], ci, co).with_padding(Padding::Valid)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn linearity(spec in spec_strategy(), seed in 0u64..1000, alpha in -2.0f64..2.0, beta in -2.0f64..2.0) {
        let shape = Shape5::new(1, spec.c_in, 4, 5, 5);
        let x = random::<f64>(shape, seed);
        let y = random::<f64>(shape, seed + 1);
        let w = weights::<f64>(&spec, seed + 2);
        let mix = x.scale(alpha).add(&y.scale(beta)).unwrap();
        let lhs = conv3d_forward(&mix, &spec, &w).unwrap();
        let rhs = conv3d_forward(&x, &spec, &w).unwrap().scale(alpha)
            .add(&conv3d_forward(&y, &spec, &w).unwrap().scale(beta)).unwrap();
        prop_assert!(lhs.max_rel_diff(&rhs).unwrap() <= 1e-5);
    }

    #[test]
    fn shift_equivariance(spec in spec_strategy(), seed in 0u64..1000, axis in 2usize..5) {
        let x = random::<f32>(Shape5::new(1, spec.c_in, 5, 6, 6), seed);
        let w = weights::<f32>(&spec, seed + 7);
        let y = conv3d_forward(&x, &spec, &w).unwrap();
        let ys = conv3d_forward(&x.shift(axis, 1), &spec, &w).unwrap();
        let s = y.shape();
        for c in 0..s.c {
            for t in 0..s.t {
                for h in 0..s.h {
                    for ww in 0..s.w {
                        let mut idx = [t, h, ww];
                        idx[axis - 2] += 1;
                        if idx[axis - 2] < [s.t, s.h, s.w][axis - 2] {
                            prop_assert_eq!(ys.at(0, c, idx[0], idx[1], idx[2]).to_bits(), y.at(0, c, t, h, ww).to_bits());
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn composition_equals_chain(a in spec_strategy(), kb in (1usize..=3, 1usize..=3, 1usize..=3), co in 1usize..=3, seed in 0u64..1000) {
        let b = ConvSpec::new([kb.0, kb.1, kb.2], a.c_out, co).with_padding(Padding::Valid);
        let (wa, wb) = (weights::<f64>(&a, seed), weights::<f64>(&b, seed + 1));
        let x = random::<f64>(Shape5::new(1, a.c_in, 6, 6, 6), seed + 2);
        let chained = conv3d_forward(&conv3d_forward(&x, &a, &wa).unwrap(), &b, &wb).unwrap();
        let (s, e) = compose_kernels((&a, &wa), (&b, &wb)).unwrap();
        prop_assert!(chained.max_rel_diff(&conv3d_forward(&x, &s, &e).unwrap()).unwrap() <= 1e-5);
    }
}
