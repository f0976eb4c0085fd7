use fastconv::block::{Block, BlockKind, BlockOptions};
use fastconv::data::{gen_dataset, MotionClass, SyntheticSpec};
use fastconv::network::{NetConfig, Network};
use fastconv::train::*;
use fastconv::{Error, Shape5, Tensor5};
use proptest::prelude::*;

fn small_set(per_class: usize, seed: u64) -> fastconv::data::Dataset {
    gen_dataset(&SyntheticSpec::moving_bars(), per_class, 2, seed).unwrap()
}

fn quick(epochs: usize) -> TrainConfig {
    TrainConfig {
        epochs,
        ..TrainConfig::default()
    }
}

#[test]
fn schedule_anchor_values() {
    let s = LrSchedule::default();
    assert!((s.lr_at(0.0) - 2e-3).abs() < 1e-12);
    assert!((s.lr_at(5.0f64.next_down()) - 4e-5).abs() < 1e-12);
    assert!((s.lr_at(5.0) - 1e-3).abs() < 1e-12);
    assert!((s.lr_at(10.0) - 5e-4).abs() < 1e-12);
    assert!((s.lr_at(2.5) - 1.02e-3).abs() < 1e-9);
}

proptest! {
    #[test]
    fn schedule_stays_in_cycle_range(epoch in 0.0f64..40.0) {
        let s = LrSchedule::default();
        let c = (epoch / 5.0).floor() as u32;
        let lr = s.lr_at(epoch);
        prop_assert!(lr >= s.lr_min - 1e-18 && lr <= s.cycle_max(c) + 1e-18);
    }

    #[test]
    fn schedule_is_continuous_within_a_cycle(cycle in 0u32..6, frac in 0.0f64..0.999) {
        let s = LrSchedule::default();
        let e = 5.0 * cycle as f64 + 5.0 * frac;
        let d = 1e-6;
        // |d lr / d epoch| <= π/2 · (max − min) / 5
        prop_assert!((s.lr_at(e + d) - s.lr_at(e)).abs() <= 1e-3 * d);
        prop_assert!(s.lr_at(e + d) <= s.lr_at(e));
    }

    #[test]
    fn softmax_grads_sum_to_zero(logits in prop::collection::vec(-30.0f64..30.0, 2..10), pick in 0usize..10) {
        let label = pick % logits.len();
        let (loss, grad) = softmax_xent(&logits, label).unwrap();
        prop_assert!(loss >= 0.0);
        prop_assert!(grad.iter().sum::<f64>().abs() <= 1e-7);
    }
}

#[test]
fn restarts_start_at_halved_maximum() {
    let s = LrSchedule::default();
    for c in 0..6 {
        assert_eq!(s.lr_at(5.0 * c as f64), s.cycle_max(c));
        assert!((s.cycle_max(c) - 2e-3 / 2f64.powi(c as i32)).abs() < 1e-18);
    }
}

#[test]
fn sgd_examples() {
    let mut w = vec![1.0f64, -0.5, 2.0];
    let g = [0.3, -0.2, 0.1];
    let mut v = vec![0.0; 3];
    sgd_step(&mut w, &g, &mut v, 0.1, 0.9, 0.0).unwrap();
    for (a, (w0, g)) in w.iter().zip([1.0, -0.5, 2.0].iter().zip(g)) {
        assert!((a - (w0 - 0.1 * g)).abs() < 1e-15);
    }
    sgd_step(&mut w, &g, &mut v, 0.1, 0.9, 0.0).unwrap();
    for (a, (w0, g)) in w.iter().zip([1.0, -0.5, 2.0].iter().zip(g)) {
        assert!((a - (w0 - 0.1 * g * 2.9)).abs() < 1e-15);
    }
}

#[test]
fn sgd_state_updates_every_layer_and_checks_shapes() {
    let mut block = Block::<f32>::new(
        BlockKind::Fast,
        2,
        3,
        3,
        [1, 1, 1],
        1,
        BlockOptions::default(),
    )
    .unwrap();
    let before = block.layers().to_vec();
    let grads: Vec<_> = before
        .iter()
        .map(|l| fastconv::conv::ConvWeights {
            kernels: Tensor5::full(l.spec.kernel_shape(), 1.0).unwrap(),
            bias: vec![0.0; l.spec.c_out],
        })
        .collect();
    let mut sgd = SgdState::new(0.9, 0.0);
    sgd.step(block.layers_mut(), &grads, 0.01).unwrap();
    for (b, a) in before.iter().zip(block.layers()) {
        assert_ne!(b.weights.kernels, a.weights.kernels, "{}", a.name);
    }
    assert_eq!(sgd.velocity().len(), 3);
    assert!(matches!(
        sgd.step(block.layers_mut(), &grads[..2], 0.01),
        Err(Error::CountMismatch { .. })
    ));
    let mut wrong = grads.clone();
    wrong[0].kernels = Tensor5::zeros(Shape5::new(1, 1, 1, 1, 1)).unwrap();
    assert!(matches!(
        sgd.step(block.layers_mut(), &wrong, 0.01),
        Err(Error::ShapeMismatch { .. })
    ));
}

#[test]
fn xent_examples() {
    for c in [2usize, 4, 101] {
        let (loss, _) = softmax_xent(&vec![0.7f64; c], 1).unwrap();
        assert!((loss - (c as f64).ln()).abs() < 1e-12);
    }
    let mut prev = f64::INFINITY;
    for z in [0.0, 1.0, 5.0, 20.0, 80.0, 500.0] {
        let (loss, _) = softmax_xent(&[0.0, z, -1.0], 1).unwrap();
        assert!(loss < prev || (loss == 0.0 && prev == 0.0));
        prev = loss;
    }
    assert!(prev < 1e-30);
    assert!(matches!(
        softmax_xent(&[0.0f32; 4], 4),
        Err(Error::LabelOutOfRange {
            label: 4,
            classes: 4
        })
    ));
}

#[test]
fn batch_xent_averages() {
    let logits = Tensor5::from_vec(
        Shape5::new(2, 3, 1, 1, 1),
        vec![1.0f64, 2.0, 3.0, 0.0, 0.0, 0.0],
    )
    .unwrap();
    let (losses, grad) = batch_xent(&logits, &[2, 0]).unwrap();
    let (l0, g0) = softmax_xent(&[1.0, 2.0, 3.0], 2).unwrap();
    assert_eq!(losses[0], l0);
    assert!((grad.as_slice()[0] - g0[0] / 2.0).abs() < 1e-15);
    assert!(batch_xent(&logits, &[0]).is_err());
}

#[test]
fn zero_learning_rate_keeps_weights_and_loss() {
    let ds = small_set(2, 3);
    let mut net = Network::<f32>::build(&NetConfig::tiny(BlockKind::Fast), 4).unwrap();
    let before = net.clone();
    let initial = evaluate(&net, &ds.train, 8).unwrap();
    let cfg = TrainConfig {
        schedule: LrSchedule::constant(0.0),
        ..quick(1)
    };
    let record = train(&mut net, &ds.train, &ds.val, &cfg).unwrap();
    for (a, b) in net.layers().iter().zip(before.layers()) {
        assert_eq!(a.weights, b.weights, "{}", a.name);
    }
    let e = &record.epochs[0];
    assert!((e.train_loss - initial.loss).abs() <= 1e-12 * initial.loss);
    assert_eq!(e.lr, 0.0);
    assert_eq!(e.seconds, 0.0);
}

#[test]
fn same_seed_gives_identical_record_for_any_loader() {
    let ds = small_set(2, 5);
    let run = |workers, seed| {
        let mut net = Network::<f32>::build(&NetConfig::tiny(BlockKind::SplitFast), 1).unwrap();
        let cfg = TrainConfig {
            seed,
            loader_workers: workers,
            batch_size: 3,
            ..quick(2)
        };
        let record = train(&mut net, &ds.train, &ds.val, &cfg).unwrap();
        (record.to_csv(), record.to_json().unwrap())
    };
    let reference = run(4, 9);
    assert_eq!(run(4, 9), reference);
    assert_eq!(run(0, 9), reference);
    assert_eq!(run(1, 9), reference);
    assert_ne!(run(4, 10).0, reference.0);
}

#[test]
fn csv_layout_and_lr_column() {
    let ds = small_set(1, 6);
    let mut net = Network::<f32>::build(&NetConfig::tiny(BlockKind::Conv3D), 1).unwrap();
    let cfg = quick(3);
    let record = train(&mut net, &ds.train, &ds.val, &cfg).unwrap();
    let csv = record.to_csv();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("epoch,train_loss,val_loss,val_acc,lr,seconds")
    );
    let mut last = None;
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 6);
        let epoch: usize = fields[0].parse().unwrap();
        assert!(last.is_none_or(|l| epoch > l));
        last = Some(epoch);
        assert_eq!(epoch, i);
        assert_eq!(
            fields[4].parse::<f64>().unwrap(),
            cfg.schedule.lr_at(epoch as f64)
        );
    }
    assert_eq!(last, Some(2));
    let back: TrainRecord = serde_json::from_str(&record.to_json().unwrap()).unwrap();
    assert_eq!(back, record);
}

#[test]
fn empty_splits_are_rejected() {
    let ds = small_set(1, 6);
    let mut net = Network::<f32>::build(&NetConfig::tiny(BlockKind::Fast), 1).unwrap();
    assert!(matches!(
        train(&mut net, &[], &ds.val, &quick(1)),
        Err(Error::EmptySplit(_))
    ));
    assert!(matches!(
        train(&mut net, &ds.train, &[], &quick(1)),
        Err(Error::EmptySplit(_))
    ));
}

#[test]
fn early_stop_waits_for_min_epochs() {
    let ds = small_set(1, 6);
    let mut net = Network::<f32>::build(&NetConfig::tiny(BlockKind::Fast), 1).unwrap();
    let cfg = TrainConfig {
        target_val_acc: Some(0.0),
        min_epochs: 2,
        ..quick(5)
    };
    assert_eq!(
        train(&mut net, &ds.train, &ds.val, &cfg)
            .unwrap()
            .epochs
            .len(),
        2
    );
}

/// Plain TinyNet memorizes one clip at a flat rate of 0.1.
#[test]
fn single_sample_is_fitted_within_200_steps() {
    let ds = gen_dataset(&SyntheticSpec::moving_bars(), 1, 1, 7).unwrap();
    let sample = &ds.train[2];
    assert_eq!(sample.class, MotionClass::MoveUp);
    let mut net = Network::<f32>::build(&NetConfig::tiny(BlockKind::Fast), 1).unwrap();
    let mut sgd = SgdState::new(0.9, 0.0);
    let mut loss = f32::INFINITY;
    for _ in 0..200 {
        let (logits, tape) = net.forward(&sample.clip).unwrap();
        let (l, g) = batch_xent(&logits, &[sample.label]).unwrap();
        loss = l[0];
        if loss < 0.01 {
            break;
        }
        let grads = net.backward(&tape, &g, false).unwrap();
        sgd.step(net.layers_mut(), &grads.layers, 0.1).unwrap();
    }
    assert!(loss < 0.01, "loss {loss}");
}

#[test]
fn every_block_kind_passes_gradcheck() {
    for kind in BlockKind::ALL {
        let (block, x) = block_case(kind, 3).unwrap();
        let report = gradcheck_block(&block, &x, &GradCheckConfig::default()).unwrap();
        assert!(report.passed, "{kind}: {report:#?}");
        assert!(report.checked > 100, "{kind}");
        assert!(report.tensors.iter().any(|t| t.name.ends_with(".bias")));
    }
}

#[test]
fn zero_input_bias_gradients_are_exact() {
    let x = Tensor5::<f64>::zeros(Shape5::new(1, 2, 5, 7, 7)).unwrap();
    for kind in [BlockKind::Conv3D, BlockKind::Fast, BlockKind::P3dA] {
        let (block, _) = block_case(kind, 4).unwrap();
        let report = gradcheck_block(&block, &x, &GradCheckConfig::default()).unwrap();
        assert!(report.passed, "{kind}");
        for t in report.tensors.iter().filter(|t| t.name.ends_with(".bias")) {
            assert!(t.max_rel_err < 1e-8, "{kind} {}: {}", t.name, t.max_rel_err);
        }
    }
}

#[test]
fn corrupted_gradients_fail() {
    let (block, x) = block_case(BlockKind::SplitFast, 5).unwrap();
    let cfg = GradCheckConfig {
        corrupt: Some(1.01),
        ..GradCheckConfig::default()
    };
    let report = gradcheck_block(&block, &x, &cfg).unwrap();
    assert!(!report.passed);
    assert!(report.max_rel_err > 5e-3);
}

#[test]
fn subsampling_limits_the_work() {
    let (block, x) = block_case(BlockKind::Conv3D, 5).unwrap();
    let cfg = GradCheckConfig {
        max_entries: Some(5),
        ..GradCheckConfig::default()
    };
    let report = gradcheck_block(&block, &x, &cfg).unwrap();
    for t in &report.tensors {
        assert!(
            t.checked + t.below_floor + t.skipped_kinks <= 5,
            "{}",
            t.name
        );
    }
    assert!(report.passed);
}

#[test]
fn tiny_net_passes_gradcheck() {
    let (net, x, labels) = network_case(BlockKind::Fast, 8).unwrap();
    let cfg = GradCheckConfig {
        max_entries: Some(12),
        ..GradCheckConfig::default()
    };
    let report = gradcheck_network(&net, &x, &labels, &cfg).unwrap();
    assert!(report.passed, "{report:#?}");
    let tensors: usize = net
        .layers()
        .iter()
        .map(|l| 1 + usize::from(l.spec.bias))
        .sum();
    assert_eq!(report.tensors.len(), 1 + tensors);
}
