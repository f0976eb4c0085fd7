use fastconv::data::{
    argmax_trajectory, extract_slice, gen_clip, gen_dataset, load_frame_dir, read_dataset,
    resize_bilinear, sample_clip, sample_indices, trajectory_slope, write_dataset, write_frame_dir,
    ClipSource, MotionClass, ObjectShape, Plane, SyntheticSpec,
};
use fastconv::{Error, Shape5, Tensor5};
use proptest::prelude::*;

fn quiet(classes: Vec<MotionClass>) -> SyntheticSpec {
    SyntheticSpec {
        classes,
        canvas: [8, 24, 32],
        channels: 3,
        object: ObjectShape::Rectangle { h: 5, w: 3 },
        speed: 2,
        noise: 0.0,
        start: Some([4, 6]),
    }
}

fn frame(clip: &Tensor5<f32>, t: usize) -> Vec<f32> {
    let s = clip.shape();
    let mut out = Vec::new();
    for c in 0..s.c {
        for h in 0..s.h {
            for w in 0..s.w {
                out.push(clip.at(0, c, t, h, w));
            }
        }
    }
    out
}

/// Frame `t` circularly shifted by `(dy, dx)`.
fn rolled(clip: &Tensor5<f32>, t: usize, dy: isize, dx: isize) -> Vec<f32> {
    let s = clip.shape();
    let mut out = Vec::new();
    for c in 0..s.c {
        for h in 0..s.h {
            for w in 0..s.w {
                let sh = (h as isize - dy).rem_euclid(s.h as isize) as usize;
                let sw = (w as isize - dx).rem_euclid(s.w as isize) as usize;
                out.push(clip.at(0, c, t, sh, sw));
            }
        }
    }
    out
}

#[test]
fn static_frames_are_identical() {
    let spec = quiet(vec![MotionClass::Static]);
    let (clip, label) = gen_clip(&spec, MotionClass::Static, 3).unwrap();
    assert_eq!(label, 0);
    let first = frame(clip.pixels(), 0);
    assert!(first.iter().any(|&v| v > 0.0));
    for t in 1..8 {
        assert_eq!(frame(clip.pixels(), t), first);
    }
}

#[test]
fn moving_frames_are_exact_circular_shifts() {
    let all = vec![
        MotionClass::MoveRight,
        MotionClass::MoveLeft,
        MotionClass::MoveUp,
        MotionClass::MoveDown,
    ];
    let spec = quiet(all.clone());
    for (class, (dy, dx)) in all.into_iter().zip([(0, 2), (0, -2), (-2, 0), (2, 0)]) {
        let (clip, _) = gen_clip(&spec, class, 9).unwrap();
        for t in 0..7 {
            assert_eq!(
                frame(clip.pixels(), t + 1),
                rolled(clip.pixels(), t, dy, dx),
                "{class} t={t}"
            );
        }
    }
    let blob = SyntheticSpec {
        object: ObjectShape::Blob { sigma: 2.0 },
        ..quiet(vec![MotionClass::MoveRight])
    };
    let (clip, _) = gen_clip(&blob, MotionClass::MoveRight, 1).unwrap();
    assert_eq!(frame(clip.pixels(), 3), rolled(clip.pixels(), 2, 0, 2));
}

#[test]
fn grow_gets_bigger() {
    let spec = quiet(vec![MotionClass::Grow]);
    let (clip, _) = gen_clip(&spec, MotionClass::Grow, 2).unwrap();
    let lit = |t| frame(clip.pixels(), t).iter().filter(|&&v| v > 0.0).count();
    assert!((1..8).all(|t| lit(t) >= lit(t - 1)));
    assert!(lit(3) > lit(0));
}

#[test]
fn generator_is_deterministic() {
    let spec = SyntheticSpec::moving_bars();
    let a = gen_clip(&spec, MotionClass::MoveUp, 77).unwrap().0;
    let b = gen_clip(&spec, MotionClass::MoveUp, 77).unwrap().0;
    let c = gen_clip(&spec, MotionClass::MoveUp, 78).unwrap().0;
    assert_eq!(a.pixels().to_t5b_bytes(), b.pixels().to_t5b_bytes());
    assert_ne!(a, c);
    assert!(a
        .pixels()
        .as_slice()
        .iter()
        .all(|v| (0.0..=255.0).contains(v)));
}

#[test]
fn unknown_class_is_rejected() {
    let spec = SyntheticSpec::moving_bars();
    assert!(matches!(
        gen_clip(&spec, MotionClass::Grow, 0),
        Err(Error::InvalidClass(_))
    ));
    assert!(matches!(
        "sideways".parse::<MotionClass>(),
        Err(Error::InvalidClass(_))
    ));
    assert_eq!(
        "move-up".parse::<MotionClass>().unwrap(),
        MotionClass::MoveUp
    );
}

#[test]
fn invalid_specs_are_rejected() {
    let mut spec = SyntheticSpec::moving_bars();
    spec.noise = -1.0;
    assert!(gen_clip(&spec, MotionClass::MoveUp, 0).is_err());
    let mut spec = SyntheticSpec::moving_bars();
    spec.classes.clear();
    assert!(gen_dataset(&spec, 1, 1, 0).is_err());
}

#[test]
fn dataset_is_balanced_and_normalized() {
    let ds = gen_dataset(&SyntheticSpec::moving_bars(), 5, 2, 11).unwrap();
    assert_eq!((ds.train.len(), ds.val.len()), (20, 8));
    for label in 0..4 {
        assert_eq!(ds.train.iter().filter(|s| s.label == label).count(), 5);
        assert_eq!(ds.val.iter().filter(|s| s.label == label).count(), 2);
    }
    assert!(ds
        .train
        .iter()
        .all(|s| s.clip.as_slice().iter().all(|v| (0.0..=1.0).contains(v))));
    let again = gen_dataset(&SyntheticSpec::moving_bars(), 5, 2, 11).unwrap();
    assert!(ds
        .train
        .iter()
        .zip(&again.train)
        .all(|(a, b)| a.clip == b.clip && a.seed == b.seed));
}

#[test]
fn manifest_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let ds = gen_dataset(&SyntheticSpec::moving_bars(), 2, 1, 5).unwrap();
    let entries = write_dataset(&ds, dir.path()).unwrap();
    assert_eq!(entries.len(), 12);
    assert_eq!(entries[0].path, "train/clip_00000.t5b");
    let (train, val) = read_dataset(dir.path()).unwrap();
    assert_eq!(train.len(), 8);
    assert_eq!(val[3].clip, ds.val[3].clip);
    assert_eq!(val[3].class, ds.val[3].class);
}

#[test]
fn sample_indices_follow_the_window_rule() {
    assert_eq!(
        sample_indices(240, 24.0).unwrap(),
        (96..144).step_by(2).collect::<Vec<_>>()
    );
    assert_eq!(
        sample_indices(48, 24.0).unwrap(),
        (0..48).step_by(2).collect::<Vec<_>>()
    );
    let short = sample_indices(10, 24.0).unwrap();
    assert_eq!(short.len(), 24);
    assert_eq!(&short[..7], &[0, 2, 4, 6, 8, 0, 2]);
    assert_eq!(sample_indices(50, 24.0).unwrap()[0], 1);
    assert!(sample_indices(0, 24.0).is_err());
}

#[test]
fn resize_keeps_corners_and_constants() {
    let x = Tensor5::from_fn(Shape5::new(1, 1, 1, 3, 4), |[_, _, _, h, w]| {
        (h * 4 + w) as f32
    })
    .unwrap();
    let y = resize_bilinear(&x, 5, 7).unwrap();
    assert_eq!(y.at(0, 0, 0, 0, 0), 0.0);
    assert_eq!(y.at(0, 0, 0, 4, 6), 11.0);
    assert_eq!(y.at(0, 0, 0, 2, 0), 4.0);
    assert!((y.at(0, 0, 0, 0, 3) - 1.5).abs() < 1e-6);
    assert_eq!(resize_bilinear(&x, 3, 4).unwrap(), x);
    let c = Tensor5::full(Shape5::new(1, 2, 2, 5, 5), 7.0f32).unwrap();
    assert!(resize_bilinear(&c, 9, 3)
        .unwrap()
        .as_slice()
        .iter()
        .all(|&v| (v - 7.0).abs() < 1e-6));
}

#[test]
fn sample_clip_always_gives_the_standard_shape() {
    let dir = tempfile::tempdir().unwrap();
    for t in [1usize, 10, 60] {
        let clip = Tensor5::from_fn(Shape5::new(1, 3, t, 6, 5), |[_, c, t, h, w]| {
            ((c + t + h + w) % 256) as f32
        })
        .unwrap();
        let path = dir.path().join(format!("clip{t}.t5b"));
        clip.save_t5b(&path).unwrap();
        let out = sample_clip(&ClipSource::from_path(&path, None)).unwrap();
        assert_eq!(out.shape(), Shape5::new(1, 3, 24, 224, 224));
    }
}

#[test]
fn frame_directories_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (clip, _) = gen_clip(&SyntheticSpec::moving_bars(), MotionClass::MoveLeft, 4).unwrap();
    let rounded = clip.pixels().map(|v| v.round());
    write_frame_dir(&rounded, dir.path()).unwrap();
    assert!(dir.path().join("frame_000007.ppm").exists());
    assert_eq!(load_frame_dir(dir.path()).unwrap(), rounded);
    let src = ClipSource::from_path(dir.path(), Some(24.0));
    assert!(matches!(src, ClipSource::Frames { .. }));
    assert_eq!(
        sample_clip(&src).unwrap().shape(),
        Shape5::new(1, 3, 24, 224, 224)
    );
}

#[test]
fn frame_directories_must_be_consistent() {
    let dir = tempfile::tempdir().unwrap();
    assert!(load_frame_dir(dir.path()).is_err());
    write_frame_dir(
        &Tensor5::zeros(Shape5::new(1, 3, 1, 4, 4)).unwrap(),
        dir.path(),
    )
    .unwrap();
    let other = Tensor5::zeros(Shape5::new(1, 3, 2, 4, 5)).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    write_frame_dir(&other, tmp.path()).unwrap();
    std::fs::copy(
        tmp.path().join("frame_000001.ppm"),
        dir.path().join("frame_000001.ppm"),
    )
    .unwrap();
    assert!(load_frame_dir(dir.path()).is_err());
}

#[test]
fn slice_shapes() {
    let clip = Tensor5::<f32>::zeros(Shape5::new(1, 3, 24, 224, 224)).unwrap();
    let yt = extract_slice(&clip, Plane::YT, 112).unwrap();
    assert_eq!((yt.height, yt.width), (24, 224));
    let clip = Tensor5::<f32>::zeros(Shape5::new(1, 3, 5, 7, 9)).unwrap();
    let xt = extract_slice(&clip, Plane::XT, 6).unwrap();
    assert_eq!((xt.height, xt.width), (5, 9));
    assert!(matches!(
        extract_slice(&clip, Plane::XT, 7),
        Err(Error::IndexOutOfRange {
            index: 7,
            extent: 7
        })
    ));
    assert!(matches!(
        extract_slice(&clip, Plane::YT, 9),
        Err(Error::IndexOutOfRange { .. })
    ));
}

#[test]
fn static_slices_are_constant_per_column() {
    let spec = quiet(vec![MotionClass::Static]);
    let (clip, _) = gen_clip(&spec, MotionClass::Static, 8).unwrap();
    for (plane, index) in [(Plane::XT, 6), (Plane::YT, 7)] {
        let img = extract_slice(clip.pixels(), plane, index).unwrap();
        assert!((1..img.height).all(|r| img.row(r) == img.row(0)));
    }
}

#[test]
fn move_up_streaks_in_yt_only() {
    let spec = quiet(vec![MotionClass::MoveUp]);
    let (clip, _) = gen_clip(&spec, MotionClass::MoveUp, 8).unwrap();
    let yt = extract_slice(clip.pixels(), Plane::YT, 7).unwrap();
    assert_eq!(trajectory_slope(&argmax_trajectory(&yt), 24), -2.0);
    // A fixed row is lit only while the bar passes it, always at the bar's column.
    let xt = extract_slice(clip.pixels(), Plane::XT, 5).unwrap();
    let lit: Vec<usize> = (0..xt.height)
        .filter(|&r| xt.row(r).iter().any(|&v| v > 0.0))
        .collect();
    assert!(!lit.is_empty());
    let traj = argmax_trajectory(&xt);
    assert!(lit.iter().all(|&r| traj[r] == 6));
}

#[test]
fn move_right_xt_slope_equals_speed() {
    for speed in [1usize, 2, 3] {
        let spec = SyntheticSpec {
            speed,
            ..quiet(vec![MotionClass::MoveRight])
        };
        let (clip, _) = gen_clip(&spec, MotionClass::MoveRight, 8).unwrap();
        let xt = extract_slice(clip.pixels(), Plane::XT, 6).unwrap();
        let slope = trajectory_slope(&argmax_trajectory(&xt), 32);
        assert!(
            (slope - speed as f64).abs() <= 0.5,
            "speed {speed}: slope {slope}"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn slice_slope_tracks_speed(speed in 1usize..5, y in 0usize..24, x in 0usize..32, dir in 0usize..4) {
        let class = [MotionClass::MoveRight, MotionClass::MoveLeft, MotionClass::MoveDown, MotionClass::MoveUp][dir];
        let spec = SyntheticSpec { speed, start: Some([y, x]), ..quiet(vec![class]) };
        let (clip, _) = gen_clip(&spec, class, 0).unwrap();
        let (plane, index, period, sign) = match class {
            MotionClass::MoveRight => (Plane::XT, y, 32, 1.0),
            MotionClass::MoveLeft => (Plane::XT, y, 32, -1.0),
            MotionClass::MoveDown => (Plane::YT, x, 24, 1.0),
            _ => (Plane::YT, x, 24, -1.0),
        };
        let img = extract_slice(clip.pixels(), plane, index).unwrap();
        let slope = trajectory_slope(&argmax_trajectory(&img), period);
        prop_assert!((slope - sign * speed as f64).abs() <= 0.5);
    }
}
