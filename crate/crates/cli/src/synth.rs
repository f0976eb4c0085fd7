use std::path::PathBuf;

use fastconv::data::{gen_clip, write_frame_dir, MotionClass, SyntheticSpec};
use fastconv::Shape5;
use serde::{Deserialize, Serialize};

use crate::Outcome;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub spec: SyntheticSpec,
    pub class: MotionClass,
    pub seed: u64,
    /// A `.t5b` path, or a directory that receives `frame_%06d.ppm` files.
    pub out: PathBuf,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            spec: SyntheticSpec::moving_bars(),
            class: MotionClass::MoveRight,
            seed: 0,
            out: PathBuf::from("clip.t5b"),
        }
    }
}

#[derive(Serialize)]
struct SynthReport {
    path: PathBuf,
    label: usize,
    shape: Shape5,
    frames: bool,
}

/// Renders one raw-range clip.
pub fn synth(cfg: &SynthConfig) -> anyhow::Result<Outcome> {
    let spec = if cfg.spec.classes.contains(&cfg.class) {
        cfg.spec.clone()
    } else {
        SyntheticSpec {
            classes: vec![cfg.class],
            ..cfg.spec.clone()
        }
    };
    let (clip, label) = gen_clip(&spec, cfg.class, cfg.seed)?;
    let frames = cfg.out.extension().is_none_or(|e| e != "t5b");
    if frames {
        write_frame_dir(clip.pixels(), &cfg.out)?;
    } else {
        clip.pixels().save_t5b(&cfg.out)?;
    }
    let report = SynthReport {
        path: cfg.out.clone(),
        label,
        shape: clip.pixels().shape(),
        frames,
    };
    Outcome::new("synth", cfg, &report, true)
}
