use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::Clip;
use crate::error::{Error, Result};
use crate::tensor::{Shape5, Tensor5};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionClass {
    MoveLeft,
    MoveRight,
    MoveUp,
    MoveDown,
    Static,
    Grow,
}

impl MotionClass {
    pub const ALL: [MotionClass; 6] = [
        MotionClass::MoveLeft,
        MotionClass::MoveRight,
        MotionClass::MoveUp,
        MotionClass::MoveDown,
        MotionClass::Static,
        MotionClass::Grow,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MotionClass::MoveLeft => "move_left",
            MotionClass::MoveRight => "move_right",
            MotionClass::MoveUp => "move_up",
            MotionClass::MoveDown => "move_down",
            MotionClass::Static => "static",
            MotionClass::Grow => "grow",
        }
    }

    /// Displacement `(dy, dx)` per frame per unit of speed. Up is towards row 0.
    fn velocity(self) -> (isize, isize) {
        match self {
            MotionClass::MoveLeft => (0, -1),
            MotionClass::MoveRight => (0, 1),
            MotionClass::MoveUp => (-1, 0),
            MotionClass::MoveDown => (1, 0),
            MotionClass::Static | MotionClass::Grow => (0, 0),
        }
    }
}

impl fmt::Display for MotionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MotionClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace('-', "_");
        MotionClass::ALL
            .into_iter()
            .find(|c| c.name() == key)
            .ok_or_else(|| Error::InvalidClass(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectShape {
    Rectangle { h: usize, w: usize },
    Blob { sigma: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub classes: Vec<MotionClass>,
    /// `[T, H, W]`
    pub canvas: [usize; 3],
    #[serde(default = "default_channels")]
    pub channels: usize,
    pub object: ObjectShape,
    /// Pixels per frame.
    pub speed: usize,
    /// Standard deviation of additive Gaussian pixel noise, in raw units.
    #[serde(default)]
    pub noise: f64,
    /// Top-left corner of the object in the first frame; random per clip when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<[usize; 2]>,
}

fn default_channels() -> usize {
    3
}

impl SyntheticSpec {
    /// Four directions, an 8×4 bar moving 2 px per frame on an 8×32×32 canvas, σ = 8.
    pub fn moving_bars() -> Self {
        SyntheticSpec {
            classes: vec![
                MotionClass::MoveLeft,
                MotionClass::MoveRight,
                MotionClass::MoveUp,
                MotionClass::MoveDown,
            ],
            canvas: [8, 32, 32],
            channels: 3,
            object: ObjectShape::Rectangle { h: 8, w: 4 },
            speed: 2,
            noise: 8.0,
            start: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.classes.is_empty() {
            return bad("synthetic spec needs at least one class".into());
        }
        if self.canvas.contains(&0) || self.channels == 0 {
            return bad(format!(
                "canvas and channels must be nonzero: {:?}",
                self.canvas
            ));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return bad(format!("noise must be finite and >= 0, got {}", self.noise));
        }
        match self.object {
            ObjectShape::Rectangle { h, w } if h == 0 || w == 0 => {
                bad("rectangle extents must be >= 1".into())
            }
            ObjectShape::Blob { sigma } if sigma.is_nan() || sigma <= 0.0 => {
                bad("blob sigma must be > 0".into())
            }
            _ => Ok(()),
        }
    }

    pub fn shape(&self) -> Shape5 {
        let [t, h, w] = self.canvas;
        Shape5::new(1, self.channels, t, h, w)
    }

    pub fn label_of(&self, class: MotionClass) -> Result<usize> {
        self.classes
            .iter()
            .position(|&c| c == class)
            .ok_or_else(|| Error::InvalidClass(class.name().to_string()))
    }
}

/// Circular distance on a ring of `n` positions.
fn ring_dist(a: isize, b: isize, n: usize) -> usize {
    let d = (a - b).rem_euclid(n as isize) as usize;
    d.min(n - d)
}

/// Renders one raw-range clip `(1, channels, T, H, W)` and its label.
///
/// The object wraps around the borders. With `noise == 0` a moving clip is an
/// exact circular shift of its first frame by `speed` pixels per frame.
pub fn gen_clip(spec: &SyntheticSpec, class: MotionClass, seed: u64) -> Result<(Clip, usize)> {
    spec.validate()?;
    let label = spec.label_of(class)?;
    let [frames, height, width] = spec.canvas;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let [y0, x0] = match spec.start {
        Some(p) => p,
        None => [rng.random_range(0..height), rng.random_range(0..width)],
    };
    let color: Vec<f32> = (0..spec.channels)
        .map(|_| rng.random_range(160..=255) as f32)
        .collect();
    let (vy, vx) = class.velocity();
    let speed = spec.speed as isize;
    let mut data = vec![0.0f32; spec.shape().numel()];
    for t in 0..frames {
        let top = y0 as isize + vy * speed * t as isize;
        let left = x0 as isize + vx * speed * t as isize;
        let grow = if class == MotionClass::Grow {
            spec.speed * t
        } else {
            0
        };
        for y in 0..height {
            for x in 0..width {
                let dy = (y as isize - top).rem_euclid(height as isize) as usize;
                let dx = (x as isize - left).rem_euclid(width as isize) as usize;
                let intensity = match spec.object {
                    ObjectShape::Rectangle { h, w } => {
                        // Grow extends the rectangle symmetrically around its first-frame box.
                        let inside = |d: usize, n: usize, e: usize| {
                            let d = (d + grow) % n;
                            d < (e + 2 * grow).min(n)
                        };
                        if inside(dy, height, h) && inside(dx, width, w) {
                            1.0
                        } else {
                            0.0
                        }
                    }
                    ObjectShape::Blob { sigma } => {
                        let s = sigma + grow as f64;
                        let ry = ring_dist(y as isize, top, height) as f64;
                        let rx = ring_dist(x as isize, left, width) as f64;
                        (-(ry * ry + rx * rx) / (2.0 * s * s)).exp()
                    }
                };
                for (c, &col) in color.iter().enumerate() {
                    data[((c * frames + t) * height + y) * width + x] =
                        (col as f64 * intensity) as f32;
                }
            }
        }
    }
    if spec.noise > 0.0 {
        let normal =
            Normal::new(0.0, spec.noise).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        for v in &mut data {
            *v = (*v as f64 + normal.sample(&mut rng)).clamp(0.0, 255.0) as f32;
        }
    }
    Ok((Clip::raw(Tensor5::from_vec(spec.shape(), data)?)?, label))
}

/// A normalized clip with its label and generator seed.
#[derive(Clone, Debug)]
pub struct Sample {
    pub clip: Tensor5<f32>,
    pub label: usize,
    pub class: MotionClass,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub spec: SyntheticSpec,
    pub train: Vec<Sample>,
    pub val: Vec<Sample>,
}

impl Dataset {
    pub fn num_classes(&self) -> usize {
        self.spec.classes.len()
    }
}

/// `train_per_class` and `val_per_class` normalized clips of every class.
/// Clip seeds come from one ChaCha stream seeded with `seed`, drawn split by
/// split, class by class.
pub fn gen_dataset(
    spec: &SyntheticSpec,
    train_per_class: usize,
    val_per_class: usize,
    seed: u64,
) -> Result<Dataset> {
    spec.validate()?;
    let mut seeds = ChaCha8Rng::seed_from_u64(seed);
    let mut split = |count: usize| -> Result<Vec<Sample>> {
        let mut out = Vec::with_capacity(count * spec.classes.len());
        for &class in &spec.classes {
            for _ in 0..count {
                let clip_seed: u64 = seeds.random();
                let (clip, label) = gen_clip(spec, class, clip_seed)?;
                out.push(Sample {
                    clip: clip.normalize()?.into_tensor(),
                    label,
                    class,
                    seed: clip_seed,
                });
            }
        }
        Ok(out)
    };
    let train = split(train_per_class)?;
    let val = split(val_per_class)?;
    Ok(Dataset {
        spec: spec.clone(),
        train,
        val,
    })
}
