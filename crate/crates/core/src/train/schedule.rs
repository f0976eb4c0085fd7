use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cosine annealing with warm restarts. Each cycle starts at its maximum,
/// decays along half a cosine to `lr_min`, and the next cycle restarts at half
/// the previous maximum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LrSchedule {
    pub lr_max0: f64,
    pub lr_min: f64,
    pub cycle_epochs: f64,
}

impl Default for LrSchedule {
    fn default() -> Self {
        LrSchedule {
            lr_max0: 2e-3,
            lr_min: 4e-5,
            cycle_epochs: 5.0,
        }
    }
}

impl LrSchedule {
    /// A flat schedule.
    pub fn constant(lr: f64) -> Self {
        LrSchedule {
            lr_max0: lr,
            lr_min: lr,
            cycle_epochs: 5.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.lr_min >= 0.0
            && self.lr_max0 >= self.lr_min
            && self.lr_max0.is_finite()
            && self.cycle_epochs > 0.0
            && self.cycle_epochs.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "bad learning-rate schedule {self:?}"
            )))
        }
    }

    /// Maximum of cycle `c`: `lr_max0 / 2^c`, never below `lr_min`.
    pub fn cycle_max(&self, cycle: u32) -> f64 {
        (self.lr_max0 / 2f64.powi(cycle.min(1024) as i32)).max(self.lr_min)
    }

    /// Learning rate at a fractional epoch. Negative epochs clamp to 0.
    pub fn lr_at(&self, epoch: f64) -> f64 {
        let epoch = epoch.max(0.0);
        let cycle = (epoch / self.cycle_epochs).floor();
        let frac = ((epoch - cycle * self.cycle_epochs) / self.cycle_epochs).clamp(0.0, 1.0);
        let max = self.cycle_max(cycle.min(u32::MAX as f64) as u32);
        self.lr_min + 0.5 * (max - self.lr_min) * (1.0 + (PI * frac).cos())
    }
}
