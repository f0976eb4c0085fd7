use serde::{Deserialize, Serialize};

use crate::data::GrayImage;
use crate::error::{Error, Result};
use crate::tensor::Tensor5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Plane {
    /// Fixed row: time down, width across.
    XT,
    /// Fixed column: time down, height across.
    YT,
}

/// Channel-mean slice of batch item 0 at a fixed row (`XT`, `T × W`) or
/// column (`YT`, `T × H`).
pub fn extract_slice(clip: &Tensor5<f32>, plane: Plane, index: usize) -> Result<GrayImage> {
    let s = clip.shape();
    let (extent, across) = match plane {
        Plane::XT => (s.h, s.w),
        Plane::YT => (s.w, s.h),
    };
    if index >= extent {
        return Err(Error::IndexOutOfRange { index, extent });
    }
    let inv = 1.0 / s.c as f64;
    let mut data = Vec::with_capacity(s.t * across);
    for t in 0..s.t {
        for a in 0..across {
            let (h, w) = match plane {
                Plane::XT => (index, a),
                Plane::YT => (a, index),
            };
            let sum: f64 = (0..s.c).map(|c| clip.at(0, c, t, h, w) as f64).sum();
            data.push((sum * inv) as f32);
        }
    }
    Ok(GrayImage {
        height: s.t,
        width: across,
        data,
    })
}

/// Per row, the start of the brightest run in circular order: the first
/// maximum found when scanning from just after the row's first minimum. For
/// an object that wraps around the border this is its leading-left edge, not
/// column 0.
pub fn argmax_trajectory(img: &GrayImage) -> Vec<usize> {
    (0..img.height)
        .map(|r| {
            let row = img.row(r);
            let first = |pred: &dyn Fn(f32) -> bool| row.iter().position(|&v| pred(v)).unwrap_or(0);
            let max = row.iter().copied().fold(f32::NEG_INFINITY, f32::max);
            let min = row.iter().copied().fold(f32::INFINITY, f32::min);
            if max == min {
                return first(&|v| v == max);
            }
            let start = first(&|v| v == min);
            (1..=row.len())
                .map(|k| (start + k) % row.len())
                .find(|&i| row[i] == max)
                .unwrap_or(start)
        })
        .collect()
}

/// Least-squares slope (positions per row) of a circular trajectory on a ring
/// of `period` positions. Steps are unwrapped to the shortest signed distance.
pub fn trajectory_slope(traj: &[usize], period: usize) -> f64 {
    if traj.len() < 2 {
        return 0.0;
    }
    let p = period as i64;
    let mut pos = vec![traj[0] as f64];
    for w in traj.windows(2) {
        let mut d = (w[1] as i64 - w[0] as i64).rem_euclid(p);
        if d > p / 2 {
            d -= p;
        }
        pos.push(pos.last().unwrap() + d as f64);
    }
    let n = pos.len() as f64;
    let mean_x = (n - 1.0) / 2.0;
    let mean_y = pos.iter().sum::<f64>() / n;
    let (mut num, mut den) = (0.0, 0.0);
    for (i, y) in pos.iter().enumerate() {
        let dx = i as f64 - mean_x;
        num += dx * (y - mean_y);
        den += dx * dx;
    }
    num / den
}
