//! Synthetic motion clips, clip ingestion and sampling, normalization, and
//! XT/YT slices.

mod clip;
mod manifest;
mod pnm;
mod sampling;
mod slices;
mod synth;

pub use clip::{Clip, PixelRange};
pub use manifest::{read_dataset, write_dataset, ManifestEntry};
pub use pnm::{load_frame_dir, write_frame_dir, GrayImage, PnmImage};
pub use sampling::{
    resize_bilinear, sample_clip, sample_clip_tensor, sample_indices, ClipSource, Sampling,
};
pub use slices::{argmax_trajectory, extract_slice, trajectory_slope, Plane};
pub use synth::{gen_clip, gen_dataset, Dataset, MotionClass, ObjectShape, Sample, SyntheticSpec};
