//! Dense 5-D tensors in `(n, c, t, h, w)` order with `w` contiguous.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Extents of a [`Tensor5`]: batch, channels, frames, rows, cols.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Shape5 {
    pub n: usize,
    pub c: usize,
    pub t: usize,
    pub h: usize,
    pub w: usize,
}

impl Shape5 {
    pub const fn new(n: usize, c: usize, t: usize, h: usize, w: usize) -> Self {
        Shape5 { n, c, t, h, w }
    }

    pub fn from_array(dims: [usize; 5]) -> Self {
        Shape5::new(dims[0], dims[1], dims[2], dims[3], dims[4])
    }

    pub fn to_array(self) -> [usize; 5] {
        [self.n, self.c, self.t, self.h, self.w]
    }

    pub fn numel(self) -> usize {
        self.n * self.c * self.t * self.h * self.w
    }

    /// Elements in one `(t, h, w)` volume.
    pub fn volume(self) -> usize {
        self.t * self.h * self.w
    }

    pub fn validate(self) -> Result<Self> {
        if self.to_array().contains(&0) {
            Err(Error::ZeroExtent(self))
        } else {
            Ok(self)
        }
    }

    pub fn with_channels(self, c: usize) -> Self {
        Shape5 { c, ..self }
    }
}

impl fmt::Display for Shape5 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({},{},{},{},{})",
            self.n, self.c, self.t, self.h, self.w
        )
    }
}

/// Largest absolute and relative elementwise differences between two tensors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiffStats {
    pub max_abs: f64,
    /// Relative to `max(|a|, |b|, 1e-12)` per element.
    pub max_rel: f64,
}

#[derive(Clone, PartialEq)]
pub struct Tensor5<T> {
    shape: Shape5,
    data: Vec<T>,
}

impl<T: fmt::Debug> fmt::Debug for Tensor5<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tensor5{} ", self.shape)?;
        if self.data.len() <= 16 {
            f.debug_list().entries(self.data.iter()).finish()
        } else {
            write!(f, "[{} elements]", self.data.len())
        }
    }
}

impl<T: Scalar> Tensor5<T> {
    pub fn zeros(shape: Shape5) -> Result<Self> {
        Self::full(shape, T::zero())
    }

    pub fn ones(shape: Shape5) -> Result<Self> {
        Self::full(shape, T::one())
    }

    pub fn full(shape: Shape5, value: T) -> Result<Self> {
        shape.validate()?;
        Ok(Tensor5 {
            shape,
            data: vec![value; shape.numel()],
        })
    }

    pub fn from_vec(shape: Shape5, data: Vec<T>) -> Result<Self> {
        shape.validate()?;
        if data.len() != shape.numel() {
            return Err(Error::BufferLength {
                shape,
                len: data.len(),
            });
        }
        Ok(Tensor5 { shape, data })
    }

    pub fn from_fn(shape: Shape5, mut f: impl FnMut([usize; 5]) -> T) -> Result<Self> {
        shape.validate()?;
        let mut data = Vec::with_capacity(shape.numel());
        for n in 0..shape.n {
            for c in 0..shape.c {
                for t in 0..shape.t {
                    for h in 0..shape.h {
                        for w in 0..shape.w {
                            data.push(f([n, c, t, h, w]));
                        }
                    }
                }
            }
        }
        Ok(Tensor5 { shape, data })
    }

    /// Uniform samples in `[lo, hi)`.
    pub fn random_uniform<R: Rng + ?Sized>(
        shape: Shape5,
        lo: f64,
        hi: f64,
        rng: &mut R,
    ) -> Result<Self> {
        shape.validate()?;
        let data = (0..shape.numel())
            .map(|_| T::of(rng.random_range(lo..hi)))
            .collect();
        Ok(Tensor5 { shape, data })
    }

    pub fn shape(&self) -> Shape5 {
        self.shape
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    /// Mutable view of the buffer; the shape stays fixed.
    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn offset(&self, n: usize, c: usize, t: usize, h: usize, w: usize) -> usize {
        let s = self.shape;
        (((n * s.c + c) * s.t + t) * s.h + h) * s.w + w
    }

    #[inline]
    pub fn at(&self, n: usize, c: usize, t: usize, h: usize, w: usize) -> T {
        self.data[self.offset(n, c, t, h, w)]
    }

    #[inline]
    pub fn set(&mut self, n: usize, c: usize, t: usize, h: usize, w: usize, v: T) {
        let i = self.offset(n, c, t, h, w);
        self.data[i] = v;
    }

    /// Contiguous `(t, h, w)` volume of one batch item and channel.
    pub fn volume(&self, n: usize, c: usize) -> &[T] {
        let v = self.shape.volume();
        let start = (n * self.shape.c + c) * v;
        &self.data[start..start + v]
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Tensor5 {
            shape: self.shape,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    fn zip_with(&self, other: &Self, op: &'static str, f: impl Fn(T, T) -> T) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch {
                op,
                left: self.shape,
                right: other.shape,
            });
        }
        Ok(Tensor5 {
            shape: self.shape,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    /// In-place `self += other`.
    pub fn add_assign(&mut self, other: &Self) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch {
                op: "add_assign",
                left: self.shape,
                right: other.shape,
            });
        }
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    /// Sum of several tensors folded left to right: `((t0 + t1) + t2) + ...`.
    pub fn sum_of(terms: &[&Self]) -> Result<Self> {
        let (first, rest) = terms
            .split_first()
            .ok_or_else(|| Error::InvalidSpec("sum_of needs at least one term".into()))?;
        let mut acc = (*first).clone();
        for t in rest {
            acc.add_assign(t)?;
        }
        Ok(acc)
    }

    pub fn scale(&self, k: T) -> Self {
        self.map(|v| v * k)
    }

    pub fn relu(&self) -> Self {
        self.map(|v| if v > T::zero() { v } else { T::zero() })
    }

    /// `grad ⊙ [activated > 0]`, the backward pass of [`Tensor5::relu`] given its output.
    pub fn relu_backward(&self, activated: &Self) -> Result<Self> {
        self.zip_with(activated, "relu_backward", |g, y| {
            if y > T::zero() {
                g
            } else {
                T::zero()
            }
        })
    }

    pub fn sum(&self) -> T {
        self.data.iter().copied().fold(T::zero(), |a, b| a + b)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn diff(&self, other: &Self) -> Result<DiffStats> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch {
                op: "diff",
                left: self.shape,
                right: other.shape,
            });
        }
        let mut max_abs = 0.0f64;
        let mut max_rel = 0.0f64;
        for (&a, &b) in self.data.iter().zip(&other.data) {
            let (a, b) = (a.to_f64_lossy(), b.to_f64_lossy());
            let d = (a - b).abs();
            max_abs = max_abs.max(d);
            max_rel = max_rel.max(d / a.abs().max(b.abs()).max(1e-12));
        }
        Ok(DiffStats { max_abs, max_rel })
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        Ok(self.diff(other)?.max_abs)
    }

    pub fn max_rel_diff(&self, other: &Self) -> Result<f64> {
        Ok(self.diff(other)?.max_rel)
    }

    /// Zero padding of `pads = [pt, ph, pw]` on both sides of each axis.
    pub fn pad_zero(&self, pads: [usize; 3]) -> Self {
        let [pt, ph, pw] = pads;
        if pads == [0, 0, 0] {
            return self.clone();
        }
        let s = self.shape;
        let out_shape = Shape5::new(s.n, s.c, s.t + 2 * pt, s.h + 2 * ph, s.w + 2 * pw);
        let mut data = vec![T::zero(); out_shape.numel()];
        for n in 0..s.n {
            for c in 0..s.c {
                for t in 0..s.t {
                    for h in 0..s.h {
                        let src = self.offset(n, c, t, h, 0);
                        let dst = (((n * s.c + c) * out_shape.t + t + pt) * out_shape.h + h + ph)
                            * out_shape.w
                            + pw;
                        data[dst..dst + s.w].copy_from_slice(&self.data[src..src + s.w]);
                    }
                }
            }
        }
        Tensor5 {
            shape: out_shape,
            data,
        }
    }

    /// Removes `pads` from both sides of each axis; inverse of [`Tensor5::pad_zero`].
    pub fn crop(&self, pads: [usize; 3]) -> Result<Self> {
        let [pt, ph, pw] = pads;
        let s = self.shape;
        if 2 * pt >= s.t || 2 * ph >= s.h || 2 * pw >= s.w {
            return Err(Error::InvalidSpec(format!("cannot crop {pads:?} from {s}")));
        }
        if pads == [0, 0, 0] {
            return Ok(self.clone());
        }
        let out = Shape5::new(s.n, s.c, s.t - 2 * pt, s.h - 2 * ph, s.w - 2 * pw);
        let mut data = Vec::with_capacity(out.numel());
        for n in 0..s.n {
            for c in 0..s.c {
                for t in 0..out.t {
                    for h in 0..out.h {
                        let src = self.offset(n, c, t + pt, h + ph, pw);
                        data.extend_from_slice(&self.data[src..src + out.w]);
                    }
                }
            }
        }
        Ok(Tensor5 { shape: out, data })
    }

    /// Swaps the `h` and `w` axes.
    pub fn transpose_hw(&self) -> Self {
        let s = self.shape;
        let out = Shape5::new(s.n, s.c, s.t, s.w, s.h);
        let mut data = vec![T::zero(); out.numel()];
        for n in 0..s.n {
            for c in 0..s.c {
                for t in 0..s.t {
                    for h in 0..s.h {
                        for w in 0..s.w {
                            let dst = (((n * s.c + c) * s.t + t) * s.w + w) * s.h + h;
                            data[dst] = self.at(n, c, t, h, w);
                        }
                    }
                }
            }
        }
        Tensor5 { shape: out, data }
    }

    /// Shifts by `delta` samples along `axis` (2 = t, 3 = h, 4 = w), dropping
    /// samples that leave the volume and zero-filling the vacated ones.
    pub fn shift(&self, axis: usize, delta: usize) -> Self {
        let s = self.shape;
        let mut out = Tensor5 {
            shape: s,
            data: vec![T::zero(); s.numel()],
        };
        for n in 0..s.n {
            for c in 0..s.c {
                for t in 0..s.t {
                    for h in 0..s.h {
                        for w in 0..s.w {
                            let mut idx = [t, h, w];
                            idx[axis - 2] += delta;
                            let ext = [s.t, s.h, s.w][axis - 2];
                            if idx[axis - 2] < ext {
                                out.set(n, c, idx[0], idx[1], idx[2], self.at(n, c, t, h, w));
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Copies one batch item out as an `n = 1` tensor.
    pub fn batch_item(&self, n: usize) -> Result<Self> {
        if n >= self.shape.n {
            return Err(Error::IndexOutOfRange {
                index: n,
                extent: self.shape.n,
            });
        }
        let per = self.shape.c * self.shape.volume();
        Ok(Tensor5 {
            shape: Shape5 { n: 1, ..self.shape },
            data: self.data[n * per..(n + 1) * per].to_vec(),
        })
    }

    /// Stacks `n = 1` tensors of identical shape along the batch axis.
    pub fn stack(items: &[&Self]) -> Result<Self> {
        let first = items
            .first()
            .ok_or_else(|| Error::InvalidSpec("stack needs at least one item".into()))?;
        let mut data = Vec::with_capacity(first.numel() * items.len());
        let mut n = 0;
        for item in items {
            if (Shape5 {
                n: first.shape.n,
                ..item.shape
            }) != first.shape
            {
                return Err(Error::ShapeMismatch {
                    op: "stack",
                    left: first.shape,
                    right: item.shape,
                });
            }
            n += item.shape.n;
            data.extend_from_slice(&item.data);
        }
        Tensor5::from_vec(Shape5 { n, ..first.shape }, data)
    }

    pub fn cast<U: Scalar>(&self) -> Tensor5<U> {
        Tensor5 {
            shape: self.shape,
            data: self.data.iter().map(|&v| U::of(v.to_f64_lossy())).collect(),
        }
    }

    /// Serializes in the `.t5b` layout (values stored as `f32`).
    pub fn write_t5b<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e| Error::io("<t5b stream>", e);
        out.write_all(T5B_MAGIC).map_err(io)?;
        for d in self.shape.to_array() {
            out.write_all(&(d as u64).to_le_bytes()).map_err(io)?;
        }
        for &v in &self.data {
            out.write_all(&v.to_f32_lossy().to_le_bytes()).map_err(io)?;
        }
        Ok(())
    }

    pub fn to_t5b_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(44 + 4 * self.numel());
        self.write_t5b(&mut buf)
            .expect("writing to a Vec cannot fail");
        buf
    }

    pub fn read_t5b<R: Read>(mut input: R) -> Result<Self> {
        let io = |e| Error::io("<t5b stream>", e);
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic).map_err(io)?;
        if &magic != T5B_MAGIC {
            return Err(Error::format("t5b", format!("bad magic {magic:?}")));
        }
        let mut dims = [0usize; 5];
        for d in dims.iter_mut() {
            let mut b = [0u8; 8];
            input.read_exact(&mut b).map_err(io)?;
            *d = usize::try_from(u64::from_le_bytes(b))
                .map_err(|_| Error::format("t5b", "extent does not fit in usize"))?;
        }
        let shape = Shape5::from_array(dims).validate()?;
        let numel = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::format("t5b", "element count overflows"))?;
        let mut bytes = Vec::new();
        input.read_to_end(&mut bytes).map_err(io)?;
        if bytes.len() != numel * 4 {
            return Err(Error::format(
                "t5b",
                format!(
                    "expected {} payload bytes, found {}",
                    numel * 4,
                    bytes.len()
                ),
            ));
        }
        let data = bytes
            .chunks_exact(4)
            .map(|c| T::of(f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64))
            .collect();
        Ok(Tensor5 { shape, data })
    }

    pub fn save_t5b(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_t5b(&mut w)?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load_t5b(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_t5b(BufReader::new(file)).map_err(|e| match e {
            Error::Io { source, .. } => Error::io(path, source),
            other => other,
        })
    }
}

pub const T5B_MAGIC: &[u8; 4] = b"T5B1";

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn shape(n: usize, c: usize, t: usize, h: usize, w: usize) -> Shape5 {
        Shape5::new(n, c, t, h, w)
    }

    #[test]
    fn zeros_counts() {
        let z = Tensor5::<f32>::zeros(shape(1, 1, 1, 1, 1)).unwrap();
        assert_eq!(z.as_slice(), &[0.0]);
        let z = Tensor5::<f32>::zeros(shape(2, 3, 4, 5, 6)).unwrap();
        assert_eq!(z.numel(), 720);
        assert!(z.as_slice().iter().all(|&v| v == 0.0));
        assert_eq!(
            Tensor5::<f32>::zeros(shape(1, 1, 3, 3, 3)).unwrap().numel(),
            27
        );
    }

    #[test]
    fn zero_extent_rejected() {
        assert!(matches!(
            Tensor5::<f32>::zeros(shape(1, 0, 1, 1, 1)),
            Err(Error::ZeroExtent(_))
        ));
        assert!(Tensor5::<f32>::from_vec(shape(1, 1, 1, 1, 2), vec![1.0]).is_err());
    }

    #[test]
    fn pad_single_value() {
        let x = Tensor5::<f32>::full(shape(1, 1, 1, 1, 1), 5.0).unwrap();
        let p = x.pad_zero([0, 1, 1]);
        assert_eq!(p.shape(), shape(1, 1, 1, 3, 3));
        assert_eq!(p.as_slice(), &[0., 0., 0., 0., 5., 0., 0., 0., 0.]);
    }

    #[test]
    fn pad_identity_and_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = Tensor5::<f32>::random_uniform(shape(2, 2, 3, 4, 5), -1.0, 1.0, &mut rng).unwrap();
        assert_eq!(x.pad_zero([0, 0, 0]).as_slice(), x.as_slice());

        let ones = Tensor5::<f32>::ones(shape(1, 1, 2, 2, 2)).unwrap();
        let p = ones.pad_zero([1, 0, 0]);
        assert_eq!(p.shape(), shape(1, 1, 4, 2, 2));
        assert_eq!(p.sum(), 8.0);
    }

    #[test]
    fn add_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = Tensor5::<f32>::random_uniform(shape(1, 2, 2, 3, 3), -1.0, 1.0, &mut rng).unwrap();
        let z = Tensor5::zeros(a.shape()).unwrap();
        assert_eq!(a.add(&z).unwrap(), a);
        let ones = Tensor5::<f32>::ones(a.shape()).unwrap();
        assert!(ones
            .add(&ones)
            .unwrap()
            .as_slice()
            .iter()
            .all(|&v| v == 2.0));
        let neg = a.scale(-1.0);
        assert!(a.add(&neg).unwrap().as_slice().iter().all(|&v| v == 0.0));
        let other = Tensor5::<f32>::zeros(shape(1, 1, 1, 1, 1)).unwrap();
        assert!(matches!(a.add(&other), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn relu_cases() {
        let x = Tensor5::<f32>::full(shape(1, 1, 1, 2, 2), -1.0).unwrap();
        assert!(x.relu().as_slice().iter().all(|&v| v == 0.0));
        let x = Tensor5::<f32>::full(shape(1, 1, 1, 2, 2), 2.0).unwrap();
        assert!(x.relu().as_slice().iter().all(|&v| v == 2.0));
        let x = Tensor5::<f32>::from_vec(shape(1, 1, 1, 1, 3), vec![-3.0, 0.0, 4.0]).unwrap();
        assert_eq!(x.relu().as_slice(), &[0.0, 0.0, 4.0]);
    }

    #[test]
    fn diff_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = Tensor5::<f32>::random_uniform(shape(1, 1, 2, 3, 4), -1.0, 1.0, &mut rng).unwrap();
        assert_eq!(a.max_abs_diff(&a).unwrap(), 0.0);
        let z = Tensor5::<f32>::zeros(a.shape()).unwrap();
        let o = Tensor5::<f32>::ones(a.shape()).unwrap();
        assert_eq!(z.max_abs_diff(&o).unwrap(), 1.0);
        let b = a.map(|v| v + 1e-6);
        let d = a.max_abs_diff(&b).unwrap();
        assert!((d - 1e-6).abs() < 1e-7, "{d}");
        assert!(a
            .diff(&Tensor5::zeros(shape(1, 1, 1, 1, 1)).unwrap())
            .is_err());
    }

    #[test]
    fn t5b_layout() {
        let x = Tensor5::<f32>::from_vec(shape(1, 1, 1, 1, 2), vec![1.0, -2.5]).unwrap();
        let bytes = x.to_t5b_bytes();
        assert_eq!(&bytes[..4], b"T5B1");
        assert_eq!(&bytes[4..12], &1u64.to_le_bytes());
        assert_eq!(&bytes[36..44], &2u64.to_le_bytes());
        assert_eq!(&bytes[44..48], &1.0f32.to_le_bytes());
        assert_eq!(&bytes[48..52], &(-2.5f32).to_le_bytes());
        assert_eq!(bytes.len(), 52);
    }

    #[test]
    fn t5b_rejects_garbage() {
        assert!(Tensor5::<f32>::read_t5b(&b"XXXX"[..]).is_err());
        let mut bytes = Tensor5::<f32>::ones(shape(1, 1, 1, 1, 3))
            .unwrap()
            .to_t5b_bytes();
        bytes.pop();
        assert!(matches!(
            Tensor5::<f32>::read_t5b(&bytes[..]),
            Err(Error::Format { .. })
        ));
    }

    #[test]
    fn t5b_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.t5b");
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = Tensor5::<f32>::random_uniform(shape(2, 3, 2, 2, 2), -5.0, 5.0, &mut rng).unwrap();
        x.save_t5b(&path).unwrap();
        let y = Tensor5::<f32>::load_t5b(&path).unwrap();
        assert_eq!(x.to_t5b_bytes(), y.to_t5b_bytes());
    }

    #[test]
    fn transpose_hw_involution() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = Tensor5::<f32>::random_uniform(shape(1, 2, 2, 3, 4), -1.0, 1.0, &mut rng).unwrap();
        let t = x.transpose_hw();
        assert_eq!(t.shape(), shape(1, 2, 2, 4, 3));
        assert_eq!(t.at(0, 1, 1, 3, 2), x.at(0, 1, 1, 2, 3));
        assert_eq!(t.transpose_hw(), x);
    }

    fn arb_tensor() -> impl Strategy<Value = Tensor5<f32>> {
        (1usize..3, 1usize..3, 1usize..4, 1usize..5, 1usize..5).prop_flat_map(|(n, c, t, h, w)| {
            let s = Shape5::new(n, c, t, h, w);
            proptest::collection::vec(-100.0f32..100.0, s.numel())
                .prop_map(move |data| Tensor5::from_vec(s, data).unwrap())
        })
    }

    proptest! {
        #[test]
        fn pad_then_crop_is_identity(x in arb_tensor(), pt in 0usize..3, ph in 0usize..3, pw in 0usize..3) {
            let p = x.pad_zero([pt, ph, pw]);
            prop_assert_eq!(p.crop([pt, ph, pw]).unwrap(), x);
        }

        #[test]
        fn add_commutes_and_folds_in_order(x in arb_tensor(), s in 0.1f32..3.0) {
            let y = x.map(|v| v * s - 1.0);
            let z = x.map(|v| v.sin());
            prop_assert_eq!(x.add(&y).unwrap(), y.add(&x).unwrap());
            let folded = Tensor5::sum_of(&[&x, &y, &z]).unwrap();
            prop_assert_eq!(folded, x.add(&y).unwrap().add(&z).unwrap());
        }

        #[test]
        fn relu_idempotent(x in arb_tensor()) {
            let r = x.relu();
            prop_assert_eq!(r.relu(), r);
        }

        #[test]
        fn t5b_round_trip(x in arb_tensor()) {
            let bytes = x.to_t5b_bytes();
            let y = Tensor5::<f32>::read_t5b(&bytes[..]).unwrap();
            prop_assert_eq!(bytes, y.to_t5b_bytes());
        }
    }
}
