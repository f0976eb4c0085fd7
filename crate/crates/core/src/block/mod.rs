//! Convolution blocks: full 3D, (2+1)D, the three P3D variants, FAST and its
//! split and single-plane variants.
//!
//! A block is a small dataflow graph. Node 0 is the block input and every
//! [`Step`] produces the next node, either a convolution (optionally followed
//! by a ReLU) of an earlier node or the sum of two earlier nodes. The last
//! node is the block output.

mod graph;
mod inflate;
mod io;

pub use graph::{BlockGrads, Tape};
pub use inflate::inflate_kernel;
pub(crate) use io::{read_layer, write_layer, LayerEntry};

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::conv::{ConvSpec, ConvWeights, Padding};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Shape5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BlockKind {
    #[serde(rename = "conv3d")]
    Conv3D,
    #[serde(rename = "2plus1d")]
    TwoPlusOneD,
    #[serde(rename = "p3d-a")]
    P3dA,
    #[serde(rename = "p3d-b")]
    P3dB,
    #[serde(rename = "p3d-c")]
    P3dC,
    #[serde(rename = "fast")]
    Fast,
    #[serde(rename = "split-fast")]
    SplitFast,
    #[serde(rename = "fast-xt-only")]
    FastXtOnly,
    #[serde(rename = "fast-yt-only")]
    FastYtOnly,
}

impl BlockKind {
    pub const ALL: [BlockKind; 9] = [
        BlockKind::Conv3D,
        BlockKind::TwoPlusOneD,
        BlockKind::P3dA,
        BlockKind::P3dB,
        BlockKind::P3dC,
        BlockKind::Fast,
        BlockKind::SplitFast,
        BlockKind::FastXtOnly,
        BlockKind::FastYtOnly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BlockKind::Conv3D => "conv3d",
            BlockKind::TwoPlusOneD => "2plus1d",
            BlockKind::P3dA => "p3d-a",
            BlockKind::P3dB => "p3d-b",
            BlockKind::P3dC => "p3d-c",
            BlockKind::Fast => "fast",
            BlockKind::SplitFast => "split-fast",
            BlockKind::FastXtOnly => "fast-xt-only",
            BlockKind::FastYtOnly => "fast-yt-only",
        }
    }

    /// Plain chains of convolutions with no additions.
    pub fn is_sequential(self) -> bool {
        matches!(
            self,
            BlockKind::Conv3D
                | BlockKind::TwoPlusOneD
                | BlockKind::Fast
                | BlockKind::FastXtOnly
                | BlockKind::FastYtOnly
        )
    }
}

impl fmt::Display for BlockKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BlockKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace('_', "-");
        let kind = match key.as_str() {
            "3d" | "c3d" => BlockKind::Conv3D,
            "(2+1)d" | "r2plus1d" | "2+1d" => BlockKind::TwoPlusOneD,
            "p3da" => BlockKind::P3dA,
            "p3db" => BlockKind::P3dB,
            "p3dc" => BlockKind::P3dC,
            "splitfast" => BlockKind::SplitFast,
            "xt-only" => BlockKind::FastXtOnly,
            "yt-only" => BlockKind::FastYtOnly,
            other => *BlockKind::ALL
                .iter()
                .find(|k| k.name() == other)
                .ok_or_else(|| Error::InvalidBlock(format!("unknown block kind {s:?}")))?,
        };
        Ok(kind)
    }
}

/// Construction options shared by every kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct BlockOptions {
    pub padding: Padding,
    pub bias: bool,
    /// ReLU after every non-projection convolution.
    pub activation: bool,
    /// Width between the spatial and temporal convolutions of (2+1)D and
    /// P3D-A. Defaults to `c_out`.
    pub mid_channels: Option<usize>,
}

impl Default for BlockOptions {
    fn default() -> Self {
        BlockOptions {
            padding: Padding::Same,
            bias: false,
            activation: true,
            mid_channels: None,
        }
    }
}

impl BlockOptions {
    /// No ReLU, no bias, `Valid` padding: a sequential block is then one linear map.
    pub fn linear() -> Self {
        BlockOptions {
            padding: Padding::Valid,
            bias: false,
            activation: false,
            mid_channels: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvLayer<T> {
    pub name: String,
    pub spec: ConvSpec,
    pub weights: ConvWeights<T>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Step {
    Conv {
        layer: usize,
        input: usize,
        relu: bool,
    },
    Add {
        lhs: usize,
        rhs: usize,
    },
}

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

fn fresh_id() -> u64 {
    NEXT_ID.fetch_add(1, Ordering::Relaxed)
}

#[derive(Debug)]
pub struct Block<T> {
    kind: BlockKind,
    c_in: usize,
    c_out: usize,
    k: usize,
    stride: [usize; 3],
    options: BlockOptions,
    seed: u64,
    layers: Vec<ConvLayer<T>>,
    steps: Vec<Step>,
    id: u64,
    generation: u64,
}

impl<T: Clone> Clone for Block<T> {
    /// The clone gets its own identity, so tapes never cross between copies.
    fn clone(&self) -> Self {
        Block {
            layers: self.layers.clone(),
            steps: self.steps.clone(),
            id: fresh_id(),
            generation: 0,
            ..*self
        }
    }
}

/// Layer specs and dataflow of a block, without weights.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockPlan {
    pub layers: Vec<(&'static str, ConvSpec)>,
    pub steps: Vec<Step>,
}

struct Plan {
    options: BlockOptions,
    layers: Vec<(&'static str, ConvSpec)>,
    steps: Vec<Step>,
}

impl BlockPlan {
    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|(_, s)| s.param_count()).sum()
    }

    /// Shape of every node for a given input, input first.
    pub fn node_shapes(&self, input: Shape5) -> Result<Vec<Shape5>> {
        let mut shapes = vec![input];
        for step in &self.steps {
            let next = match *step {
                Step::Conv { layer, input, .. } => {
                    self.layers[layer].1.output_shape(shapes[input])?
                }
                Step::Add { lhs, rhs } => {
                    if shapes[lhs] != shapes[rhs] {
                        return Err(Error::ShapeMismatch {
                            op: "block add",
                            left: shapes[lhs],
                            right: shapes[rhs],
                        });
                    }
                    shapes[lhs]
                }
            };
            shapes.push(next);
        }
        Ok(shapes)
    }

    /// Multiply-adds (counted twice) of all convolutions for a given input.
    pub fn flops(&self, input: Shape5) -> Result<u64> {
        let shapes = self.node_shapes(input)?;
        Ok(self
            .steps
            .iter()
            .enumerate()
            .filter_map(|(i, s)| match *s {
                Step::Conv { layer, .. } => Some(self.layers[layer].1.flops(shapes[i + 1])),
                Step::Add { .. } => None,
            })
            .sum())
    }
}

impl Plan {
    fn push(&mut self, name: &'static str, spec: ConvSpec, input: usize, relu: bool) -> usize {
        self.layers.push((name, spec));
        self.steps.push(Step::Conv {
            layer: self.layers.len() - 1,
            input,
            relu,
        });
        self.steps.len()
    }

    fn conv(
        &mut self,
        name: &'static str,
        input: usize,
        kernel: [usize; 3],
        c: (usize, usize),
        stride: [usize; 3],
    ) -> usize {
        let spec = ConvSpec::new(kernel, c.0, c.1)
            .with_stride(stride)
            .with_padding(self.options.padding)
            .with_bias(self.options.bias);
        self.push(name, spec, input, self.options.activation)
    }

    /// Identity when shapes already agree, else a 1×1×1 projection without ReLU.
    fn skip(
        &mut self,
        name: &'static str,
        input: usize,
        c: (usize, usize),
        stride: [usize; 3],
    ) -> usize {
        if c.0 == c.1 && stride == [1, 1, 1] {
            return input;
        }
        let spec = ConvSpec::new([1, 1, 1], c.0, c.1)
            .with_stride(stride)
            .with_padding(Padding::Valid)
            .with_bias(self.options.bias);
        self.push(name, spec, input, false)
    }

    fn add(&mut self, lhs: usize, rhs: usize) -> usize {
        self.steps.push(Step::Add { lhs, rhs });
        self.steps.len()
    }
}

/// Builds a block with default options (`Same` padding, ReLU, no bias).
pub fn make_block<T: Scalar>(
    kind: BlockKind,
    c_in: usize,
    c_out: usize,
    k: usize,
    stride: [usize; 3],
    seed: u64,
) -> Result<Block<T>> {
    Block::new(kind, c_in, c_out, k, stride, seed, BlockOptions::default())
}

/// Layer specs and steps that [`Block::new`] would build, with the same validation.
pub fn block_plan(
    kind: BlockKind,
    c_in: usize,
    c_out: usize,
    k: usize,
    stride: [usize; 3],
    options: BlockOptions,
) -> Result<BlockPlan> {
    if k == 0 || k.is_multiple_of(2) {
        return Err(Error::InvalidBlock(format!(
            "kernel extent must be odd, got {k}"
        )));
    }
    if c_in == 0 || c_out == 0 || options.mid_channels == Some(0) {
        return Err(Error::InvalidBlock("channel counts must be >= 1".into()));
    }
    if stride.contains(&0) {
        return Err(Error::InvalidBlock(format!(
            "stride must be >= 1, got {stride:?}"
        )));
    }
    if !kind.is_sequential() && options.padding == Padding::Valid && k > 1 {
        return Err(Error::InvalidBlock(format!(
            "{kind} adds branches of different extents under Valid padding"
        )));
    }
    let [st, sh, sw] = stride;
    let spatial = [1, sh, sw];
    let temporal = [st, 1, 1];
    let (xy, xt, yt, t) = ([1, k, k], [k, 1, k], [k, k, 1], [k, 1, 1]);
    let mid = options.mid_channels.unwrap_or(c_out);
    let mut p = Plan {
        options,
        layers: Vec::new(),
        steps: Vec::new(),
    };
    match kind {
        BlockKind::Conv3D => {
            p.conv("conv3d", 0, [k, k, k], (c_in, c_out), stride);
        }
        BlockKind::TwoPlusOneD => {
            let a = p.conv("xy", 0, xy, (c_in, mid), spatial);
            p.conv("t", a, t, (mid, c_out), temporal);
        }
        BlockKind::Fast => {
            let a = p.conv("xy", 0, xy, (c_in, c_out), spatial);
            let b = p.conv("xt", a, xt, (c_out, c_out), temporal);
            p.conv("yt", b, yt, (c_out, c_out), [1, 1, 1]);
        }
        BlockKind::SplitFast => {
            let a = p.conv("xy", 0, xy, (c_in, c_out), spatial);
            let b = p.conv("xt", a, xt, (c_out, c_out), temporal);
            let c = p.conv("yt", a, yt, (c_out, c_out), temporal);
            p.add(b, c);
        }
        BlockKind::FastXtOnly => {
            let a = p.conv("xy", 0, xy, (c_in, c_out), spatial);
            let b = p.conv("xt", a, xt, (c_out, c_out), temporal);
            p.conv("t", b, t, (c_out, c_out), [1, 1, 1]);
        }
        BlockKind::FastYtOnly => {
            let a = p.conv("xy", 0, xy, (c_in, c_out), spatial);
            let b = p.conv("t", a, t, (c_out, c_out), temporal);
            p.conv("yt", b, yt, (c_out, c_out), [1, 1, 1]);
        }
        BlockKind::P3dA => {
            let a = p.conv("s", 0, xy, (c_in, mid), spatial);
            let b = p.conv("t", a, t, (mid, c_out), temporal);
            let s = p.skip("proj", 0, (c_in, c_out), stride);
            p.add(b, s);
        }
        BlockKind::P3dB => {
            let a = p.conv("s", 0, xy, (c_in, c_out), stride);
            let b = p.conv("t", 0, t, (c_in, c_out), stride);
            p.add(a, b);
        }
        BlockKind::P3dC => {
            let a = p.conv("s", 0, xy, (c_in, c_out), spatial);
            let sa = p.skip("proj_s", 0, (c_in, c_out), spatial);
            let s = p.add(a, sa);
            let b = p.conv("t", s, t, (c_out, c_out), temporal);
            let sb = p.skip("proj_t", s, (c_out, c_out), temporal);
            p.add(b, sb);
        }
    }
    Ok(BlockPlan {
        layers: p.layers,
        steps: p.steps,
    })
}

impl<T: Scalar> Block<T> {
    pub fn new(
        kind: BlockKind,
        c_in: usize,
        c_out: usize,
        k: usize,
        stride: [usize; 3],
        seed: u64,
        options: BlockOptions,
    ) -> Result<Self> {
        let plan = block_plan(kind, c_in, c_out, k, stride, options)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = plan
            .layers
            .into_iter()
            .map(|(name, spec)| {
                Ok(ConvLayer {
                    name: name.to_string(),
                    spec,
                    weights: ConvWeights::init_uniform(&spec, &mut rng)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Block {
            kind,
            c_in,
            c_out,
            k,
            stride,
            options,
            seed,
            layers,
            steps: plan.steps,
            id: fresh_id(),
            generation: 0,
        })
    }

    pub fn cast<U: Scalar>(&self) -> Block<U> {
        Block {
            kind: self.kind,
            c_in: self.c_in,
            c_out: self.c_out,
            k: self.k,
            stride: self.stride,
            options: self.options,
            seed: self.seed,
            layers: self
                .layers
                .iter()
                .map(|l| ConvLayer {
                    name: l.name.clone(),
                    spec: l.spec,
                    weights: l.weights.cast(),
                })
                .collect(),
            steps: self.steps.clone(),
            id: fresh_id(),
            generation: 0,
        }
    }
}

impl<T> Block<T> {
    pub fn kind(&self) -> BlockKind {
        self.kind
    }

    pub fn c_in(&self) -> usize {
        self.c_in
    }

    pub fn c_out(&self) -> usize {
        self.c_out
    }

    pub fn kernel_extent(&self) -> usize {
        self.k
    }

    pub fn stride(&self) -> [usize; 3] {
        self.stride
    }

    pub fn options(&self) -> BlockOptions {
        self.options
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn layers(&self) -> &[ConvLayer<T>] {
        &self.layers
    }

    /// Mutable access to the weights. Tapes recorded before this call become stale.
    pub fn layers_mut(&mut self) -> &mut [ConvLayer<T>] {
        self.generation += 1;
        &mut self.layers
    }

    pub fn layer(&self, name: &str) -> Option<&ConvLayer<T>> {
        self.layers.iter().find(|l| l.name == name)
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.spec.param_count()).sum()
    }

    /// ReLUs applied by one forward pass.
    pub fn relu_count(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| matches!(s, Step::Conv { relu: true, .. }))
            .count()
    }

    /// Shape of every node for a given input, input first.
    pub fn node_shapes(&self, input: Shape5) -> Result<Vec<Shape5>> {
        let mut shapes = vec![input];
        for step in &self.steps {
            let next = match *step {
                Step::Conv { layer, input, .. } => {
                    self.layers[layer].spec.output_shape(shapes[input])?
                }
                Step::Add { lhs, rhs } => {
                    if shapes[lhs] != shapes[rhs] {
                        return Err(Error::ShapeMismatch {
                            op: "block add",
                            left: shapes[lhs],
                            right: shapes[rhs],
                        });
                    }
                    shapes[lhs]
                }
            };
            shapes.push(next);
        }
        Ok(shapes)
    }

    pub fn output_shape(&self, input: Shape5) -> Result<Shape5> {
        Ok(*self
            .node_shapes(input)?
            .last()
            .expect("at least the input node"))
    }
}
