use serde::{Deserialize, Serialize};

use crate::block::{block_plan, BlockKind, BlockOptions, BlockPlan};
use crate::conv::{ConvSpec, Padding};
use crate::error::{Error, Result};
use crate::tensor::Shape5;

/// What one residual unit holds besides its block.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitLayout {
    /// The block alone.
    #[default]
    BlockOnly,
    /// The block followed by a `(1, k, k)` spatial convolution with ReLU, in
    /// the style of a two-layer basic residual unit.
    BlockThenSpatial,
}

/// Stem, staged block stack and classifier head.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetConfig {
    pub block_kind: BlockKind,
    pub stage_widths: Vec<usize>,
    pub blocks_per_stage: Vec<usize>,
    /// Stride of the first unit in each stage; later units use stride 1.
    pub stage_strides: Vec<[usize; 3]>,
    pub input_shape: Shape5,
    pub num_classes: usize,
    pub stem: ConvSpec,
    /// Identity (or 1×1×1 projection) skip around every unit.
    #[serde(default)]
    pub residual: bool,
    #[serde(default)]
    pub unit_layout: UnitLayout,
    #[serde(default = "default_kernel")]
    pub kernel: usize,
    #[serde(default)]
    pub bias: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mid_channels: Option<usize>,
}

fn default_kernel() -> usize {
    3
}

/// Geometry of one unit, resolved from a config.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitPlan {
    pub c_in: usize,
    pub c_out: usize,
    pub stride: [usize; 3],
    pub block: BlockPlan,
    pub tail: Option<ConvSpec>,
    pub projection: Option<ConvSpec>,
    pub residual: bool,
}

impl NetConfig {
    /// Stem `3→16`, kernel `(3, 7, 7)`, stride `(1, 2, 2)`; one unit in each
    /// of two stages of widths 16 and 32, the second with stride 2; four
    /// classes; input `(1, 3, 8, 32, 32)`.
    pub fn tiny(kind: BlockKind) -> Self {
        NetConfig {
            block_kind: kind,
            stage_widths: vec![16, 32],
            blocks_per_stage: vec![1, 1],
            stage_strides: vec![[1, 1, 1], [2, 2, 2]],
            input_shape: Shape5::new(1, 3, 8, 32, 32),
            num_classes: 4,
            stem: ConvSpec::new([3, 7, 7], 3, 16).with_stride([1, 2, 2]),
            residual: false,
            unit_layout: UnitLayout::BlockOnly,
            kernel: 3,
            bias: false,
            mid_channels: None,
        }
    }

    /// ResNet-34 stage plan: 3, 4, 6, 3 units of widths 64 to 512, each unit
    /// a block plus a spatial convolution with a skip around both; temporal
    /// stride 2 in the last two stages; 101 classes on `(1, 3, 24, 224, 224)`.
    pub fn resnet34(kind: BlockKind) -> Self {
        NetConfig {
            block_kind: kind,
            stage_widths: vec![64, 128, 256, 512],
            blocks_per_stage: vec![3, 4, 6, 3],
            stage_strides: vec![[1, 1, 1], [1, 2, 2], [2, 2, 2], [2, 2, 2]],
            input_shape: Shape5::new(1, 3, 24, 224, 224),
            num_classes: 101,
            stem: ConvSpec::new([3, 7, 7], 3, 64).with_stride([1, 2, 2]),
            residual: true,
            unit_layout: UnitLayout::BlockThenSpatial,
            kernel: 3,
            bias: false,
            mid_channels: None,
        }
    }

    pub fn preset(name: &str, kind: BlockKind) -> Result<Self> {
        match name {
            "tiny" | "tinynet" => Ok(NetConfig::tiny(kind)),
            "resnet34" | "resnet-34" => Ok(NetConfig::resnet34(kind)),
            other => Err(Error::InvalidConfig(format!("unknown preset {other:?}"))),
        }
    }

    pub fn block_options(&self) -> BlockOptions {
        BlockOptions {
            padding: Padding::Same,
            bias: self.bias,
            activation: true,
            mid_channels: self.mid_channels,
        }
    }

    pub fn head_width(&self) -> usize {
        *self.stage_widths.last().unwrap_or(&self.stem.c_out)
    }

    /// The fully-connected head as a `1×1×1` convolution over the pooled features.
    pub fn head_spec(&self) -> ConvSpec {
        ConvSpec::new([1, 1, 1], self.head_width(), self.num_classes).with_bias(true)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        let stages = self.stage_widths.len();
        if stages == 0 {
            return bad("at least one stage is required".into());
        }
        if self.blocks_per_stage.len() != stages || self.stage_strides.len() != stages {
            return bad(format!(
                "stage lists differ in length: {} widths, {} block counts, {} strides",
                stages,
                self.blocks_per_stage.len(),
                self.stage_strides.len()
            ));
        }
        if self.blocks_per_stage.contains(&0) {
            return bad("every stage needs at least one block".into());
        }
        if self.stage_widths.contains(&0) || self.stage_widths.windows(2).any(|w| w[1] < w[0]) {
            return bad(format!(
                "stage widths must be positive and nondecreasing: {:?}",
                self.stage_widths
            ));
        }
        if self.num_classes < 2 {
            return bad(format!("need at least 2 classes, got {}", self.num_classes));
        }
        if self.kernel.is_multiple_of(2) {
            return bad(format!(
                "block kernel extent must be odd, got {}",
                self.kernel
            ));
        }
        if self.stem.c_in != self.input_shape.c {
            return bad(format!(
                "stem expects {} channels, input has {}",
                self.stem.c_in, self.input_shape.c
            ));
        }
        self.stem.validate()?;
        self.units()?;
        self.feature_shape()?;
        Ok(())
    }

    pub fn unit_count(&self) -> usize {
        self.blocks_per_stage.iter().sum()
    }

    /// Every unit in order, with its block plan and skip wiring.
    pub fn units(&self) -> Result<Vec<UnitPlan>> {
        let mut c_in = self.stem.c_out;
        let mut units = Vec::new();
        for (s, (&width, &count)) in self
            .stage_widths
            .iter()
            .zip(&self.blocks_per_stage)
            .enumerate()
        {
            for b in 0..count {
                let stride = if b == 0 {
                    self.stage_strides[s]
                } else {
                    [1, 1, 1]
                };
                let block = block_plan(
                    self.block_kind,
                    c_in,
                    width,
                    self.kernel,
                    stride,
                    self.block_options(),
                )?;
                let tail = match self.unit_layout {
                    UnitLayout::BlockOnly => None,
                    UnitLayout::BlockThenSpatial => Some(
                        ConvSpec::new([1, self.kernel, self.kernel], width, width)
                            .with_bias(self.bias),
                    ),
                };
                let projection =
                    (self.residual && (c_in != width || stride != [1, 1, 1])).then(|| {
                        ConvSpec::new([1, 1, 1], c_in, width)
                            .with_stride(stride)
                            .with_padding(Padding::Valid)
                            .with_bias(self.bias)
                    });
                units.push(UnitPlan {
                    c_in,
                    c_out: width,
                    stride,
                    block,
                    tail,
                    projection,
                    residual: self.residual,
                });
                c_in = width;
            }
        }
        Ok(units)
    }

    /// Shape entering global pooling for the configured input.
    pub fn feature_shape(&self) -> Result<Shape5> {
        let collapse = |e: Error| Error::InvalidConfig(format!("shapes do not propagate: {e}"));
        let mut shape = self.stem.output_shape(self.input_shape).map_err(collapse)?;
        for u in self.units()? {
            shape = *u
                .block
                .node_shapes(shape)
                .map_err(collapse)?
                .last()
                .expect("input node");
            if let Some(t) = &u.tail {
                shape = t.output_shape(shape).map_err(collapse)?;
            }
        }
        Ok(shape)
    }
}
