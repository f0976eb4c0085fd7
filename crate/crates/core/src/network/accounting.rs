use serde::{Deserialize, Serialize};

use crate::block::{BlockKind, Step};
use crate::error::Result;
use crate::network::NetConfig;
use crate::tensor::Shape5;

/// Parameter, depth, FLOP and activation-memory totals for one clip.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccountingReport {
    pub block_kind: BlockKind,
    pub input_shape: Shape5,
    pub total_params: u64,
    pub stem_params: u64,
    /// Blocks plus their tail convolutions and skip projections.
    pub unit_params: u64,
    pub head_params: u64,
    /// Weight-bearing layers: every convolution plus the fully-connected head.
    pub depth: usize,
    pub flops_per_clip: u64,
    /// `4 · 2 · Σ` layer-output elements (forward values plus their gradients).
    pub activation_bytes_per_clip: u64,
}

/// Walks the configured shapes for a single clip; no weights are allocated.
pub fn accounting(cfg: &NetConfig) -> Result<AccountingReport> {
    cfg.validate()?;
    let mut depth = 0usize;
    let mut flops = 0u64;
    let mut elements = 0u64;
    let clip = Shape5 {
        n: 1,
        ..cfg.input_shape
    };

    let mut x = cfg.stem.output_shape(clip)?;
    depth += 1;
    flops += cfg.stem.flops(x);
    elements += x.numel() as u64;
    let stem_params = cfg.stem.param_count() as u64;

    let mut unit_params = 0u64;
    for u in cfg.units()? {
        let shapes = u.block.node_shapes(x)?;
        for (i, step) in u.block.steps.iter().enumerate() {
            if let Step::Conv { layer, .. } = *step {
                depth += 1;
                flops += u.block.layers[layer].1.flops(shapes[i + 1]);
            }
            elements += shapes[i + 1].numel() as u64;
        }
        unit_params += u.block.param_count() as u64;
        let mut y = *shapes.last().expect("input node");
        if let Some(t) = &u.tail {
            y = t.output_shape(y)?;
            depth += 1;
            flops += t.flops(y);
            elements += y.numel() as u64;
            unit_params += t.param_count() as u64;
        }
        if let Some(p) = &u.projection {
            let s = p.output_shape(x)?;
            depth += 1;
            flops += p.flops(s);
            elements += s.numel() as u64;
            unit_params += p.param_count() as u64;
        }
        if u.residual {
            elements += y.numel() as u64;
        }
        x = y;
    }

    let head = cfg.head_spec();
    let pooled = Shape5::new(1, x.c, 1, 1, 1);
    let logits = head.output_shape(pooled)?;
    depth += 1;
    flops += head.flops(logits);
    elements += (pooled.numel() + logits.numel()) as u64;
    let head_params = head.param_count() as u64;

    Ok(AccountingReport {
        block_kind: cfg.block_kind,
        input_shape: clip,
        total_params: stem_params + unit_params + head_params,
        stem_params,
        unit_params,
        head_params,
        depth,
        flops_per_clip: flops,
        activation_bytes_per_clip: 4 * 2 * elements,
    })
}
