use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::block::{Block, BlockKind, BlockOptions};
use crate::error::Result;
use crate::network::{NetConfig, Network};
use crate::scalar::Scalar;
use crate::tensor::{Shape5, Tensor5};
use crate::train::batch_xent;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GradCheckConfig {
    /// Central-difference half step.
    pub step: f64,
    /// Largest relative error that still passes.
    pub tolerance: f64,
    /// Entries whose analytic and numeric magnitudes are both at most this are not compared.
    pub floor: f64,
    /// Checks a seeded subset of this many entries per tensor; all entries when `None`.
    pub max_entries: Option<usize>,
    pub seed: u64,
    /// Multiplies every analytic gradient; a value other than 1 must make the check fail.
    pub corrupt: Option<f64>,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            step: 1e-3,
            tolerance: 1e-3,
            floor: 1e-6,
            max_entries: None,
            seed: 0,
            corrupt: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorCheck {
    pub name: String,
    pub numel: usize,
    /// Entries compared against the tolerance.
    pub checked: usize,
    /// Entries below the magnitude floor.
    pub below_floor: usize,
    /// Entries where the probe moved some ReLU across its kink.
    pub skipped_kinks: usize,
    pub max_rel_err: f64,
    pub max_abs_err: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub target: String,
    pub step: f64,
    pub tolerance: f64,
    pub corrupt: Option<f64>,
    pub tensors: Vec<TensorCheck>,
    pub max_rel_err: f64,
    pub checked: usize,
    pub skipped_kinks: usize,
    pub passed: bool,
}

/// Something with a scalar loss whose inputs and parameters can be nudged.
trait Probe {
    fn names(&self) -> Vec<String>;
    fn values(&mut self, tensor: usize) -> &mut [f64];
    /// Loss and ReLU sign pattern at the current values.
    fn eval(&self) -> Result<(f64, Vec<bool>)>;
    /// Analytic gradient of every tensor, in `names` order.
    fn analytic(&self) -> Result<Vec<Vec<f64>>>;
}

fn weight_slots<T: Scalar>(layers: &[&crate::block::ConvLayer<T>]) -> Vec<(usize, bool)> {
    layers
        .iter()
        .enumerate()
        .flat_map(|(i, l)| std::iter::once((i, false)).chain(l.spec.bias.then_some((i, true))))
        .collect()
}

fn slot_names(names: &[String], slots: &[(usize, bool)]) -> Vec<String> {
    std::iter::once("input".to_string())
        .chain(
            slots.iter().map(|&(i, bias)| {
                format!("{}.{}", names[i], if bias { "bias" } else { "kernels" })
            }),
        )
        .collect()
}

struct BlockProbe {
    block: Block<f64>,
    input: Tensor5<f64>,
    slots: Vec<(usize, bool)>,
}

impl Probe for BlockProbe {
    fn names(&self) -> Vec<String> {
        let names: Vec<String> = self.block.layers().iter().map(|l| l.name.clone()).collect();
        slot_names(&names, &self.slots)
    }

    fn values(&mut self, tensor: usize) -> &mut [f64] {
        if tensor == 0 {
            return self.input.as_mut_slice();
        }
        let (i, bias) = self.slots[tensor - 1];
        let w = &mut self.block.layers_mut()[i].weights;
        if bias {
            &mut w.bias
        } else {
            w.kernels.as_mut_slice()
        }
    }

    /// Loss `Σ out² / 2`.
    fn eval(&self) -> Result<(f64, Vec<bool>)> {
        let (out, tape) = self.block.forward(&self.input)?;
        let loss = out.as_slice().iter().map(|v| v * v).sum::<f64>() / 2.0;
        Ok((loss, self.block.relu_pattern(&tape)))
    }

    fn analytic(&self) -> Result<Vec<Vec<f64>>> {
        let (out, tape) = self.block.forward(&self.input)?;
        let g = self.block.backward(&tape, &out)?;
        Ok(gather(g.input.into_vec(), &g.layers, &self.slots))
    }
}

struct NetProbe {
    net: Network<f64>,
    input: Tensor5<f64>,
    labels: Vec<usize>,
    slots: Vec<(usize, bool)>,
}

impl Probe for NetProbe {
    fn names(&self) -> Vec<String> {
        slot_names(&self.net.layer_names(), &self.slots)
    }

    fn values(&mut self, tensor: usize) -> &mut [f64] {
        if tensor == 0 {
            return self.input.as_mut_slice();
        }
        let (i, bias) = self.slots[tensor - 1];
        let w = &mut self
            .net
            .layers_mut()
            .into_iter()
            .nth(i)
            .expect("slot within layers")
            .weights;
        if bias {
            &mut w.bias
        } else {
            w.kernels.as_mut_slice()
        }
    }

    /// Batch-mean cross-entropy.
    fn eval(&self) -> Result<(f64, Vec<bool>)> {
        let (logits, tape) = self.net.forward(&self.input)?;
        let (losses, _) = batch_xent(&logits, &self.labels)?;
        let loss = losses.iter().sum::<f64>() / losses.len() as f64;
        Ok((loss, self.net.relu_pattern(&tape)))
    }

    fn analytic(&self) -> Result<Vec<Vec<f64>>> {
        let (logits, tape) = self.net.forward(&self.input)?;
        let (_, grad) = batch_xent(&logits, &self.labels)?;
        let g = self.net.backward(&tape, &grad, true)?;
        let input = g.input.expect("input gradient requested").into_vec();
        Ok(gather(input, &g.layers, &self.slots))
    }
}

fn gather(
    input: Vec<f64>,
    layers: &[crate::conv::ConvWeights<f64>],
    slots: &[(usize, bool)],
) -> Vec<Vec<f64>> {
    std::iter::once(input)
        .chain(slots.iter().map(|&(i, bias)| {
            if bias {
                layers[i].bias.clone()
            } else {
                layers[i].kernels.as_slice().to_vec()
            }
        }))
        .collect()
}

fn run(probe: &mut dyn Probe, target: String, cfg: &GradCheckConfig) -> Result<GradCheckReport> {
    let names = probe.names();
    let mut analytic = probe.analytic()?;
    if let Some(f) = cfg.corrupt {
        analytic.iter_mut().flatten().for_each(|g| *g *= f);
    }
    let (_, base_pattern) = probe.eval()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut tensors = Vec::with_capacity(names.len());
    for (t, name) in names.into_iter().enumerate() {
        let numel = analytic[t].len();
        let mut entries: Vec<usize> = match cfg.max_entries {
            Some(m) if m < numel => sample(&mut rng, numel, m).into_vec(),
            _ => (0..numel).collect(),
        };
        entries.sort_unstable();
        let mut check = TensorCheck {
            name,
            numel,
            checked: 0,
            below_floor: 0,
            skipped_kinks: 0,
            max_rel_err: 0.0,
            max_abs_err: 0.0,
            passed: true,
        };
        for i in entries {
            let original = probe.values(t)[i];
            probe.values(t)[i] = original + cfg.step;
            let (plus, p_plus) = probe.eval()?;
            probe.values(t)[i] = original - cfg.step;
            let (minus, p_minus) = probe.eval()?;
            probe.values(t)[i] = original;
            if p_plus != base_pattern || p_minus != base_pattern {
                check.skipped_kinks += 1;
                continue;
            }
            let numeric = (plus - minus) / (2.0 * cfg.step);
            let a = analytic[t][i];
            let scale = a.abs().max(numeric.abs());
            if scale <= cfg.floor {
                check.below_floor += 1;
                continue;
            }
            let abs = (a - numeric).abs();
            check.checked += 1;
            check.max_abs_err = check.max_abs_err.max(abs);
            check.max_rel_err = check.max_rel_err.max(abs / scale);
        }
        check.passed = check.max_rel_err <= cfg.tolerance;
        tensors.push(check);
    }
    let checked = tensors.iter().map(|c| c.checked).sum();
    let max_rel_err = tensors.iter().map(|c| c.max_rel_err).fold(0.0, f64::max);
    Ok(GradCheckReport {
        target,
        step: cfg.step,
        tolerance: cfg.tolerance,
        corrupt: cfg.corrupt,
        skipped_kinks: tensors.iter().map(|c| c.skipped_kinks).sum(),
        passed: checked > 0 && tensors.iter().all(|c| c.passed),
        max_rel_err,
        checked,
        tensors,
    })
}

/// Central differences of `Σ out² / 2` against the block's backward pass,
/// run on an `f64` copy of the block.
pub fn gradcheck_block<T: Scalar>(
    block: &Block<T>,
    input: &Tensor5<f64>,
    cfg: &GradCheckConfig,
) -> Result<GradCheckReport> {
    let block = block.cast::<f64>();
    let slots = weight_slots(&block.layers().iter().collect::<Vec<_>>());
    let target = format!("block:{}", block.kind());
    let mut probe = BlockProbe {
        block,
        input: input.clone(),
        slots,
    };
    run(&mut probe, target, cfg)
}

/// Central differences of the batch-mean cross-entropy against the network's
/// backward pass, run on an `f64` copy of the network.
pub fn gradcheck_network<T: Scalar>(
    net: &Network<T>,
    input: &Tensor5<f64>,
    labels: &[usize],
    cfg: &GradCheckConfig,
) -> Result<GradCheckReport> {
    let net = net.cast::<f64>();
    let slots = weight_slots(&net.layers());
    let target = format!("network:{}", net.config().block_kind);
    let mut probe = NetProbe {
        net,
        input: input.clone(),
        labels: labels.to_vec(),
        slots,
    };
    run(&mut probe, target, cfg)
}

/// The standard block case: `2 → 4` channels, `k = 3`, stride 1, bias on with
/// biases drawn from `[0, 0.3)`, input `(1, 2, 5, 7, 7)` uniform in `[-1, 1]`.
///
/// Positive biases keep the output ReLUs alive; with zero biases a narrow
/// block can end up with an all-zero output and nothing to compare.
pub fn block_case(kind: BlockKind, seed: u64) -> Result<(Block<f64>, Tensor5<f64>)> {
    let options = BlockOptions {
        bias: true,
        ..BlockOptions::default()
    };
    let mut block = Block::<f64>::new(kind, 2, 4, 3, [1, 1, 1], seed, options)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xb1a5);
    for layer in block.layers_mut() {
        for b in &mut layer.weights.bias {
            *b = rng.random_range(0.0..0.3);
        }
    }
    let input = Tensor5::random_uniform(Shape5::new(1, 2, 5, 7, 7), -1.0, 1.0, &mut rng)?;
    Ok((block, input))
}

/// The standard network case: TinyNet of `kind`, a batch of two clips uniform
/// in `[0, 1]` and labels `[1, 3]`.
pub fn network_case(
    kind: BlockKind,
    seed: u64,
) -> Result<(Network<f64>, Tensor5<f64>, Vec<usize>)> {
    let cfg = NetConfig::tiny(kind);
    let net = Network::<f64>::build(&cfg, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7e7);
    let input = Tensor5::random_uniform(
        Shape5 {
            n: 2,
            ..cfg.input_shape
        },
        0.0,
        1.0,
        &mut rng,
    )?;
    Ok((net, input, vec![1, 3]))
}
