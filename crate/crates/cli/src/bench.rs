use std::time::Instant;

use fastconv::block::{Block, BlockKind, BlockOptions};
use fastconv::conv::{conv3d_forward, conv3d_naive, ConvSpec, ConvWeights};
use fastconv::{Shape5, Tensor5};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::Outcome;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub kinds: Vec<BlockKind>,
    /// Block input; blocks keep the channel count.
    pub shape: Shape5,
    pub repeats: usize,
    /// Also time a single 3×3×3 convolution against the naive oracle.
    pub oracle: bool,
    pub oracle_shape: Shape5,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            kinds: BlockKind::ALL.to_vec(),
            shape: Shape5::new(1, 16, 8, 32, 32),
            repeats: 5,
            oracle: true,
            oracle_shape: Shape5::new(1, 64, 4, 16, 16),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Timing {
    pub mean_us: f64,
    pub std_us: f64,
    /// Standard deviation over mean.
    pub cv: f64,
    pub samples: Vec<f64>,
}

impl Timing {
    fn measure(repeats: usize, mut f: impl FnMut() -> anyhow::Result<()>) -> anyhow::Result<Self> {
        f()?;
        let mut samples = Vec::with_capacity(repeats);
        for _ in 0..repeats {
            let t = Instant::now();
            f()?;
            samples.push(t.elapsed().as_secs_f64() * 1e6);
        }
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / samples.len() as f64;
        Ok(Timing {
            mean_us: mean,
            std_us: var.sqrt(),
            cv: if mean > 0.0 { var.sqrt() / mean } else { 0.0 },
            samples,
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct KindBench {
    pub kind: BlockKind,
    pub params: usize,
    pub flops: u64,
    pub clips_per_s: f64,
    pub per_block: Timing,
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleBench {
    pub optimized: Timing,
    pub naive: Timing,
    pub speedup: f64,
    pub max_abs_diff: f64,
    pub optimized_faster: bool,
}

#[derive(Serialize)]
struct BenchReport {
    kinds: Vec<KindBench>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<OracleBench>,
}

pub fn bench(cfg: &BenchConfig) -> anyhow::Result<Outcome> {
    anyhow::ensure!(cfg.repeats >= 1, "repeats must be >= 1");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let x = Tensor5::<f32>::random_uniform(cfg.shape, 0.0, 1.0, &mut rng)?;
    let c = cfg.shape.c;
    let mut kinds = Vec::new();
    for &kind in &cfg.kinds {
        let block = Block::<f32>::new(kind, c, c, 3, [1, 1, 1], cfg.seed, BlockOptions::default())?;
        let timing = Timing::measure(cfg.repeats, || Ok(block.infer(&x).map(drop)?))?;
        let flops = fastconv::block::block_plan(kind, c, c, 3, [1, 1, 1], BlockOptions::default())?
            .flops(cfg.shape)?;
        eprintln!("{kind}: {:.0} us per block", timing.mean_us);
        kinds.push(KindBench {
            kind,
            params: block.param_count(),
            flops,
            clips_per_s: cfg.shape.n as f64 / (timing.mean_us * 1e-6),
            per_block: timing,
        });
    }
    let oracle = if cfg.oracle {
        let s = cfg.oracle_shape;
        let spec = ConvSpec::new([3, 3, 3], s.c, s.c);
        let w = ConvWeights::<f32>::init_uniform(&spec, &mut rng)?;
        let xo = Tensor5::<f32>::random_uniform(s, -1.0, 1.0, &mut rng)?;
        let optimized =
            Timing::measure(
                cfg.repeats,
                || Ok(conv3d_forward(&xo, &spec, &w).map(drop)?),
            )?;
        let naive = Timing::measure(cfg.repeats.min(3), || {
            Ok(conv3d_naive(&xo, &spec, &w).map(drop)?)
        })?;
        let diff =
            conv3d_forward(&xo, &spec, &w)?.max_abs_diff(&conv3d_naive(&xo, &spec, &w)?)? as f64;
        eprintln!(
            "oracle: optimized {:.0} us, naive {:.0} us",
            optimized.mean_us, naive.mean_us
        );
        Some(OracleBench {
            speedup: naive.mean_us / optimized.mean_us,
            optimized_faster: optimized.mean_us < naive.mean_us,
            max_abs_diff: diff,
            optimized,
            naive,
        })
    } else {
        None
    };
    let passed = oracle
        .as_ref()
        .is_none_or(|o| o.optimized_faster && o.max_abs_diff <= 1e-4);
    Outcome::new("bench", cfg, &BenchReport { kinds, oracle }, passed)
}
