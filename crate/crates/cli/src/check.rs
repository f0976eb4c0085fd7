use fastconv::block::BlockKind;
use fastconv::train::{
    block_case, gradcheck_block, gradcheck_network, network_case, GradCheckConfig, GradCheckReport,
};
use serde::{Deserialize, Serialize};

use crate::Outcome;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    /// The standard block case, input (1, 2, 5, 7, 7).
    Block,
    /// TinyNet end to end on a batch of two clips.
    Network,
    Both,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CheckConfig {
    pub kinds: Vec<BlockKind>,
    pub target: Target,
    pub seed: u64,
    pub step: f64,
    pub tolerance: f64,
    /// Entries sampled per tensor for network checks.
    pub network_entries: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corrupt: Option<f64>,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            kinds: BlockKind::ALL.to_vec(),
            target: Target::Block,
            seed: 0,
            step: 1e-3,
            tolerance: 1e-3,
            network_entries: 12,
            corrupt: None,
        }
    }
}

pub fn gradcheck(cfg: &CheckConfig) -> anyhow::Result<Outcome> {
    anyhow::ensure!(!cfg.kinds.is_empty(), "no block kinds selected");
    let base = GradCheckConfig {
        step: cfg.step,
        tolerance: cfg.tolerance,
        seed: cfg.seed,
        corrupt: cfg.corrupt,
        ..GradCheckConfig::default()
    };
    let mut reports: Vec<GradCheckReport> = Vec::new();
    for &kind in &cfg.kinds {
        if matches!(cfg.target, Target::Block | Target::Both) {
            let (block, x) = block_case(kind, cfg.seed)?;
            let r = gradcheck_block(&block, &x, &base)?;
            eprintln!(
                "{}: max rel err {:.3e} ({} entries) {}",
                r.target,
                r.max_rel_err,
                r.checked,
                verdict(r.passed)
            );
            reports.push(r);
        }
        if matches!(cfg.target, Target::Network | Target::Both) {
            let (net, x, labels) = network_case(kind, cfg.seed)?;
            let sub = GradCheckConfig {
                max_entries: Some(cfg.network_entries),
                ..base.clone()
            };
            let r = gradcheck_network(&net, &x, &labels, &sub)?;
            eprintln!(
                "{}: max rel err {:.3e} ({} entries) {}",
                r.target,
                r.max_rel_err,
                r.checked,
                verdict(r.passed)
            );
            reports.push(r);
        }
    }
    let passed = reports.iter().all(|r| r.passed);
    Outcome::new("gradcheck", cfg, &reports, passed)
}

fn verdict(passed: bool) -> &'static str {
    if passed {
        "pass"
    } else {
        "FAIL"
    }
}
