use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use fastconv::block::BlockKind;
use fastconv::data::{gen_dataset, Dataset, SyntheticSpec};
use fastconv::network::{NetConfig, Network};
use fastconv::train::{evaluate, train_with, Evaluation, TrainConfig, TrainRecord};
use serde::{Deserialize, Serialize};

use crate::{write_json, Outcome};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DataConfig {
    pub spec: SyntheticSpec,
    pub train_per_class: usize,
    pub val_per_class: usize,
    pub seed: u64,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            spec: SyntheticSpec::moving_bars(),
            train_per_class: 64,
            val_per_class: 16,
            seed: 7,
        }
    }
}

impl DataConfig {
    pub fn generate(&self) -> anyhow::Result<Dataset> {
        Ok(gen_dataset(
            &self.spec,
            self.train_per_class,
            self.val_per_class,
            self.seed,
        )?)
    }
}

/// One training run: network, data and optimizer settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainRun {
    /// Preset used when `network` is absent.
    pub arch: String,
    pub kind: BlockKind,
    pub residual: bool,
    /// Full network description; overrides `arch`, `kind` and `residual`.
    /// The class count always follows the dataset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub network: Option<NetConfig>,
    pub net_seed: u64,
    pub data: DataConfig,
    pub train: TrainConfig,
}

impl Default for TrainRun {
    fn default() -> Self {
        TrainRun {
            arch: "tiny".into(),
            kind: BlockKind::Fast,
            residual: false,
            network: None,
            net_seed: 1,
            data: DataConfig::default(),
            train: TrainConfig::default(),
        }
    }
}

impl TrainRun {
    pub fn net_config(&self) -> anyhow::Result<NetConfig> {
        let mut cfg = match &self.network {
            Some(n) => n.clone(),
            None => {
                let mut n = NetConfig::preset(&self.arch, self.kind)?;
                n.residual = self.residual;
                n
            }
        };
        cfg.num_classes = self.data.spec.classes.len();
        cfg.validate()?;
        Ok(cfg)
    }

    /// The same run with the network spelled out.
    pub fn resolve(mut self) -> anyhow::Result<Self> {
        self.network = Some(self.net_config()?);
        self.data.spec.validate()?;
        self.train.validate()?;
        Ok(self)
    }

    pub fn build(&self) -> anyhow::Result<Network<f32>> {
        Ok(Network::build(&self.net_config()?, self.net_seed)?)
    }

    /// Trains on a freshly generated dataset, reporting each epoch to stderr.
    pub fn execute(&self) -> anyhow::Result<(Network<f32>, TrainRecord)> {
        let data = self.data.generate()?;
        let mut net = self.build()?;
        let record = train_with(&mut net, &data.train, &data.val, &self.train, |e| {
            eprintln!(
                "epoch {:>3}  train {:.4}  val {:.4}  acc {:.3}  lr {:.3e}",
                e.epoch, e.train_loss, e.val_loss, e.val_acc, e.lr
            );
        })?;
        Ok((net, record))
    }
}

#[derive(Serialize)]
struct TrainSummary {
    out: PathBuf,
    epochs_run: usize,
    final_val_acc: f64,
    best_val_acc: f64,
    final_train_loss: f64,
    params: usize,
}

/// Trains and writes `record.csv`, `record.json`, `resolved_config.json`
/// and the trained weights under `model/` in `out`.
pub fn train(run: TrainRun, out: &Path) -> anyhow::Result<Outcome> {
    let run = run.resolve()?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let outcome_config = crate::resolved("train", &run)?;
    write_json(&out.join("resolved_config.json"), &outcome_config)?;
    let (net, record) = run.execute()?;
    record.write_csv(out.join("record.csv"))?;
    record.write_json(out.join("record.json"))?;
    net.save(out.join("model"))?;
    let last = record.last().context("training ran no epochs")?;
    let summary = TrainSummary {
        out: out.to_path_buf(),
        epochs_run: record.epochs.len(),
        final_val_acc: last.val_acc,
        best_val_acc: record.epochs.iter().map(|e| e.val_acc).fold(0.0, f64::max),
        final_train_loss: last.train_loss,
        params: net.param_count(),
    };
    let passed = run
        .train
        .target_val_acc
        .is_none_or(|t| summary.best_val_acc >= t);
    Outcome::new("train", &run, &summary, passed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Directory written by `Network::save`.
    pub model: PathBuf,
    /// Data settings, normally the `data` block of a training run.
    pub data: DataConfig,
    pub split: Split,
    pub batch_size: usize,
}

#[derive(Serialize)]
struct EvalReport {
    evaluation: Evaluation,
    kind: BlockKind,
}

pub fn eval(cfg: &EvalConfig) -> anyhow::Result<Outcome> {
    let net = Network::<f32>::load(&cfg.model)?;
    let data = cfg.data.generate()?;
    let samples = match cfg.split {
        Split::Train => &data.train,
        Split::Val => &data.val,
    };
    anyhow::ensure!(
        net.config().num_classes == data.num_classes(),
        "model has {} classes, data has {}",
        net.config().num_classes,
        data.num_classes()
    );
    let report = EvalReport {
        evaluation: evaluate(&net, samples, cfg.batch_size)?,
        kind: net.config().block_kind,
    };
    Outcome::new("eval", cfg, &report, true)
}
