use std::fmt::Write as _;
use std::path::Path;
use std::sync::mpsc::{sync_channel, Receiver};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Sample;
use crate::error::{Error, Result};
use crate::network::Network;
use crate::scalar::Scalar;
use crate::tensor::Tensor5;
use crate::train::{batch_xent, LrSchedule, SgdState};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Seeds the shuffle stream.
    pub seed: u64,
    pub schedule: LrSchedule,
    pub momentum: f64,
    pub weight_decay: f64,
    /// Stop after the first epoch whose validation accuracy reaches this value.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_val_acc: Option<f64>,
    /// Early stopping is not considered before this many epochs have run.
    pub min_epochs: usize,
    /// Threads that assemble batches ahead of the optimizer; 0 assembles inline.
    pub loader_workers: usize,
    /// Record wall time per epoch. Off by default so records are reproducible.
    pub timing: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            batch_size: 8,
            seed: 0,
            schedule: LrSchedule::default(),
            momentum: 0.9,
            weight_decay: 0.0,
            target_val_acc: None,
            min_epochs: 0,
            loader_workers: 4,
            timing: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.momentum)
            || self.weight_decay.is_nan()
            || self.weight_decay < 0.0
        {
            return Err(Error::InvalidConfig(format!(
                "momentum {} must lie in [0, 1) and weight decay {} must be >= 0",
                self.momentum, self.weight_decay
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// Zero-based; `lr` is the rate at the start of this epoch.
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_acc: f64,
    pub lr: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainRecord {
    pub epochs: Vec<EpochRecord>,
}

impl TrainRecord {
    pub fn last(&self) -> Option<&EpochRecord> {
        self.epochs.last()
    }

    /// Header `epoch,train_loss,val_loss,val_acc,lr,seconds`; floats use the
    /// shortest representation that parses back to the same value.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,val_loss,val_acc,lr,seconds\n");
        for e in &self.epochs {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                e.epoch, e.train_loss, e.val_loss, e.val_acc, e.lr, e.seconds
            );
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub loss: f64,
    pub accuracy: f64,
    pub correct: usize,
    pub total: usize,
}

struct Batch<T> {
    clips: Tensor5<T>,
    labels: Vec<usize>,
}

fn make_batch<T: Scalar>(samples: &[Sample], idx: &[usize]) -> Result<Batch<T>> {
    let clips: Vec<&Tensor5<f32>> = idx.iter().map(|&i| &samples[i].clip).collect();
    Ok(Batch {
        clips: Tensor5::stack(&clips)?.cast(),
        labels: idx.iter().map(|&i| samples[i].label).collect(),
    })
}

fn argmax<T: Scalar>(row: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Mean cross-entropy and top-1 accuracy over `samples`, in batches.
pub fn evaluate<T: Scalar>(
    net: &Network<T>,
    samples: &[Sample],
    batch_size: usize,
) -> Result<Evaluation> {
    if samples.is_empty() {
        return Err(Error::EmptySplit("evaluation"));
    }
    let order: Vec<usize> = (0..samples.len()).collect();
    let (mut loss, mut correct) = (0.0, 0);
    for idx in order.chunks(batch_size.max(1)) {
        let batch = make_batch::<T>(samples, idx)?;
        let logits = net.infer(&batch.clips)?;
        let (losses, _) = batch_xent(&logits, &batch.labels)?;
        loss += losses.iter().map(|l| l.to_f64_lossy()).sum::<f64>();
        let classes = logits.numel() / idx.len();
        for (row, &label) in logits.as_slice().chunks(classes).zip(&batch.labels) {
            correct += usize::from(argmax(row) == label);
        }
    }
    Ok(Evaluation {
        loss: loss / samples.len() as f64,
        accuracy: correct as f64 / samples.len() as f64,
        correct,
        total: samples.len(),
    })
}

/// Trains `net` in place and returns one record per completed epoch.
///
/// The shuffle stream is seeded by `cfg.seed`, batches are stacked clips and
/// the schedule is evaluated at the fractional epoch of every batch, so the
/// whole record is a function of the seed.
pub fn train<T: Scalar>(
    net: &mut Network<T>,
    train: &[Sample],
    val: &[Sample],
    cfg: &TrainConfig,
) -> Result<TrainRecord> {
    train_with(net, train, val, cfg, |_| {})
}

/// [`train`] with a callback after every epoch.
pub fn train_with<T: Scalar>(
    net: &mut Network<T>,
    train: &[Sample],
    val: &[Sample],
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainRecord> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::EmptySplit("train"));
    }
    if val.is_empty() {
        return Err(Error::EmptySplit("validation"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut sgd = SgdState::new(cfg.momentum, cfg.weight_decay);
    let mut record = TrainRecord::default();
    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 0..cfg.epochs {
        let start = Instant::now();
        order.shuffle(&mut rng);
        let batches: Vec<&[usize]> = order.chunks(cfg.batch_size).collect();
        let steps = batches.len() as f64;
        let mut loss_sum = 0.0;
        for_each_batch(train, &batches, cfg.loader_workers, |b, batch: Batch<T>| {
            let (logits, tape) = net.forward(&batch.clips)?;
            let (losses, grad) = batch_xent(&logits, &batch.labels)?;
            loss_sum += losses.iter().map(|l| l.to_f64_lossy()).sum::<f64>();
            let grads = net.backward(&tape, &grad, false)?;
            let lr = cfg.schedule.lr_at(epoch as f64 + b as f64 / steps);
            sgd.step(net.layers_mut(), &grads.layers, lr)
        })?;
        let eval = evaluate(net, val, cfg.batch_size)?;
        let entry = EpochRecord {
            epoch,
            train_loss: loss_sum / train.len() as f64,
            val_loss: eval.loss,
            val_acc: eval.accuracy,
            lr: cfg.schedule.lr_at(epoch as f64),
            seconds: if cfg.timing {
                start.elapsed().as_secs_f64()
            } else {
                0.0
            },
        };
        on_epoch(&entry);
        record.epochs.push(entry);
        if epoch + 1 >= cfg.min_epochs && cfg.target_val_acc.is_some_and(|t| eval.accuracy >= t) {
            break;
        }
    }
    Ok(record)
}

/// Runs `step` on every batch in order. With workers, batch `i` is built by
/// worker `i mod workers` and handed over through that worker's bounded queue.
fn for_each_batch<T: Scalar>(
    samples: &[Sample],
    batches: &[&[usize]],
    workers: usize,
    mut step: impl FnMut(usize, Batch<T>) -> Result<()>,
) -> Result<()> {
    if workers == 0 {
        for (b, idx) in batches.iter().enumerate() {
            step(b, make_batch(samples, idx)?)?;
        }
        return Ok(());
    }
    std::thread::scope(|scope| {
        let queues: Vec<Receiver<Result<Batch<T>>>> = (0..workers)
            .map(|w| {
                let (tx, rx) = sync_channel(2);
                scope.spawn(move || {
                    for idx in batches.iter().skip(w).step_by(workers) {
                        if tx.send(make_batch(samples, idx)).is_err() {
                            break;
                        }
                    }
                });
                rx
            })
            .collect();
        for b in 0..batches.len() {
            let batch = queues[b % workers]
                .recv()
                .map_err(|_| Error::InvalidConfig("batch loader stopped early".into()))??;
            step(b, batch)?;
        }
        Ok(())
    })
}
