//! Optimizer, learning-rate schedule, loss, epoch loop and gradient checking.

mod gradcheck;
mod loss;
mod schedule;
mod sgd;
mod trainer;

pub use gradcheck::{
    block_case, gradcheck_block, gradcheck_network, network_case, GradCheckConfig, GradCheckReport,
    TensorCheck,
};
pub use loss::{batch_xent, softmax, softmax_xent};
pub use schedule::LrSchedule;
pub use sgd::{sgd_step, SgdState};
pub use trainer::{evaluate, train, train_with, EpochRecord, Evaluation, TrainConfig, TrainRecord};
