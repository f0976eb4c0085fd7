//! Networks built from a stem convolution, staged units of blocks, global
//! average pooling and a fully-connected head, plus their accounting.

mod accounting;
mod config;
mod io;
mod net;

pub use accounting::{accounting, AccountingReport};
pub use config::{NetConfig, UnitLayout, UnitPlan};
pub use net::{global_average_pool, NetGrads, NetTape, Network, Unit};
