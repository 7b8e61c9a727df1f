//! Run configuration, the online and offline loops, and run artifacts.

mod config;
mod run;

pub use config::{Budgets, ProviderConfig, ProviderMode, RunConfig};
pub use run::{run_offline, run_offline_with, run_online, run_online_with, RunDir, RunOutcome, RunReport, Termination};
