//! Active/passive portfolio allocation with closed-form optimal weights and a
//! Monte Carlo backtesting engine.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod allocation;
pub mod backtest;
pub mod benchmarks;
pub mod error;
pub mod estimation;
pub mod linalg;
pub mod market;
pub mod parallel;
pub mod portfolio;
pub mod presets;

pub use backtest::{run_backtest, zeta_sweep, SimConfig, Strategy, SweepGrid};
pub use allocation::{OptimalAllocator, Preferences, QRule, Zeta};
pub use benchmarks::{BenchmarkRule, BenchmarkSpec};
pub use error::{Error, Result};
pub use market::{AssetPath, MarketParams};
pub use parallel::Execution;
pub use portfolio::WeightVector;
