//! Experiment engine: seeded sweeps over channels, SNR thresholds and
//! methods, with CSV outputs and a JSON run manifest.
//!
//! Files written under the output directory:
//!
//! | file | command | contents |
//! |---|---|---|
//! | `design.csv` | design | one [`ResultRow`] per (method, gamma, channel) |
//! | `design_timing.csv` | design | wall-clock solve time per row |
//! | `design-stamp.json` | design | settings the rows in `design.csv` were solved under |
//! | `satisfaction.csv` | validate | per-channel satisfaction rates |
//! | `histogram.csv` | validate | satisfaction bin counts |
//! | `summary.csv` | validate | mean and minimum satisfaction, outage events |
//! | `mismatch_*.csv` | mismatch | the three validate files under mismatched statistics |
//! | `tables.csv` | tables | feasibility and rank statistics |
//! | `power.csv` | tables | mean extracted power on commonly feasible channels |
//! | `tightness.csv` | tightness | dominance sweep summary |
//! | `manifest-<command>.json` | all | config, seeds and crate version |

mod commands;
mod config;
mod rows;

pub use commands::{
    cmd_design, cmd_mismatch, cmd_tables, cmd_tightness, cmd_validate, histogram, satisfaction_bin,
    HistogramRow, MismatchSummary, PowerRow, SatisfactionRow, TableRow, TightnessRow, BIN_LABELS,
};
pub use config::{db_to_linear, ExperimentConfig, Mismatch, TightnessConfig};
pub use rows::{read_rows, ResultRow, RowKey, TimingRow};
