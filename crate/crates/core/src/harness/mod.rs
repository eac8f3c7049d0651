//! Configuration, seeded parallel sweeps and report emission.

mod config;
mod csv;
mod figures;
mod seed;
mod sweep;

pub use config::{parse_snr_grid, SimConfig};
pub use csv::{emit_csv, format_significant, render_csv, CSV_HEADER};
pub use figures::{figure_configs, run_figure, Figure};
pub use seed::derive_trial_seed;
pub use sweep::{run_sweep, run_trial, MetricsReport, ReportRow};
