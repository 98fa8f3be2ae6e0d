//! Experiment harness: TOML configuration, drivers for each experiment suite,
//! CSV and SVG artifacts, and a manifest per output directory.

pub mod config;
pub mod emit;
pub mod manifest;
pub mod plot;
pub mod run;

pub use config::ExperimentConfig;
pub use emit::emit_plots;
pub use manifest::Manifest;
pub use run::{
    analytic_sweep, grid_search_interval, run_sampling, simulate, sweep_gamma_steps,
    sweep_initial_time, train_score, Setting,
};
