//! Configuration loading, sweep orchestration and output writing for the
//! `pulsed-rf` command-line tool.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod plot;
pub mod run;

pub use config::{load_config, parse_config, ConfigError, RunConfig};
pub use plot::emit_plot_script;
pub use run::{analyze, run_point, run_sweep, Manifest, Metadata};
