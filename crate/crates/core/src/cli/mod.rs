//! Command-line front end: configuration, subcommands, CSV/SVG emission.

pub mod commands;
pub mod config;
pub mod svg;

pub use commands::run_command;
pub use config::{model_to_config, parse_config, RunConfig, SimConfig};
pub use svg::{emit_svg, PlotStyle, Series};
