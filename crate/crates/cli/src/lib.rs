//! Parameter sweeps over the quasi-ECS teleportation pipeline: presets,
//! CSV output and heatmaps.

pub mod config;
pub mod error;
pub mod heatmap;
pub mod output;
pub mod sweep;

pub use config::{Axis, Param, Params, Preset, SweepConfig};
pub use error::{CliError, Result};
pub use heatmap::{contour, render_heatmap, Grid};
pub use output::{emit_csv, format_g, to_csv};
pub use sweep::{run_named, run_preset, ResultRow, Table};
