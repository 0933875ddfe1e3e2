//! Command-line front end: configuration files, figure presets, sweeps,
//! stochastic runs and CSV output.

pub mod config;
pub mod presets;
pub mod simulate;
pub mod sweep;
pub mod table;
pub mod validate;

use anyhow::Context;

pub use config::{emit_config, load_config, parse_config, Mode, RunConfig};
pub use table::ResultTable;

/// Starts from a preset (or the defaults) and overlays a configuration file.
pub fn resolve_config(preset: Option<&str>, path: Option<&std::path::Path>) -> anyhow::Result<RunConfig> {
    let base = match preset {
        Some(name) => presets::preset(name).with_context(|| {
            format!("unknown preset `{name}` (available: {})", presets::PRESETS.join(", "))
        })?,
        None => RunConfig::default(),
    };
    match path {
        Some(p) => Ok(config::load_config_onto(base, p)?),
        None => Ok(base),
    }
}

/// Runs `mode` on a resolved configuration.
pub fn execute(mode: Mode, cfg: &RunConfig) -> anyhow::Result<ResultTable> {
    match mode {
        Mode::Response | Mode::Sensitivity | Mode::Snr | Mode::Lod => sweep::run_sweep(cfg, mode),
        Mode::Simulate => simulate::run_simulate(cfg),
        Mode::Validate => Ok(validate::run_validate(cfg)),
    }
}
