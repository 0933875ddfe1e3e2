//! Named configurations for the default receiver and the figure panels.
//!
//! Concentration axes span c/K_D in [0.4, 40], a decade either side of the
//! default signal level of 4 K_D, on 41 log-spaced points.

use crate::config::{Axis, Mode, RunConfig, Scale, SweepSpec};

pub const PRESETS: [&str; 13] = [
    "table1", "fig7a", "fig7b", "fig7c", "fig7d", "fig9a", "fig9b", "fig9c", "fig9d", "fig10a", "fig10b", "fig10c", "fig10d",
];

fn concentration_sweep() -> SweepSpec {
    SweepSpec::new(Axis::CNorm, Scale::Log, 0.4, 40.0, 41)
}

fn with(mode: Mode, sweep: Option<SweepSpec>) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.run.mode = Some(mode);
    cfg.sweep = sweep;
    cfg
}

pub fn preset(name: &str) -> Option<RunConfig> {
    let ne = vec![1.0, 2.0, 4.0, 8.0];
    let ion = vec![1.0, 10.0, 70.0, 150.0];
    let density = vec![2e15, 2e16, 2e17];
    let tox = vec![5e-9, 10e-9, 17.5e-9, 35e-9];
    let lr = vec![1e-9, 2e-9, 4e-9, 8e-9];
    let c = concentration_sweep;
    Some(match name {
        "table1" => RunConfig::default(),
        "fig7a" => with(Mode::Response, Some(c().with_family(Axis::Ne, ne))),
        "fig7b" => with(Mode::Response, Some(c().with_family(Axis::CIon, ion))),
        "fig7c" => with(Mode::Response, Some(c().with_family(Axis::CR, density))),
        "fig7d" => with(Mode::Response, Some(c().with_family(Axis::TOx, tox))),
        "fig9a" => with(Mode::Sensitivity, Some(c())),
        "fig9b" => with(Mode::Sensitivity, Some(c().with_family(Axis::CIon, ion))),
        "fig9c" => with(Mode::Sensitivity, Some(c().with_family(Axis::LR, lr))),
        "fig9d" => with(Mode::Sensitivity, Some(c().with_family(Axis::TOx, tox))),
        "fig10a" => with(Mode::Snr, Some(c())),
        "fig10b" => with(Mode::Snr, Some(SweepSpec::new(Axis::CIon, Scale::Log, 1.0, 700.0, 41))),
        "fig10c" => with(Mode::Snr, Some(SweepSpec::new(Axis::LR, Scale::Linear, 1e-9, 8e-9, 15))),
        "fig10d" => with(Mode::Snr, Some(SweepSpec::new(Axis::Nt, Scale::Log, 1e22, 1e26, 41))),
        _ => return None,
    })
}
