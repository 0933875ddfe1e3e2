//! Stochastic-versus-analytic oracle checks.

use biofet_core::kinetics::{self, MessageSchedule};
use biofet_core::stosim::{self, InitialOccupancy, OutputOptions, SimulationOptions};
use biofet_core::{noise, spectral};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::table::{Cell, Provenance, ResultTable, RowError};

pub const COLUMNS: [&str; 7] = [
    "check",
    "c_over_kd[1]",
    "measured",
    "expected",
    "deviation",
    "tolerance",
    "result",
];

struct Check {
    name: &'static str,
    measured: f64,
    expected: f64,
    /// |z| for the mean, relative error otherwise
    deviation: f64,
    tolerance: f64,
}

fn run_level(cfg: &RunConfig, m: f64, seed: u64) -> Result<Vec<Check>, String> {
    let err = |e: biofet_core::ModelError| e.to_string();
    let rx = cfg.receiver().map_err(err)?;
    let spec = &cfg.validate;
    let c = m * rx.dissociation_constant();
    let tau = kinetics::binding_timescale(c, &rx.pair);
    let dt = tau / 10.0;
    let burn = stosim::burn_in(c, &rx.pair);
    let schedule = MessageSchedule::constant(c, spec.length * tau + burn).map_err(err)?;
    let mut options = SimulationOptions::new(dt);
    options.engine = cfg.simulate.engine;
    options.initial = InitialOccupancy::Steady;
    let trace = stosim::simulate_occupancy(&schedule, &rx.pair, &rx.layer, &[], &options, seed).map_err(err)?;
    let trace = stosim::synthesize_output(trace, &rx, &OutputOptions::default()).map_err(err)?;

    let acf = stosim::empirical_acf(&trace, 3.0 * tau, burn).map_err(err)?;
    let skip = (burn / dt).ceil() as usize;
    let n_eff = (trace.len() - skip) as f64 * dt / (2.0 * tau);
    let mean = kinetics::mean_bound_steady(c, &rx.pair, &rx.layer);
    let var = kinetics::bound_variance(c, &rx.pair, &rx.layer);
    let fitted = acf.fitted_timescale(3.0 * tau).map_err(err)?;

    let corner = 1.0 / (2.0 * std::f64::consts::PI * tau);
    let segment = (20.0 / (dt * corner)).ceil() as usize;
    let welch = spectral::welch_psd(&trace.delta_vth[skip..], dt, segment.next_power_of_two()).map_err(err)?;
    let near: Vec<f64> = welch
        .frequencies
        .iter()
        .zip(&welch.values)
        .filter(|(f, _)| (0.9 * corner..=1.1 * corner).contains(*f))
        .map(|(_, v)| *v)
        .collect();
    let psd = near.iter().sum::<f64>() / near.len() as f64;
    let expected_psd = noise::binding_voltage_psd(corner, c, &rx).map_err(err)?;

    let rel = |a: f64, b: f64| (a / b - 1.0).abs();
    Ok(vec![
        Check {
            name: "mean_bound",
            measured: acf.mean,
            expected: mean,
            deviation: (acf.mean - mean).abs() / (var / n_eff).sqrt(),
            tolerance: spec.mean_sigma,
        },
        Check {
            name: "variance",
            measured: acf.variance(),
            expected: var,
            deviation: rel(acf.variance(), var),
            tolerance: spec.variance_rel,
        },
        Check {
            name: "acf_timescale",
            measured: fitted,
            expected: tau,
            deviation: rel(fitted, tau),
            tolerance: spec.tau_rel,
        },
        Check {
            name: "psd_at_corner",
            measured: psd,
            expected: expected_psd,
            deviation: rel(psd, expected_psd),
            tolerance: spec.psd_rel,
        },
    ])
}

/// Runs the oracle checks at each configured ligand level.
pub fn run_validate(cfg: &RunConfig) -> ResultTable {
    let levels = &cfg.validate.concentrations;
    let results: Vec<Result<Vec<Check>, String>> = levels
        .par_iter()
        .enumerate()
        .map(|(i, &m)| run_level(cfg, m, stosim::trace_seed(cfg.run.seed, i as u64)))
        .collect();
    let mut table = ResultTable::new(COLUMNS.iter().map(|s| s.to_string()).collect(), Provenance::of(cfg));
    for (index, (&m, result)) in levels.iter().zip(results).enumerate() {
        match result {
            Ok(checks) => {
                for check in checks {
                    let pass = check.deviation <= check.tolerance;
                    if !pass {
                        table.failed_checks += 1;
                    }
                    table.rows.push(vec![
                        Cell::Text(check.name.into()),
                        Cell::Num(m),
                        Cell::Num(check.measured),
                        Cell::Num(check.expected),
                        Cell::Num(check.deviation),
                        Cell::Num(check.tolerance),
                        Cell::Text(if pass { "pass" } else { "fail" }.into()),
                    ]);
                }
            }
            Err(message) => table.errors.push(RowError { index, message }),
        }
    }
    table
}
