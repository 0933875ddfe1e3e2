//! Trace and symbol-error-rate runs.

use anyhow::{bail, Context};
use biofet_core::kinetics::{self, MessageSchedule};
use biofet_core::stosim::{self, InitialOccupancy, OutputOptions, SerExperiment, SimulationOptions};

use crate::config::{Concentration, Initial, RunConfig};
use crate::table::{Cell, Provenance, ResultTable};

/// Largest step not above a tenth of every binding timescale that divides
/// the symbol duration evenly.
pub fn default_step(cfg: &RunConfig, levels: &[f64]) -> f64 {
    let fastest = levels
        .iter()
        .map(|&c| kinetics::binding_timescale(c, &cfg.pair))
        .chain(cfg.interferers.iter().map(|i| 1.0 / (i.k_on * i.concentration + i.k_off)))
        .fold(f64::INFINITY, f64::min);
    let symbol = 1.0 / cfg.simulate.symbol_rate;
    let steps = (symbol / (0.1 * fastest)).ceil().max(1.0);
    symbol / steps
}

fn resolve(levels: &[Concentration], cfg: &RunConfig) -> Vec<f64> {
    let kd = kinetics::dissociation_constant(&cfg.pair);
    levels.iter().map(|c| c.resolve(kd)).collect()
}

fn options(cfg: &RunConfig, levels: &[f64]) -> SimulationOptions {
    let mut options = SimulationOptions::new(cfg.simulate.dt.unwrap_or_else(|| default_step(cfg, levels)));
    options.engine = cfg.simulate.engine;
    options.initial = match cfg.simulate.initial {
        Initial::Empty => InitialOccupancy::Empty,
        Initial::Steady => InitialOccupancy::Steady,
    };
    options
}

fn output_options(cfg: &RunConfig) -> OutputOptions {
    OutputOptions {
        noise: cfg.simulate.noise,
        capacitance: cfg.simulate.capacitance,
        band: None,
    }
}

fn count_cell(n: f64) -> Cell {
    // mean-field traces carry fractional expected counts
    if n.fract() == 0.0 {
        Cell::Int(n as u64)
    } else {
        Cell::Num(n)
    }
}

pub fn run_simulate(cfg: &RunConfig) -> anyhow::Result<ResultTable> {
    let rx = cfg.receiver()?;
    let provenance = Provenance::of(cfg);
    let sim = &cfg.simulate;

    if !sim.alphabet.is_empty() {
        let alphabet = resolve(&sim.alphabet, cfg);
        let experiment = SerExperiment {
            simulation: options(cfg, &alphabet),
            alphabet,
            symbol_rate: sim.symbol_rate,
            n_symbols: sim.symbols,
            output: output_options(cfg),
            interferers: cfg.interferers.clone(),
            thresholds: None,
        };
        let est = stosim::estimate_ser(&experiment, &rx, cfg.run.seed).context("symbol error rate run")?;
        let columns = ["ser[1]", "ci_low[1]", "ci_high[1]", "errors[1]", "symbols[1]"];
        let mut table = ResultTable::new(columns.iter().map(|s| s.to_string()).collect(), provenance);
        table.rows.push(vec![
            Cell::Num(est.rate),
            Cell::Num(est.ci_low),
            Cell::Num(est.ci_high),
            Cell::Int(est.errors as u64),
            Cell::Int(est.symbols as u64),
        ]);
        return Ok(table);
    }

    if sim.levels.is_empty() {
        bail!("simulate needs `levels` or `alphabet`");
    }
    let levels = resolve(&sim.levels, cfg);
    let schedule = MessageSchedule::new(levels.clone(), sim.symbol_rate, 0.0)?;
    for warning in kinetics::check_symbol_rate(&schedule, &rx.pair) {
        eprintln!(
            "warning: symbol {} lasts {} s but its binding timescale is {} s; samples may not be at steady state",
            warning.symbol_index, warning.symbol_duration, warning.timescale
        );
    }
    let trace = stosim::simulate_occupancy(&schedule, &rx.pair, &rx.layer, &cfg.interferers, &options(cfg, &levels), cfg.run.seed)?;
    let trace = stosim::synthesize_output(trace, &rx, &output_options(cfg))?;

    let mut columns = vec!["time[s]".to_string(), "c[/m3]".to_string(), "n_bound[1]".to_string()];
    columns.extend((1..trace.species.len()).map(|k| format!("n_bound_interferer_{k}[1]")));
    columns.push("delta_vth[V]".into());
    columns.push("delta_ids[A]".into());
    let mut table = ResultTable::new(columns, provenance);
    for k in 0..trace.len() {
        let mut row = vec![Cell::Num(trace.time[k]), Cell::Num(trace.concentration[k])];
        row.extend(trace.n_bound.iter().map(|s| count_cell(s[k])));
        row.push(Cell::Num(trace.delta_vth[k]));
        row.push(Cell::Num(trace.delta_ids[k]));
        table.rows.push(row);
    }
    Ok(table)
}
