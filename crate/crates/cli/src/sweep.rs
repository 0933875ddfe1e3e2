//! Figure-of-merit sweeps over one axis and an optional family axis.

use anyhow::bail;
use biofet_core::{kinetics, noise, transducer, Receiver};
use rayon::prelude::*;

use crate::config::{Axis, Mode, RunConfig};
use crate::table::{Cell, Provenance, ResultTable, RowError};

fn metric_columns(mode: Mode) -> &'static [&'static str] {
    match mode {
        Mode::Response => &["c[/m3]", "c_over_kd[1]", "n_bound[1]", "delta_vt[V]", "delta_ids[A]"],
        Mode::Sensitivity => &["c[/m3]", "c_over_kd[1]", "sensitivity[A*m3]", "sensitivity_per_kd[A]"],
        Mode::Snr => &[
            "c[/m3]",
            "c_over_kd[1]",
            "snr[dB]",
            "signal_power[A2]",
            "binding_power[V2]",
            "thermal_power[V2]",
            "flicker_power[V2]",
            "total_power[V2]",
        ],
        Mode::Lod => &["lod[/m3]", "lod_over_kd[1]"],
        Mode::Simulate | Mode::Validate => &[],
    }
}

/// Column labels for `mode` over the configured sweep.
pub fn columns(cfg: &RunConfig, mode: Mode) -> Vec<String> {
    let mut cols = Vec::new();
    if let Some(sweep) = &cfg.sweep {
        if let Some(f) = &sweep.family {
            cols.push(f.axis.column());
        }
        cols.push(sweep.axis.column());
    }
    cols.extend(metric_columns(mode).iter().map(|s| s.to_string()));
    cols
}

fn evaluate(cfg: &RunConfig, mode: Mode) -> Result<Vec<Cell>, String> {
    let rx: Receiver = cfg.receiver().map_err(|e| e.to_string())?;
    let kd = rx.dissociation_constant();
    let c = cfg.signal_concentration();
    let err = |e: biofet_core::ModelError| e.to_string();
    let cells = match mode {
        Mode::Response => vec![
            Cell::Num(c),
            Cell::Num(c / kd),
            Cell::Num(kinetics::mean_bound_steady(c, &rx.pair, &rx.layer)),
            Cell::Num(transducer::potential_shift(c, &rx).map_err(err)?),
            Cell::Num(transducer::current_shift(c, &rx).map_err(err)?),
        ],
        Mode::Sensitivity => {
            let s = transducer::sensitivity(c, &rx).map_err(err)?;
            vec![Cell::Num(c), Cell::Num(c / kd), Cell::Num(s), Cell::Num(s * kd)]
        }
        Mode::Snr => {
            let b = noise::noise_budget(c, &rx, cfg.band, cfg.signal.reference).map_err(err)?;
            vec![
                Cell::Num(c),
                Cell::Num(c / kd),
                Cell::Num(b.snr_db),
                Cell::Num(b.signal_power),
                Cell::Num(b.binding_power),
                Cell::Num(b.thermal_power),
                Cell::Num(b.flicker_power),
                Cell::Num(b.total_power),
            ]
        }
        Mode::Lod => match noise::limit_of_detection(&rx, cfg.band, cfg.run.lod).map_err(err)? {
            Some(lod) => vec![Cell::Num(lod), Cell::Num(lod / kd)],
            None => {
                return Err(format!(
                    "SNR stays below {} dB over [{:e}, {:e}] K_D",
                    cfg.run.lod.threshold_db, cfg.run.lod.lo_over_kd, cfg.run.lod.hi_over_kd
                ))
            }
        },
        Mode::Simulate | Mode::Validate => unreachable!("not a sweep mode"),
    };
    if cells.iter().any(|c| c.as_f64().is_some_and(|v| !v.is_finite())) {
        return Err("evaluation produced a non-finite value".into());
    }
    Ok(cells)
}

/// Evaluates `mode` at every grid point; failed points become row errors.
pub fn run_sweep(cfg: &RunConfig, mode: Mode) -> anyhow::Result<ResultTable> {
    if !matches!(mode, Mode::Response | Mode::Sensitivity | Mode::Snr | Mode::Lod) {
        bail!("`{}` is not a sweep mode", mode.name());
    }
    let mut points: Vec<(Vec<Cell>, RunConfig)> = Vec::new();
    match &cfg.sweep {
        None => points.push((Vec::new(), cfg.clone())),
        Some(sweep) => {
            if mode == Mode::Lod && (sweep.axis.is_concentration() || sweep.family.as_ref().is_some_and(|f| f.axis.is_concentration())) {
                bail!("limit of detection searches over concentration; sweep another parameter");
            }
            let families: Vec<Option<(Axis, f64)>> = match &sweep.family {
                Some(f) => f.values.iter().map(|&v| Some((f.axis, v))).collect(),
                None => vec![None],
            };
            for family in families {
                for &x in &sweep.grid {
                    let mut point = cfg.clone();
                    let mut labels = Vec::new();
                    if let Some((axis, v)) = family {
                        axis.apply(&mut point, v);
                        labels.push(Cell::Num(v));
                    }
                    sweep.axis.apply(&mut point, x);
                    labels.push(Cell::Num(x));
                    points.push((labels, point));
                }
            }
        }
    }

    let results: Vec<Result<Vec<Cell>, String>> = points.par_iter().map(|(_, p)| evaluate(p, mode)).collect();
    let mut table = ResultTable::new(columns(cfg, mode), Provenance::of(cfg));
    for (index, ((labels, _), result)) in points.into_iter().zip(results).enumerate() {
        match result {
            Ok(cells) => table.rows.push(labels.into_iter().chain(cells).collect()),
            Err(message) => table.errors.push(RowError { index, message }),
        }
    }
    Ok(table)
}
