//! Noise referred to the threshold-voltage node and band-limited SNR.
//!
//! All PSDs here are two-sided and even in `f`; band powers integrate over
//! `[-f_max, -f_min] ∪ [f_min, f_max]`.

use std::f64::consts::PI;

use crate::error::{ModelError, Result};
use crate::kinetics;
use crate::physchem::{Environment, BOLTZMANN, ELEMENTARY_CHARGE};
use crate::quadrature::integrate_log;
use crate::receiver::Receiver;
use crate::transducer::{self, TransducerConfig};

const QUAD_REL_TOL: f64 = 1e-6;

/// Integration band on the positive frequency axis (Hz).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub f_min: f64,
    pub f_max: f64,
}

impl Band {
    pub fn new(f_min: f64, f_max: f64) -> Result<Self> {
        let band = Band { f_min, f_max };
        band.validate()?;
        Ok(band)
    }

    pub fn validate(&self) -> Result<()> {
        if self.f_min.is_finite() && self.f_max.is_finite() && 0.0 < self.f_min && self.f_min < self.f_max {
            Ok(())
        } else {
            Err(ModelError::InvalidParameter {
                name: "band",
                reason: format!("need 0 < f_min < f_max, got [{}, {}]", self.f_min, self.f_max),
            })
        }
    }
}

impl Default for Band {
    fn default() -> Self {
        Band { f_min: 1e-2, f_max: 1e3 }
    }
}

/// A PSD sampled on the non-negative half of a two-sided spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Strictly increasing, non-negative (Hz)
    pub frequencies: Vec<f64>,
    /// Two-sided PSD values (unit²/Hz)
    pub values: Vec<f64>,
    pub band: Band,
}

impl Spectrum {
    pub fn sample<F: Fn(f64) -> Result<f64>>(frequencies: Vec<f64>, psd: F) -> Result<Self> {
        if frequencies.len() < 2 || !frequencies.windows(2).all(|w| w[1] > w[0]) || frequencies[0] < 0.0 {
            return Err(ModelError::InvalidParameter {
                name: "frequencies",
                reason: "need at least two strictly increasing non-negative frequencies".into(),
            });
        }
        let values = frequencies.iter().map(|&f| psd(f)).collect::<Result<Vec<_>>>()?;
        let band = Band {
            f_min: frequencies[0],
            f_max: *frequencies.last().unwrap(),
        };
        Ok(Spectrum {
            frequencies,
            values,
            band,
        })
    }

    /// Log-spaced grid of `points` frequencies covering `band`.
    pub fn log_grid(band: Band, points: usize) -> Vec<f64> {
        let (lo, hi) = (band.f_min.ln(), band.f_max.ln());
        let n = points.max(2);
        (0..n)
            .map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp())
            .collect()
    }

    /// Trapezoidal power over both sides of the stored range.
    pub fn two_sided_power(&self) -> f64 {
        2.0 * self
            .frequencies
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(f, v)| 0.5 * (v[0] + v[1]) * (f[1] - f[0]))
            .sum::<f64>()
    }
}

/// Which current enters the numerator of the SNR.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SignalReference {
    /// The message-induced shift ΔI_DS.
    #[default]
    Deviation,
    /// The full bias current including the shift; needs a gate-source voltage.
    Absolute,
}

/// Band-limited signal and noise powers at one operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseBudget {
    /// Binding noise power on ΔV_TH (V²)
    pub binding_power: f64,
    /// Thermal noise power on ΔV_TH (V²)
    pub thermal_power: f64,
    /// Flicker noise power on ΔV_TH (V²)
    pub flicker_power: f64,
    /// Sum of the three components (V²)
    pub total_power: f64,
    /// Squared signal current across a 1 Ω load (A²)
    pub signal_power: f64,
    /// Noise referred to the channel current (A²)
    pub current_noise_power: f64,
    /// `-inf` when there is no signal
    pub snr_db: f64,
}

/// Threshold-voltage shift caused by one bound ligand, V_m = N_e·q_eff / C_eq (V).
pub fn single_ligand_voltage(c: f64, rx: &Receiver) -> Result<f64> {
    let caps = transducer::capacitances_at(c, rx);
    Ok(rx.charge_per_ligand()? / caps.c_eq)
}

pub fn binding_voltage_psd(f: f64, c: f64, rx: &Receiver) -> Result<f64> {
    let vm = single_ligand_voltage(c, rx)?;
    Ok(kinetics::binding_noise_psd(f, c, &rx.pair, &rx.layer) * vm * vm)
}

/// Unfiltered layer thermal noise 4·k_B·T·R_layer (V²/Hz).
pub fn thermal_floor(rx: &Receiver) -> f64 {
    4.0 * BOLTZMANN * rx.environment.temperature * rx.transducer.layer_resistance
}

/// Corner frequency of the layer RC filter (Hz).
pub fn thermal_corner(c: f64, rx: &Receiver) -> f64 {
    let caps = transducer::capacitances_at(c, rx);
    1.0 / (2.0 * PI * rx.transducer.layer_resistance * caps.c_eq_prime)
}

pub fn thermal_voltage_psd(f: f64, c: f64, rx: &Receiver) -> Result<f64> {
    let caps = transducer::capacitances_at(c, rx);
    let x = 2.0 * PI * rx.transducer.layer_resistance * caps.c_eq_prime * f;
    Ok(thermal_floor(rx) / (1.0 + x * x))
}

/// Coefficient K of the number-fluctuation PSD K/|f| (V²).
pub fn flicker_coefficient(cfg: &TransducerConfig, env: &Environment) -> f64 {
    let c_ox = cfg.oxide_capacitance_per_area();
    // trap density is per eV; dividing by q moves it to per joule
    let traps_per_joule = cfg.trap_density / ELEMENTARY_CHARGE;
    cfg.tunneling_distance * env.thermal_energy() * ELEMENTARY_CHARGE * ELEMENTARY_CHARGE * traps_per_joule
        / (cfg.area() * c_ox * c_ox)
}

pub fn flicker_voltage_psd(f: f64, cfg: &TransducerConfig, env: &Environment) -> Result<f64> {
    if f == 0.0 || !f.is_finite() {
        return Err(ModelError::Singularity(format!(
            "1/f noise is unbounded at f = {f}; the band must exclude 0"
        )));
    }
    Ok(flicker_coefficient(cfg, env) / f.abs())
}

pub fn total_voltage_psd(f: f64, c: f64, rx: &Receiver) -> Result<f64> {
    Ok(binding_voltage_psd(f, c, rx)?
        + thermal_voltage_psd(f, c, rx)?
        + flicker_voltage_psd(f, &rx.transducer, &rx.environment)?)
}

/// Two-sided binding, thermal and flicker powers over `band` (V²).
pub fn band_powers(c: f64, rx: &Receiver, band: Band) -> Result<(f64, f64, f64)> {
    band.validate()?;
    let vm = single_ligand_voltage(c, rx)?;
    let binding = if kinetics::bound_variance(c, &rx.pair, &rx.layer) > 0.0 {
        2.0 * vm * vm
            * integrate_log(
                |f| kinetics::binding_noise_psd(f, c, &rx.pair, &rx.layer),
                band.f_min,
                band.f_max,
                QUAD_REL_TOL,
            )?
    } else {
        0.0
    };
    let floor = thermal_floor(rx);
    let rc = rx.transducer.layer_resistance * transducer::capacitances_at(c, rx).c_eq_prime;
    let thermal = 2.0
        * integrate_log(
            |f| {
                let x = 2.0 * PI * rc * f;
                floor / (1.0 + x * x)
            },
            band.f_min,
            band.f_max,
            QUAD_REL_TOL,
        )?;
    let flicker = 2.0 * flicker_coefficient(&rx.transducer, &rx.environment) * (band.f_max / band.f_min).ln();
    Ok((binding, thermal, flicker))
}

pub fn noise_budget(c: f64, rx: &Receiver, band: Band, reference: SignalReference) -> Result<NoiseBudget> {
    let (binding_power, thermal_power, flicker_power) = band_powers(c, rx, band)?;
    let total_power = binding_power + thermal_power + flicker_power;
    let gm = transducer::transconductance(&rx.transducer);
    let shift = transducer::current_shift(c, rx)?;
    let signal_current = match reference {
        SignalReference::Deviation => shift,
        SignalReference::Absolute => {
            transducer::baseline_current(&rx.transducer)? + transducer::response_direction(&rx.pair, &rx.transducer) * shift
        }
    };
    let signal_power = signal_current * signal_current;
    let current_noise_power = gm * gm * total_power;
    let snr_db = if signal_power > 0.0 {
        10.0 * (signal_power / current_noise_power).log10()
    } else {
        f64::NEG_INFINITY
    };
    Ok(NoiseBudget {
        binding_power,
        thermal_power,
        flicker_power,
        total_power,
        signal_power,
        current_noise_power,
        snr_db,
    })
}

/// SNR of the message-induced current shift over `band` (dB); `-inf` at c = 0.
pub fn snr(c: f64, rx: &Receiver, band: Band) -> Result<f64> {
    Ok(noise_budget(c, rx, band, SignalReference::Deviation)?.snr_db)
}

/// Concentration grid searched for the limit of detection, in units of K_D.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LodSearch {
    pub lo_over_kd: f64,
    pub hi_over_kd: f64,
    pub points: usize,
    pub threshold_db: f64,
}

impl Default for LodSearch {
    fn default() -> Self {
        LodSearch {
            lo_over_kd: 1e-6,
            hi_over_kd: 1e3,
            points: 181,
            threshold_db: 0.0,
        }
    }
}

/// Smallest concentration on the log grid whose SNR reaches the threshold
/// (molecules/m³), or `None` if no grid point does.
pub fn limit_of_detection(rx: &Receiver, band: Band, search: LodSearch) -> Result<Option<f64>> {
    if !(search.lo_over_kd > 0.0 && search.hi_over_kd > search.lo_over_kd && search.points >= 2) {
        return Err(ModelError::InvalidParameter {
            name: "lod_search",
            reason: format!("need 0 < lo < hi and at least 2 points, got {search:?}"),
        });
    }
    let kd = rx.dissociation_constant();
    let (lo, hi) = (search.lo_over_kd.ln(), search.hi_over_kd.ln());
    for i in 0..search.points {
        let c = kd * (lo + (hi - lo) * i as f64 / (search.points - 1) as f64).exp();
        if snr(c, rx, band)? >= search.threshold_db {
            return Ok(Some(c));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate_adaptive;
    use approx::assert_relative_eq;

    fn kd() -> f64 {
        Receiver::table1().dissociation_constant()
    }

    #[test]
    fn binding_psd_examples() {
        let rx = Receiver::table1();
        let c = 4.0 * kd();
        let vm = single_ligand_voltage(c, &rx).unwrap();
        let var = kinetics::bound_variance(c, &rx.pair, &rx.layer);
        let tau = kinetics::binding_timescale(c, &rx.pair);
        assert_relative_eq!(binding_voltage_psd(0.0, c, &rx).unwrap(), var * 2.0 * tau * vm * vm, max_relative = 1e-14);

        let mut long = rx;
        long.pair.receptor_length = 6e-9;
        let ld = rx.debye_length().unwrap();
        let ratio = binding_voltage_psd(2.0, c, &long).unwrap() / binding_voltage_psd(2.0, c, &rx).unwrap();
        assert_relative_eq!(ratio, (-2.0 * 2e-9 / ld).exp(), max_relative = 1e-12);
    }

    #[test]
    fn binding_psd_integrates_to_variance() {
        let rx = Receiver::table1();
        let c = 4.0 * kd();
        let vm = single_ligand_voltage(c, &rx).unwrap();
        let tau = kinetics::binding_timescale(c, &rx.pair);
        let scale = 1.0 / (2.0 * PI * tau);
        let h = std::f64::consts::FRAC_PI_2 - 1e-9;
        let total = integrate_adaptive(
            |u| binding_voltage_psd(scale * u.tan(), c, &rx).unwrap() * scale / u.cos().powi(2),
            -h,
            h,
            1e-9,
        )
        .unwrap();
        let expected = kinetics::bound_variance(c, &rx.pair, &rx.layer) * vm * vm;
        assert_relative_eq!(total, expected, max_relative = 5e-3);
    }

    #[test]
    fn thermal_psd_examples() {
        let rx = Receiver::table1();
        let c = 4.0 * kd();
        let floor = thermal_voltage_psd(0.0, c, &rx).unwrap();
        assert_relative_eq!(floor, 4.0 * BOLTZMANN * 298.0 * 5e10, max_relative = 1e-15);
        assert_relative_eq!(floor, 8.23e-10, max_relative = 1e-3);
        let corner = thermal_corner(c, &rx);
        assert_relative_eq!(thermal_voltage_psd(corner, c, &rx).unwrap(), floor / 2.0, max_relative = 1e-12);
    }

    #[test]
    fn flicker_psd_examples() {
        let rx = Receiver::table1();
        let (cfg, env) = (rx.transducer, rx.environment);
        let at = |f: f64, cfg: &TransducerConfig| flicker_voltage_psd(f, cfg, &env).unwrap();
        assert_relative_eq!(at(2.0, &cfg), at(1.0, &cfg) / 2.0, max_relative = 1e-15);
        assert_eq!(at(-3.0, &cfg), at(3.0, &cfg));
        let mut traps = cfg;
        traps.trap_density *= 2.0;
        assert_relative_eq!(at(5.0, &traps), 2.0 * at(5.0, &cfg), max_relative = 1e-15);
        let mut thick = cfg;
        thick.oxide_thickness *= 2.0;
        assert_relative_eq!(at(5.0, &thick), 4.0 * at(5.0, &cfg), max_relative = 1e-14);
        assert!(matches!(flicker_voltage_psd(0.0, &cfg, &env), Err(ModelError::Singularity(_))));
    }

    #[test]
    fn flicker_quadrature_matches_log_closed_form() {
        let rx = Receiver::table1();
        let band = Band::default();
        let quad = crate::quadrature::integrate_adaptive(
            |f| flicker_voltage_psd(f, &rx.transducer, &rx.environment).unwrap(),
            band.f_min,
            band.f_max,
            1e-9,
        )
        .unwrap();
        let closed = flicker_coefficient(&rx.transducer, &rx.environment) * (band.f_max / band.f_min).ln();
        assert!((quad - closed).abs() / closed < 1e-4);
    }

    #[test]
    fn total_is_component_sum() {
        let rx = Receiver::table1();
        let c = 4.0 * kd();
        let parts = binding_voltage_psd(1.0, c, &rx).unwrap()
            + thermal_voltage_psd(1.0, c, &rx).unwrap()
            + flicker_voltage_psd(1.0, &rx.transducer, &rx.environment).unwrap();
        assert_eq!(total_voltage_psd(1.0, c, &rx).unwrap(), parts);
        for f in Spectrum::log_grid(Band::default(), 50) {
            let t = total_voltage_psd(f, c, &rx).unwrap();
            assert!(t > 0.0);
        }
    }

    #[test]
    fn flicker_dominates_at_low_frequency() {
        let rx = Receiver::table1();
        let c = 4.0 * kd();
        let f = 1e-3;
        let flicker = flicker_voltage_psd(f, &rx.transducer, &rx.environment).unwrap();
        assert!(flicker > binding_voltage_psd(f, c, &rx).unwrap());
        assert!(flicker > thermal_voltage_psd(f, c, &rx).unwrap());
    }

    #[test]
    fn switched_off_sources_leave_flicker() {
        let mut rx = Receiver::table1();
        rx.pair.electrons_per_ligand = 0.0;
        rx.transducer.layer_resistance = 1e-30;
        let c = 4.0 * kd();
        let flicker = flicker_voltage_psd(2.0, &rx.transducer, &rx.environment).unwrap();
        assert_relative_eq!(total_voltage_psd(2.0, c, &rx).unwrap(), flicker, max_relative = 1e-12);
    }

    #[test]
    fn budget_sums_components() {
        let rx = Receiver::table1();
        let budget = noise_budget(4.0 * kd(), &rx, Band::default(), SignalReference::Deviation).unwrap();
        let sum = budget.binding_power + budget.thermal_power + budget.flicker_power;
        assert!((budget.total_power - sum).abs() <= 1e-12 * sum);
        assert!(budget.snr_db.is_finite());
    }

    #[test]
    fn band_powers_match_closed_forms() {
        // Lorentzian and RC-filtered white noise both integrate to arctangents
        let rx = Receiver::table1();
        let c = 4.0 * kd();
        let band = Band::default();
        let (binding, thermal, _) = band_powers(c, &rx, band).unwrap();
        let tau = kinetics::binding_timescale(c, &rx.pair);
        let vm = single_ligand_voltage(c, &rx).unwrap();
        let var = kinetics::bound_variance(c, &rx.pair, &rx.layer);
        let lorentz = |f: f64| var * vm * vm * (2.0 / PI) * (2.0 * PI * f * tau).atan();
        assert_relative_eq!(binding, lorentz(band.f_max) - lorentz(band.f_min), max_relative = 1e-6);
        let fc = thermal_corner(c, &rx);
        let rc = |f: f64| 2.0 * thermal_floor(&rx) * fc * (f / fc).atan();
        assert_relative_eq!(thermal, rc(band.f_max) - rc(band.f_min), max_relative = 1e-6);
    }

    #[test]
    fn zero_concentration_has_no_signal() {
        let rx = Receiver::table1();
        let budget = noise_budget(0.0, &rx, Band::default(), SignalReference::Deviation).unwrap();
        assert_eq!(budget.binding_power, 0.0);
        assert_eq!(budget.snr_db, f64::NEG_INFINITY);
    }

    #[test]
    fn absolute_reference_needs_bias() {
        let mut rx = Receiver::table1();
        let c = 4.0 * kd();
        assert!(noise_budget(c, &rx, Band::default(), SignalReference::Absolute).is_err());
        rx.transducer.gate_source_voltage = Some(1.0);
        let abs = noise_budget(c, &rx, Band::default(), SignalReference::Absolute).unwrap();
        let dev = noise_budget(c, &rx, Band::default(), SignalReference::Deviation).unwrap();
        assert!(abs.signal_power > dev.signal_power);
        assert_eq!(abs.total_power, dev.total_power);
    }

    #[test]
    fn wider_band_never_improves_snr() {
        let rx = Receiver::table1();
        let c = 4.0 * kd();
        let bands = [(1.0, 10.0), (0.1, 10.0), (0.1, 100.0), (1e-2, 1e3), (1e-3, 1e4)];
        let snrs: Vec<f64> = bands
            .iter()
            .map(|&(a, b)| snr(c, &rx, Band::new(a, b).unwrap()).unwrap())
            .collect();
        assert!(snrs.windows(2).all(|w| w[1] <= w[0]));
        assert!(Band::new(0.0, 1.0).is_err());
        assert!(Band::new(2.0, 1.0).is_err());
    }

    #[test]
    fn limit_of_detection_is_first_grid_point_over_threshold() {
        let rx = Receiver::table1();
        let band = Band::default();
        let search = LodSearch::default();
        let lod = limit_of_detection(&rx, band, search).unwrap().expect("default device detects");
        assert!(snr(lod, &rx, band).unwrap() >= 0.0);
        let step = (search.hi_over_kd / search.lo_over_kd).powf(1.0 / (search.points - 1) as f64);
        assert!(snr(lod / step, &rx, band).unwrap() < 0.0);

        let strict = LodSearch { threshold_db: 200.0, ..search };
        assert_eq!(limit_of_detection(&rx, band, strict).unwrap(), None);
    }

    #[test]
    fn spectrum_power_approximates_band_power() {
        let rx = Receiver::table1();
        let c = 4.0 * kd();
        let band = Band::default();
        let spectrum = Spectrum::sample(Spectrum::log_grid(band, 4000), |f| thermal_voltage_psd(f, c, &rx)).unwrap();
        let (_, thermal, _) = band_powers(c, &rx, band).unwrap();
        assert_relative_eq!(spectrum.two_sided_power(), thermal, max_relative = 1e-4);
    }
}
