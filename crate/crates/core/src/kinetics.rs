//! Reaction-limited ligand-receptor binding on the recognition layer.
//!
//! Receptors are independent two-state units exposed to a well-mixed ligand
//! concentration, so the bound count is binomial at steady state and relaxes
//! with a single timescale `1 / (k_on c + k_off)`.

use crate::error::{require_non_negative, require_positive, ModelError, Result};

/// Sign of the net charge carried by a bound ligand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChargeSign {
    #[default]
    Negative,
    Positive,
}

/// Kinetic and electrostatic description of the recognition chemistry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LigandReceptorPair {
    /// Association rate constant (m³/s)
    pub k_on: f64,
    /// Dissociation rate constant (1/s)
    pub k_off: f64,
    /// Receptor length, also the charge distance of a bound ligand (m)
    pub receptor_length: f64,
    /// Mean number of elementary charges per ligand
    pub electrons_per_ligand: f64,
    /// Capacitance of a single receptor molecule (F)
    pub receptor_capacitance: f64,
    /// Capacitance of a single ligand molecule (F)
    pub ligand_capacitance: f64,
    pub charge_sign: ChargeSign,
}

impl LigandReceptorPair {
    /// 4 nm aptamer with a 4e ligand.
    pub fn table1() -> Self {
        LigandReceptorPair {
            k_on: 2e-18,
            k_off: 10.0,
            receptor_length: 4e-9,
            electrons_per_ligand: 4.0,
            receptor_capacitance: 2e-20,
            ligand_capacitance: 2e-20,
            charge_sign: ChargeSign::Negative,
        }
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("k_on", self.k_on)?;
        require_positive("k_off", self.k_off)?;
        require_positive("receptor_length", self.receptor_length)?;
        require_non_negative("electrons_per_ligand", self.electrons_per_ligand)?;
        require_positive("receptor_capacitance", self.receptor_capacitance)?;
        require_positive("ligand_capacitance", self.ligand_capacitance)
    }
}

/// Receptors immobilized over the active area of the transducer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecognitionLayer {
    /// Surface receptor density (1/m²)
    pub receptor_density: f64,
    /// N_R = density × active area; kept real-valued
    pub receptor_count: f64,
}

impl RecognitionLayer {
    pub fn new(receptor_density: f64, active_area: f64) -> Result<Self> {
        require_positive("receptor_density", receptor_density)?;
        require_positive("active_area", active_area)?;
        let receptor_count = receptor_density * active_area;
        if receptor_count < 1.0 {
            return Err(ModelError::InvalidParameter {
                name: "receptor_density",
                reason: format!("fewer than one receptor on the active area ({receptor_count})"),
            });
        }
        Ok(RecognitionLayer {
            receptor_density,
            receptor_count,
        })
    }

    /// Integer receptor population for the stochastic simulator (nearest, at least 1).
    pub fn discrete_count(&self) -> usize {
        (self.receptor_count.round() as usize).max(1)
    }
}

/// Concentration-shift-keyed symbol stream seen by the recognition layer.
///
/// Symbol `i` holds `levels[i]` over `[t_0 + i/B, t_0 + (i+1)/B)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageSchedule {
    /// Ligand concentration per symbol (molecules/m³)
    pub levels: Vec<f64>,
    /// Symbol rate B (1/s)
    pub symbol_rate: f64,
    /// Start of the first symbol (s)
    pub start_time: f64,
}

impl MessageSchedule {
    pub fn new(levels: Vec<f64>, symbol_rate: f64, start_time: f64) -> Result<Self> {
        let schedule = MessageSchedule {
            levels,
            symbol_rate,
            start_time,
        };
        schedule.validate()?;
        Ok(schedule)
    }

    /// A single level held for `duration` seconds.
    pub fn constant(level: f64, duration: f64) -> Result<Self> {
        require_positive("duration", duration)?;
        MessageSchedule::new(vec![level], 1.0 / duration, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(ModelError::InvalidParameter {
                name: "levels",
                reason: "schedule has no symbols".into(),
            });
        }
        for &c in &self.levels {
            require_non_negative("levels", c)?;
        }
        require_positive("symbol_rate", self.symbol_rate)?;
        if !self.start_time.is_finite() {
            return Err(ModelError::InvalidParameter {
                name: "start_time",
                reason: "must be finite".into(),
            });
        }
        Ok(())
    }

    pub fn symbol_duration(&self) -> f64 {
        1.0 / self.symbol_rate
    }

    pub fn duration(&self) -> f64 {
        self.levels.len() as f64 / self.symbol_rate
    }

    pub fn start_times(&self) -> Vec<f64> {
        (0..self.levels.len())
            .map(|i| self.start_time + i as f64 / self.symbol_rate)
            .collect()
    }

    /// Concentration in force at time `t`, if `t` falls inside the schedule.
    pub fn level_at(&self, t: f64) -> Option<f64> {
        let offset = t - self.start_time;
        if offset < 0.0 {
            return None;
        }
        let index = (offset * self.symbol_rate).floor() as usize;
        self.levels.get(index).copied()
    }
}

pub fn dissociation_constant(pair: &LigandReceptorPair) -> f64 {
    pair.k_off / pair.k_on
}

/// Reaction timescale τ_B at concentration `c` (s).
pub fn binding_timescale(c: f64, pair: &LigandReceptorPair) -> f64 {
    1.0 / (pair.k_on * c + pair.k_off)
}

/// Steady-state probability that a receptor is occupied.
pub fn occupancy_probability(c: f64, pair: &LigandReceptorPair) -> f64 {
    let bind = pair.k_on * c;
    bind / (bind + pair.k_off)
}

/// Right-hand side of the mean-field rate equation dN_B/dt.
pub fn occupancy_rate(n_bound: f64, c: f64, pair: &LigandReceptorPair, layer: &RecognitionLayer) -> f64 {
    pair.k_on * c * (layer.receptor_count - n_bound) - pair.k_off * n_bound
}

pub fn mean_bound_steady(c: f64, pair: &LigandReceptorPair, layer: &RecognitionLayer) -> f64 {
    layer.receptor_count * occupancy_probability(c, pair)
}

/// Mean bound count `elapsed` seconds after the concentration stepped to `c`
/// from a state with `prev_bound` occupied receptors.
pub fn mean_bound_transient(
    prev_bound: f64,
    c: f64,
    pair: &LigandReceptorPair,
    layer: &RecognitionLayer,
    elapsed: f64,
) -> f64 {
    let steady = mean_bound_steady(c, pair, layer);
    steady + (prev_bound - steady) * (-elapsed / binding_timescale(c, pair)).exp()
}

pub fn bound_variance(c: f64, pair: &LigandReceptorPair, layer: &RecognitionLayer) -> f64 {
    let bind = pair.k_on * c;
    let total = bind + pair.k_off;
    layer.receptor_count * pair.k_off * bind / (total * total)
}

/// Autocorrelation of the stationary bound-count fluctuations at `lag` seconds.
pub fn binding_acf(lag: f64, c: f64, pair: &LigandReceptorPair, layer: &RecognitionLayer) -> f64 {
    bound_variance(c, pair, layer) * (-lag.abs() / binding_timescale(c, pair)).exp()
}

/// Two-sided Lorentzian PSD of the bound-count fluctuations (count²/Hz).
pub fn binding_noise_psd(f: f64, c: f64, pair: &LigandReceptorPair, layer: &RecognitionLayer) -> f64 {
    let tau = binding_timescale(c, pair);
    let x = 2.0 * std::f64::consts::PI * f * tau;
    bound_variance(c, pair, layer) * 2.0 * tau / (1.0 + x * x)
}

/// Symbols too short for the layer to settle before the steady-state sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SettlingWarning {
    pub symbol_index: usize,
    pub level: f64,
    pub timescale: f64,
    pub symbol_duration: f64,
}

/// Flags every distinct level whose τ_B exceeds a tenth of the symbol duration.
pub fn check_symbol_rate(schedule: &MessageSchedule, pair: &LigandReceptorPair) -> Vec<SettlingWarning> {
    let symbol_duration = schedule.symbol_duration();
    let mut seen: Vec<f64> = Vec::new();
    let mut warnings = Vec::new();
    for (i, &level) in schedule.levels.iter().enumerate() {
        if seen.contains(&level) {
            continue;
        }
        seen.push(level);
        let timescale = binding_timescale(level, pair);
        if symbol_duration < 10.0 * timescale {
            warnings.push(SettlingWarning {
                symbol_index: i,
                level,
                timescale,
                symbol_duration,
            });
        }
    }
    warnings
}

/// Highest symbol rate that still leaves ten binding timescales per symbol
/// for every level in `levels` (1/s).
pub fn temporal_resolution(levels: &[f64], pair: &LigandReceptorPair) -> f64 {
    let slowest = levels
        .iter()
        .map(|&c| binding_timescale(c, pair))
        .fold(0.0, f64::max);
    1.0 / (10.0 * slowest)
}
