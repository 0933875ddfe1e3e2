//! Run configuration: a line-oriented `key = value unit` format with
//! `[section]` headers and `#` comments.
//!
//! Every value is converted to SI on load. [`emit_config`] writes SI values
//! back out so that loading the emitted text reproduces the configuration.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use biofet_core::noise::LodSearch;
use biofet_core::physchem;
use biofet_core::stosim::{CapacitanceModel, Engine, InterfererSpecies, NoiseFlags};
use biofet_core::{Band, ChannelDoping, ChargeSign, Environment, LigandReceptorPair, Receiver, SignalReference, TransducerConfig};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

fn at(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError::Parse {
        line,
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Response,
    Sensitivity,
    Snr,
    Lod,
    Simulate,
    Validate,
}

impl Mode {
    pub const ALL: [Mode; 6] = [Mode::Response, Mode::Sensitivity, Mode::Snr, Mode::Lod, Mode::Simulate, Mode::Validate];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Response => "response",
            Mode::Sensitivity => "sensitivity",
            Mode::Snr => "snr",
            Mode::Lod => "lod",
            Mode::Simulate => "simulate",
            Mode::Validate => "validate",
        }
    }
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown mode `{s}`"))
    }
}

/// Physical dimension of a configuration value, which fixes the accepted units.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Dimensionless,
    Temperature,
    Length,
    IonicConcentration,
    MolecularConcentration,
    AssociationRate,
    DissociationRate,
    Capacitance,
    CapacitancePerArea,
    AreaDensity,
    Mobility,
    Voltage,
    TrapDensity,
    Resistance,
    Frequency,
    Time,
}

impl Kind {
    /// Unit written by [`emit_config`].
    pub fn si_unit(self) -> &'static str {
        match self {
            Kind::Dimensionless => "",
            Kind::Temperature => "K",
            Kind::Length => "m",
            Kind::IonicConcentration => "mol/m3",
            Kind::MolecularConcentration => "/m3",
            Kind::AssociationRate => "m3/s",
            Kind::DissociationRate => "/s",
            Kind::Capacitance => "F",
            Kind::CapacitancePerArea => "F/m2",
            Kind::AreaDensity => "/m2",
            Kind::Mobility => "m2/Vs",
            Kind::Voltage => "V",
            Kind::TrapDensity => "/eV/m3",
            Kind::Resistance => "ohm",
            Kind::Frequency => "Hz",
            Kind::Time => "s",
        }
    }

    /// Factor converting a value in `unit` to SI; `None` if the unit does not fit.
    pub fn factor(self, unit: &str) -> Option<f64> {
        let molar = |scale: f64| physchem::molar_to_molecules(scale);
        let f = match (self, unit) {
            // a bare number is taken as SI
            (_, "") => 1.0,
            (_, u) if u == self.si_unit() => 1.0,
            (Kind::Length, "mm") => 1e-3,
            (Kind::Length, "um") => 1e-6,
            (Kind::Length, "nm") => 1e-9,
            (Kind::Length, "pm") => 1e-12,
            (Kind::IonicConcentration, "M") => 1e3,
            (Kind::IonicConcentration, "mM") => 1.0,
            (Kind::IonicConcentration, "uM") => 1e-3,
            (Kind::IonicConcentration, "nM") => 1e-6,
            (Kind::MolecularConcentration, "M") => molar(1.0),
            (Kind::MolecularConcentration, "mM") => molar(1e-3),
            (Kind::MolecularConcentration, "uM") => molar(1e-6),
            (Kind::MolecularConcentration, "nM") => molar(1e-9),
            (Kind::MolecularConcentration, "pM") => molar(1e-12),
            (Kind::DissociationRate, "1/s") => 1.0,
            (Kind::Capacitance, "pF") => 1e-12,
            (Kind::Capacitance, "fF") => 1e-15,
            (Kind::Capacitance, "aF") => 1e-18,
            (Kind::Capacitance, "zF") => 1e-21,
            (Kind::CapacitancePerArea, "uF/cm2") => 1e-2,
            (Kind::CapacitancePerArea, "fF/um2") => 1e-3,
            (Kind::AreaDensity, "/cm2") => 1e4,
            (Kind::AreaDensity, "/um2") => 1e12,
            (Kind::Mobility, "cm2/Vs") => 1e-4,
            (Kind::Voltage, "mV") => 1e-3,
            (Kind::TrapDensity, "/eV/cm3") => 1e6,
            (Kind::Resistance, "kohm") => 1e3,
            (Kind::Resistance, "Mohm") => 1e6,
            (Kind::Resistance, "Gohm") => 1e9,
            (Kind::Frequency, "mHz") => 1e-3,
            (Kind::Frequency, "kHz") => 1e3,
            (Kind::Time, "ms") => 1e-3,
            (Kind::Time, "us") => 1e-6,
            _ => return None,
        };
        Some(f)
    }
}

/// A ligand concentration, either absolute or relative to the pair's K_D.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Concentration {
    Absolute(f64),
    OverKd(f64),
}

impl Concentration {
    pub fn resolve(self, kd: f64) -> f64 {
        match self {
            Concentration::Absolute(c) => c,
            Concentration::OverKd(m) => m * kd,
        }
    }

    fn emit(self) -> String {
        match self {
            Concentration::Absolute(c) => format!("{c:e} /m3"),
            Concentration::OverKd(m) => format!("{m:e} KD"),
        }
    }
}

/// Parameters a sweep may vary, named by their configuration keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    C,
    CNorm,
    CIon,
    Temperature,
    EpsR,
    KOn,
    KOff,
    LR,
    Ne,
    CMolR,
    CMolL,
    CR,
    W,
    L,
    TOx,
    EpsOx,
    MuEff,
    VDs,
    CDl,
    CS,
    Nt,
    Lambda,
    RLayer,
}

impl Axis {
    pub const ALL: [Axis; 23] = [
        Axis::C,
        Axis::CNorm,
        Axis::CIon,
        Axis::Temperature,
        Axis::EpsR,
        Axis::KOn,
        Axis::KOff,
        Axis::LR,
        Axis::Ne,
        Axis::CMolR,
        Axis::CMolL,
        Axis::CR,
        Axis::W,
        Axis::L,
        Axis::TOx,
        Axis::EpsOx,
        Axis::MuEff,
        Axis::VDs,
        Axis::CDl,
        Axis::CS,
        Axis::Nt,
        Axis::Lambda,
        Axis::RLayer,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Axis::C => "c",
            Axis::CNorm => "c_norm",
            Axis::CIon => "c_ion",
            Axis::Temperature => "T",
            Axis::EpsR => "eps_r",
            Axis::KOn => "k_on",
            Axis::KOff => "k_off",
            Axis::LR => "L_R",
            Axis::Ne => "N_e",
            Axis::CMolR => "C_mol_R",
            Axis::CMolL => "C_mol_L",
            Axis::CR => "c_R",
            Axis::W => "W",
            Axis::L => "L",
            Axis::TOx => "t_ox",
            Axis::EpsOx => "eps_ox",
            Axis::MuEff => "mu_eff",
            Axis::VDs => "V_DS",
            Axis::CDl => "C_dl",
            Axis::CS => "C_s",
            Axis::Nt => "N_t",
            Axis::Lambda => "lambda",
            Axis::RLayer => "R_layer",
        }
    }

    pub fn kind(self) -> Kind {
        match self {
            Axis::C => Kind::MolecularConcentration,
            Axis::CNorm | Axis::EpsR | Axis::Ne | Axis::EpsOx => Kind::Dimensionless,
            Axis::CIon => Kind::IonicConcentration,
            Axis::Temperature => Kind::Temperature,
            Axis::KOn => Kind::AssociationRate,
            Axis::KOff => Kind::DissociationRate,
            Axis::LR | Axis::W | Axis::L | Axis::TOx | Axis::Lambda => Kind::Length,
            Axis::CMolR | Axis::CMolL => Kind::Capacitance,
            Axis::CR => Kind::AreaDensity,
            Axis::MuEff => Kind::Mobility,
            Axis::VDs => Kind::Voltage,
            Axis::CDl | Axis::CS => Kind::CapacitancePerArea,
            Axis::Nt => Kind::TrapDensity,
            Axis::RLayer => Kind::Resistance,
        }
    }

    /// Column label with unit annotation, e.g. `c_ion[mol/m3]`.
    pub fn column(self) -> String {
        match self.kind().si_unit() {
            "" => format!("{}[1]", self.key()),
            u => format!("{}[{u}]", self.key()),
        }
    }

    /// Sets this parameter on `cfg`; concentration axes set the signal level.
    pub fn apply(self, cfg: &mut RunConfig, v: f64) {
        let (env, pair, tr) = (&mut cfg.environment, &mut cfg.pair, &mut cfg.transducer);
        match self {
            Axis::C => cfg.signal.concentration = Concentration::Absolute(v),
            Axis::CNorm => cfg.signal.concentration = Concentration::OverKd(v),
            Axis::CIon => env.ionic_concentration = v,
            Axis::Temperature => env.temperature = v,
            Axis::EpsR => env.relative_permittivity = v,
            Axis::KOn => pair.k_on = v,
            Axis::KOff => pair.k_off = v,
            Axis::LR => pair.receptor_length = v,
            Axis::Ne => pair.electrons_per_ligand = v,
            Axis::CMolR => pair.receptor_capacitance = v,
            Axis::CMolL => pair.ligand_capacitance = v,
            Axis::CR => cfg.receptor_density = v,
            Axis::W => tr.width = v,
            Axis::L => tr.length = v,
            Axis::TOx => tr.oxide_thickness = v,
            Axis::EpsOx => tr.oxide_rel_permittivity = v,
            Axis::MuEff => tr.effective_mobility = v,
            Axis::VDs => tr.drain_source_voltage = v,
            Axis::CDl => tr.dl_capacitance_per_area = v,
            Axis::CS => tr.semiconductor_capacitance_per_area = v,
            Axis::Nt => tr.trap_density = v,
            Axis::Lambda => tr.tunneling_distance = v,
            Axis::RLayer => tr.layer_resistance = v,
        }
    }

    pub fn is_concentration(self) -> bool {
        matches!(self, Axis::C | Axis::CNorm)
    }
}

impl FromStr for Axis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Axis::ALL.into_iter().find(|a| a.key() == s).ok_or_else(|| {
            let names: Vec<&str> = Axis::ALL.iter().map(|a| a.key()).collect();
            format!("unknown sweep axis `{s}` (expected one of {})", names.join(", "))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

impl Scale {
    fn name(self) -> &'static str {
        match self {
            Scale::Linear => "linear",
            Scale::Log => "log",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Family {
    pub axis: Axis,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: Axis,
    pub scale: Scale,
    pub grid: Vec<f64>,
    pub family: Option<Family>,
}

impl SweepSpec {
    pub fn new(axis: Axis, scale: Scale, start: f64, stop: f64, points: usize) -> Self {
        SweepSpec {
            axis,
            scale,
            grid: make_grid(scale, start, stop, points),
            family: None,
        }
    }

    pub fn with_family(mut self, axis: Axis, values: Vec<f64>) -> Self {
        self.family = Some(Family { axis, values });
        self
    }
}

pub fn make_grid(scale: Scale, start: f64, stop: f64, points: usize) -> Vec<f64> {
    if points <= 1 {
        return vec![start];
    }
    (0..points)
        .map(|i| {
            let t = i as f64 / (points - 1) as f64;
            match scale {
                Scale::Linear => start + (stop - start) * t,
                Scale::Log => (start.ln() + (stop.ln() - start.ln()) * t).exp(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalSpec {
    pub concentration: Concentration,
    pub reference: SignalReference,
}

impl Default for SignalSpec {
    fn default() -> Self {
        SignalSpec {
            concentration: Concentration::OverKd(4.0),
            reference: SignalReference::Deviation,
        }
    }
}

pub const DEFAULT_SEED: u64 = 20160;

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub mode: Option<Mode>,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub lod: LodSearch,
}

impl Default for RunSpec {
    fn default() -> Self {
        RunSpec {
            mode: None,
            seed: DEFAULT_SEED,
            output: None,
            lod: LodSearch::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Initial {
    Empty,
    #[default]
    Steady,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateSpec {
    /// Message levels of a single trace
    pub levels: Vec<Concentration>,
    pub symbol_rate: f64,
    /// Time step; defaults to a tenth of the fastest binding timescale
    pub dt: Option<f64>,
    pub engine: Engine,
    pub capacitance: CapacitanceModel,
    pub noise: NoiseFlags,
    pub initial: Initial,
    /// CSK alphabet; when set, `simulate` estimates the symbol error rate
    pub alphabet: Vec<Concentration>,
    pub symbols: usize,
}

impl Default for SimulateSpec {
    fn default() -> Self {
        SimulateSpec {
            levels: vec![Concentration::OverKd(4.0)],
            symbol_rate: 1.0,
            dt: None,
            engine: Engine::Aggregated,
            capacitance: CapacitanceModel::MessageMean,
            noise: NoiseFlags::ALL,
            initial: Initial::Steady,
            alphabet: Vec::new(),
            symbols: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidateSpec {
    /// Ligand levels as multiples of K_D
    pub concentrations: Vec<f64>,
    /// Trace length in binding timescales
    pub length: f64,
    pub mean_sigma: f64,
    pub variance_rel: f64,
    pub tau_rel: f64,
    pub psd_rel: f64,
}

impl Default for ValidateSpec {
    fn default() -> Self {
        ValidateSpec {
            concentrations: vec![1.0, 4.0],
            length: 1e4,
            mean_sigma: 3.0,
            variance_rel: 0.10,
            tau_rel: 0.10,
            psd_rel: 0.20,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub environment: Environment,
    pub pair: LigandReceptorPair,
    pub receptor_density: f64,
    pub transducer: TransducerConfig,
    pub signal: SignalSpec,
    pub band: Band,
    pub sweep: Option<SweepSpec>,
    pub run: RunSpec,
    pub simulate: SimulateSpec,
    pub validate: ValidateSpec,
    pub interferers: Vec<InterfererSpecies>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            environment: Environment::table1(),
            pair: LigandReceptorPair::table1(),
            receptor_density: 2e16,
            transducer: TransducerConfig::table1(),
            signal: SignalSpec::default(),
            band: Band::default(),
            sweep: None,
            run: RunSpec::default(),
            simulate: SimulateSpec::default(),
            validate: ValidateSpec::default(),
            interferers: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn receiver(&self) -> biofet_core::Result<Receiver> {
        Receiver::new(self.environment, self.pair, self.receptor_density, self.transducer)
    }

    pub fn signal_concentration(&self) -> f64 {
        self.signal
            .concentration
            .resolve(biofet_core::kinetics::dissociation_constant(&self.pair))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: biofet_core::ModelError| ConfigError::Invalid(e.to_string());
        self.receiver().map_err(invalid)?;
        self.band.validate().map_err(invalid)?;
        for i in &self.interferers {
            i.validate().map_err(invalid)?;
        }
        if let Some(sweep) = &self.sweep {
            check_grid(&sweep.grid).map_err(|m| ConfigError::Invalid(format!("sweep grid {m}")))?;
            if let Some(f) = &sweep.family {
                check_grid(&f.values).map_err(|m| ConfigError::Invalid(format!("family values {m}")))?;
            }
        }
        if !(self.simulate.symbol_rate > 0.0 && self.simulate.symbol_rate.is_finite()) {
            return Err(ConfigError::Invalid("symbol_rate must be > 0".into()));
        }
        let v = &self.validate;
        if v.concentrations.is_empty() || v.concentrations.iter().any(|c| !(*c > 0.0)) {
            return Err(ConfigError::Invalid("validate concentrations must be non-empty and > 0".into()));
        }
        Ok(())
    }
}

fn check_grid(grid: &[f64]) -> Result<(), String> {
    if grid.is_empty() {
        return Err("is empty".into());
    }
    if grid.iter().any(|v| !v.is_finite()) {
        return Err("has non-finite values".into());
    }
    let up = grid.windows(2).all(|w| w[1] > w[0]);
    let down = grid.windows(2).all(|w| w[1] < w[0]);
    if !(up || down) {
        return Err("is not strictly monotone".into());
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Environment,
    Pair,
    Layer,
    Transducer,
    Signal,
    Band,
    Sweep,
    Run,
    Simulate,
    Validate,
    Interferer,
}

impl Section {
    fn parse(name: &str) -> Option<Section> {
        Some(match name {
            "environment" => Section::Environment,
            "pair" => Section::Pair,
            "layer" => Section::Layer,
            "transducer" => Section::Transducer,
            "signal" => Section::Signal,
            "band" => Section::Band,
            "sweep" => Section::Sweep,
            "run" => Section::Run,
            "simulate" => Section::Simulate,
            "validate" => Section::Validate,
            "interferer" => Section::Interferer,
            _ => return None,
        })
    }

    fn home_of(key: &str) -> Option<Section> {
        use Section::*;
        Some(match key {
            "c_ion" | "T" | "eps_r" => Environment,
            "k_on" | "k_off" | "L_R" | "N_e" | "C_mol_R" | "C_mol_L" | "charge_sign" => Pair,
            "c_R" => Layer,
            "W" | "L" | "t_ox" | "eps_ox" | "mu_eff" | "V_DS" | "C_dl" | "C_s" | "N_t" | "lambda" | "R_layer" | "V_GS"
            | "V_TH0" | "channel" => Transducer,
            "c" | "reference" => Signal,
            "f_min" | "f_max" => Band,
            "axis" | "start" | "stop" | "points" | "scale" | "values" | "family" | "family_values" => Sweep,
            "seed" | "output" | "mode" | "lod_threshold" | "lod_lo" | "lod_hi" | "lod_points" => Run,
            "levels" | "symbol_rate" | "dt" | "engine" | "capacitance" | "thermal" | "flicker" | "initial" | "alphabet"
            | "symbols" => Simulate,
            "concentrations" | "length" | "mean_sigma" | "variance_rel" | "tau_rel" | "psd_rel" => Validate,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Bound {
    Any,
    Positive,
    NonNegative,
    AtLeastOne,
}

struct Value<'a> {
    text: &'a str,
    line: usize,
    key: &'a str,
}

impl<'a> Value<'a> {
    fn split(item: &str) -> (&str, &str) {
        let item = item.trim();
        match item.find(char::is_whitespace) {
            Some(i) => (&item[..i], item[i..].trim()),
            None => (item, ""),
        }
    }

    fn number(&self, token: &str) -> Result<f64, ConfigError> {
        token
            .parse::<f64>()
            .map_err(|_| at(self.line, format!("{} = {}: `{token}` is not a number", self.key, self.text)))
    }

    fn check(&self, v: f64, bound: Bound) -> Result<f64, ConfigError> {
        let ok = v.is_finite()
            && match bound {
                Bound::Any => true,
                Bound::Positive => v > 0.0,
                Bound::NonNegative => v >= 0.0,
                Bound::AtLeastOne => v >= 1.0,
            };
        if ok {
            return Ok(v);
        }
        let rule = match bound {
            Bound::Any => "must be finite",
            Bound::Positive => "must be > 0",
            Bound::NonNegative => "must be >= 0",
            Bound::AtLeastOne => "must be >= 1",
        };
        Err(at(self.line, format!("{} = {}: {rule}", self.key, self.text)))
    }

    fn convert(&self, number: &str, unit: &str, kind: Kind) -> Result<f64, ConfigError> {
        let v = self.number(number)?;
        let factor = kind.factor(unit).ok_or_else(|| {
            at(
                self.line,
                format!("{} = {}: unit `{unit}` does not fit (expected {})", self.key, self.text, describe_units(kind)),
            )
        })?;
        Ok(v * factor)
    }

    fn scalar(&self, kind: Kind, bound: Bound) -> Result<f64, ConfigError> {
        let (n, u) = Self::split(self.text);
        let v = self.convert(n, u, kind)?;
        self.check(v, bound)
    }

    fn list(&self, kind: Kind, bound: Bound) -> Result<Vec<f64>, ConfigError> {
        let items: Vec<&str> = self.text.split(',').map(str::trim).collect();
        let trailing = Self::split(items.last().copied().unwrap_or("")).1;
        items
            .iter()
            .map(|item| {
                let (n, u) = Self::split(item);
                let u = if u.is_empty() { trailing } else { u };
                let v = self.convert(n, u, kind)?;
                self.check(v, bound)
            })
            .collect()
    }

    fn concentration(&self, item: &str) -> Result<Concentration, ConfigError> {
        let (n, u) = Self::split(item);
        if u == "KD" {
            return Ok(Concentration::OverKd(self.check(self.number(n)?, Bound::NonNegative)?));
        }
        let v = self.convert(n, u, Kind::MolecularConcentration)?;
        Ok(Concentration::Absolute(self.check(v, Bound::NonNegative)?))
    }

    fn concentrations(&self) -> Result<Vec<Concentration>, ConfigError> {
        let items: Vec<&str> = self.text.split(',').map(str::trim).collect();
        let trailing = Self::split(items.last().copied().unwrap_or("")).1.to_string();
        items
            .iter()
            .map(|item| {
                let (n, u) = Self::split(item);
                if u.is_empty() && !trailing.is_empty() {
                    self.concentration(&format!("{n} {trailing}"))
                } else {
                    self.concentration(item)
                }
            })
            .collect()
    }

    fn count(&self) -> Result<usize, ConfigError> {
        self.text
            .parse::<usize>()
            .map_err(|_| at(self.line, format!("{} = {}: expected a non-negative integer", self.key, self.text)))
    }

    fn flag(&self) -> Result<bool, ConfigError> {
        match self.text {
            "true" | "on" | "yes" => Ok(true),
            "false" | "off" | "no" => Ok(false),
            _ => Err(at(self.line, format!("{} = {}: expected true or false", self.key, self.text))),
        }
    }

    fn choice<T: Copy>(&self, options: &[(&str, T)]) -> Result<T, ConfigError> {
        options.iter().find(|(n, _)| *n == self.text).map(|(_, v)| *v).ok_or_else(|| {
            let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
            at(self.line, format!("{} = {}: expected one of {}", self.key, self.text, names.join(", ")))
        })
    }
}

fn describe_units(kind: Kind) -> String {
    let candidates = [
        "", "K", "m", "mm", "um", "nm", "pm", "mol/m3", "M", "mM", "uM", "nM", "pM", "/m3", "m3/s", "/s", "1/s", "F", "pF",
        "fF", "aF", "zF", "F/m2", "uF/cm2", "fF/um2", "/m2", "/cm2", "/um2", "m2/Vs", "cm2/Vs", "V", "mV", "/eV/m3",
        "/eV/cm3", "ohm", "kohm", "Mohm", "Gohm", "Hz", "mHz", "kHz", "s", "ms", "us",
    ];
    let fits: Vec<&str> = candidates
        .iter()
        .copied()
        .filter(|u| !u.is_empty() && kind.factor(u).is_some())
        .collect();
    if fits.is_empty() {
        "no unit".into()
    } else {
        fits.join(", ")
    }
}

#[derive(Default)]
struct SweepDraft {
    axis: Option<(Axis, usize)>,
    raw: Vec<(String, String, usize)>,
}

const CHANNELS: [(&str, ChannelDoping); 2] = [("p", ChannelDoping::PType), ("n", ChannelDoping::NType)];
const SIGNS: [(&str, ChargeSign); 2] = [("negative", ChargeSign::Negative), ("positive", ChargeSign::Positive)];
const REFERENCES: [(&str, SignalReference); 2] = [
    ("deviation", SignalReference::Deviation),
    ("absolute", SignalReference::Absolute),
];
const SCALES: [(&str, Scale); 2] = [("linear", Scale::Linear), ("log", Scale::Log)];
const ENGINES: [(&str, Engine); 3] = [
    ("aggregated", Engine::Aggregated),
    ("per_receptor", Engine::PerReceptor),
    ("mean_field", Engine::MeanField),
];
const CAPACITANCES: [(&str, CapacitanceModel); 2] = [
    ("message_mean", CapacitanceModel::MessageMean),
    ("instantaneous", CapacitanceModel::Instantaneous),
];
const INITIALS: [(&str, Initial); 2] = [("empty", Initial::Empty), ("steady", Initial::Steady)];

fn name_of<T: PartialEq + Copy>(options: &[(&'static str, T)], v: T) -> &'static str {
    options.iter().find(|(_, x)| *x == v).map(|(n, _)| *n).expect("every variant has a name")
}

fn default_interferer() -> InterfererSpecies {
    let pair = LigandReceptorPair::table1();
    InterfererSpecies {
        concentration: 0.0,
        k_on: pair.k_on,
        k_off: pair.k_off,
        electrons: pair.electrons_per_ligand,
        receptor_length_equivalent: pair.receptor_length,
        charge_sign: pair.charge_sign,
    }
}

/// Parses configuration text over `base`; keys absent from the text keep their base values.
pub fn parse_config_onto(base: RunConfig, text: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = base;
    let mut section: Option<Section> = None;
    let mut sweep = SweepDraft::default();
    let mut sweep_touched = false;

    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| at(line, format!("malformed section header `{content}`")))?
                .trim();
            let s = Section::parse(name).ok_or_else(|| at(line, format!("unknown section `[{name}]`")))?;
            if s == Section::Interferer {
                cfg.interferers.push(default_interferer());
            }
            section = Some(s);
            continue;
        }
        let (key, text) = content
            .split_once('=')
            .ok_or_else(|| at(line, format!("expected `key = value`, got `{content}`")))?;
        let (key, text) = (key.trim(), text.trim());
        if text.is_empty() {
            return Err(at(line, format!("{key}: missing value")));
        }
        let target = match section {
            Some(Section::Interferer) => Section::Interferer,
            Some(s) => {
                if Section::home_of(key) != Some(s) {
                    return Err(at(line, format!("unknown key `{key}` in this section")));
                }
                s
            }
            None => Section::home_of(key).ok_or_else(|| at(line, format!("unknown key `{key}`")))?,
        };
        let v = Value { text, line, key };
        apply(&mut cfg, target, &v, &mut sweep, &mut sweep_touched)?;
    }

    if sweep_touched {
        cfg.sweep = Some(finish_sweep(cfg.sweep.take(), sweep)?);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn apply(
    cfg: &mut RunConfig,
    section: Section,
    v: &Value,
    sweep: &mut SweepDraft,
    sweep_touched: &mut bool,
) -> Result<(), ConfigError> {
    use Bound::*;
    let unknown = || at(v.line, format!("unknown key `{}` in this section", v.key));
    match section {
        Section::Environment => match v.key {
            "c_ion" => cfg.environment.ionic_concentration = v.scalar(Kind::IonicConcentration, Positive)?,
            "T" => cfg.environment.temperature = v.scalar(Kind::Temperature, Positive)?,
            "eps_r" => cfg.environment.relative_permittivity = v.scalar(Kind::Dimensionless, AtLeastOne)?,
            _ => return Err(unknown()),
        },
        Section::Pair => match v.key {
            "k_on" => cfg.pair.k_on = v.scalar(Kind::AssociationRate, Positive)?,
            "k_off" => cfg.pair.k_off = v.scalar(Kind::DissociationRate, Positive)?,
            "L_R" => cfg.pair.receptor_length = v.scalar(Kind::Length, Positive)?,
            "N_e" => cfg.pair.electrons_per_ligand = v.scalar(Kind::Dimensionless, NonNegative)?,
            "C_mol_R" => cfg.pair.receptor_capacitance = v.scalar(Kind::Capacitance, Positive)?,
            "C_mol_L" => cfg.pair.ligand_capacitance = v.scalar(Kind::Capacitance, Positive)?,
            "charge_sign" => cfg.pair.charge_sign = v.choice(&SIGNS)?,
            _ => return Err(unknown()),
        },
        Section::Layer => match v.key {
            "c_R" => cfg.receptor_density = v.scalar(Kind::AreaDensity, Positive)?,
            _ => return Err(unknown()),
        },
        Section::Transducer => {
            let t = &mut cfg.transducer;
            match v.key {
                "W" => t.width = v.scalar(Kind::Length, Positive)?,
                "L" => t.length = v.scalar(Kind::Length, Positive)?,
                "t_ox" => t.oxide_thickness = v.scalar(Kind::Length, Positive)?,
                "eps_ox" => t.oxide_rel_permittivity = v.scalar(Kind::Dimensionless, AtLeastOne)?,
                "mu_eff" => t.effective_mobility = v.scalar(Kind::Mobility, Positive)?,
                "V_DS" => t.drain_source_voltage = v.scalar(Kind::Voltage, Positive)?,
                "C_dl" => t.dl_capacitance_per_area = v.scalar(Kind::CapacitancePerArea, Positive)?,
                "C_s" => t.semiconductor_capacitance_per_area = v.scalar(Kind::CapacitancePerArea, Positive)?,
                "N_t" => t.trap_density = v.scalar(Kind::TrapDensity, NonNegative)?,
                "lambda" => t.tunneling_distance = v.scalar(Kind::Length, Positive)?,
                "R_layer" => t.layer_resistance = v.scalar(Kind::Resistance, Positive)?,
                "V_GS" => t.gate_source_voltage = Some(v.scalar(Kind::Voltage, Any)?),
                "V_TH0" => t.threshold_voltage = v.scalar(Kind::Voltage, Any)?,
                "channel" => t.channel = v.choice(&CHANNELS)?,
                _ => return Err(unknown()),
            }
        }
        Section::Signal => match v.key {
            "c" => cfg.signal.concentration = v.concentration(v.text)?,
            "reference" => cfg.signal.reference = v.choice(&REFERENCES)?,
            _ => return Err(unknown()),
        },
        Section::Band => match v.key {
            "f_min" => cfg.band.f_min = v.scalar(Kind::Frequency, Positive)?,
            "f_max" => cfg.band.f_max = v.scalar(Kind::Frequency, Positive)?,
            _ => return Err(unknown()),
        },
        Section::Sweep => {
            *sweep_touched = true;
            match v.key {
                "axis" => {
                    let axis: Axis = v.text.parse().map_err(|m: String| at(v.line, m))?;
                    sweep.axis = Some((axis, v.line));
                }
                "start" | "stop" | "points" | "scale" | "values" | "family" | "family_values" => {
                    sweep.raw.push((v.key.to_string(), v.text.to_string(), v.line));
                }
                _ => return Err(unknown()),
            }
        }
        Section::Run => match v.key {
            "seed" => {
                cfg.run.seed = v
                    .text
                    .parse()
                    .map_err(|_| at(v.line, format!("seed = {}: expected an unsigned 64-bit integer", v.text)))?
            }
            "output" => cfg.run.output = Some(PathBuf::from(v.text)),
            "mode" => cfg.run.mode = Some(v.text.parse().map_err(|m: String| at(v.line, m))?),
            "lod_threshold" => cfg.run.lod.threshold_db = v.scalar(Kind::Dimensionless, Any)?,
            "lod_lo" => cfg.run.lod.lo_over_kd = v.scalar(Kind::Dimensionless, Positive)?,
            "lod_hi" => cfg.run.lod.hi_over_kd = v.scalar(Kind::Dimensionless, Positive)?,
            "lod_points" => cfg.run.lod.points = v.count()?,
            _ => return Err(unknown()),
        },
        Section::Simulate => {
            let s = &mut cfg.simulate;
            match v.key {
                "levels" => s.levels = v.concentrations()?,
                "symbol_rate" => s.symbol_rate = v.scalar(Kind::Frequency, Positive)?,
                "dt" => s.dt = Some(v.scalar(Kind::Time, Positive)?),
                "engine" => s.engine = v.choice(&ENGINES)?,
                "capacitance" => s.capacitance = v.choice(&CAPACITANCES)?,
                "thermal" => s.noise.thermal = v.flag()?,
                "flicker" => s.noise.flicker = v.flag()?,
                "initial" => s.initial = v.choice(&INITIALS)?,
                "alphabet" => s.alphabet = v.concentrations()?,
                "symbols" => s.symbols = v.count()?,
                _ => return Err(unknown()),
            }
        }
        Section::Validate => {
            let s = &mut cfg.validate;
            match v.key {
                "concentrations" => {
                    s.concentrations = v
                        .concentrations()?
                        .into_iter()
                        .map(|c| match c {
                            Concentration::OverKd(m) => Ok(m),
                            Concentration::Absolute(_) => {
                                Err(at(v.line, "validate concentrations are given as multiples of K_D (unit KD)"))
                            }
                        })
                        .collect::<Result<_, _>>()?
                }
                "length" => s.length = v.scalar(Kind::Dimensionless, Positive)?,
                "mean_sigma" => s.mean_sigma = v.scalar(Kind::Dimensionless, NonNegative)?,
                "variance_rel" => s.variance_rel = v.scalar(Kind::Dimensionless, NonNegative)?,
                "tau_rel" => s.tau_rel = v.scalar(Kind::Dimensionless, NonNegative)?,
                "psd_rel" => s.psd_rel = v.scalar(Kind::Dimensionless, NonNegative)?,
                _ => return Err(unknown()),
            }
        }
        Section::Interferer => {
            let i = cfg.interferers.last_mut().expect("section header pushed an interferer");
            match v.key {
                "concentration" => i.concentration = v.scalar(Kind::MolecularConcentration, NonNegative)?,
                "k_on" => i.k_on = v.scalar(Kind::AssociationRate, Positive)?,
                "k_off" => i.k_off = v.scalar(Kind::DissociationRate, Positive)?,
                "N_e" => i.electrons = v.scalar(Kind::Dimensionless, NonNegative)?,
                "L_R" => i.receptor_length_equivalent = v.scalar(Kind::Length, NonNegative)?,
                "charge_sign" => i.charge_sign = v.choice(&SIGNS)?,
                _ => return Err(unknown()),
            }
        }
    }
    Ok(())
}

fn finish_sweep(previous: Option<SweepSpec>, draft: SweepDraft) -> Result<SweepSpec, ConfigError> {
    let (axis, axis_line) = match (draft.axis, &previous) {
        (Some(a), _) => a,
        (None, Some(p)) => (p.axis, 0),
        (None, None) => {
            let line = draft.raw.first().map_or(0, |r| r.2);
            return Err(at(line, "sweep needs an `axis`"));
        }
    };
    let axis_changed = previous.as_ref().is_none_or(|p| p.axis != axis);
    let mut scale = previous.as_ref().map_or(Scale::Linear, |p| p.scale);
    let mut family = previous.as_ref().and_then(|p| p.family.clone());
    let (mut start, mut stop, mut points, mut values) = (None, None, None, None);
    let mut family_axis: Option<(Axis, usize)> = None;
    let mut family_values: Option<(String, usize)> = None;
    for (key, text, line) in &draft.raw {
        let v = Value { text, line: *line, key };
        match key.as_str() {
            "scale" => scale = v.choice(&SCALES)?,
            "start" => start = Some((text.clone(), *line)),
            "stop" => stop = Some((text.clone(), *line)),
            "points" => points = Some(v.count()?),
            "values" => values = Some((text.clone(), *line)),
            "family" => family_axis = Some((text.parse().map_err(|m: String| at(*line, m))?, *line)),
            "family_values" => family_values = Some((text.clone(), *line)),
            _ => unreachable!("filtered while parsing"),
        }
    }
    let kind = axis.kind();
    let bound = if kind == Kind::Voltage { Bound::Any } else { Bound::Positive };
    let read = |text: &str, line: usize, key: &str| Value { text, line, key }.scalar(kind, bound);
    let grid = match (values, start, stop) {
        (Some((text, line)), None, None) => Value {
            text: &text,
            line,
            key: "values",
        }
        .list(kind, bound)?,
        (Some((_, line)), _, _) => return Err(at(line, "give either `values` or `start`/`stop`, not both")),
        (None, Some((a, la)), Some((b, lb))) => {
            let (lo, hi) = (read(&a, la, "start")?, read(&b, lb, "stop")?);
            let n = points.unwrap_or(if lo == hi { 1 } else { 21 });
            if n == 0 {
                return Err(at(la, "points must be >= 1"));
            }
            make_grid(scale, lo, hi, n)
        }
        (None, Some((_, line)), None) | (None, None, Some((_, line))) => {
            return Err(at(line, "`start` and `stop` must be given together"))
        }
        (None, None, None) => match &previous {
            Some(p) if !axis_changed => p.grid.clone(),
            _ => return Err(at(axis_line, "sweep needs `values` or `start`/`stop`")),
        },
    };
    if let Some((fa, line)) = family_axis {
        let values = match &family_values {
            Some((text, vl)) => {
                let fbound = if fa.kind() == Kind::Voltage { Bound::Any } else { Bound::Positive };
                Value {
                    text,
                    line: *vl,
                    key: "family_values",
                }
                .list(fa.kind(), fbound)?
            }
            None => return Err(at(line, "`family` needs `family_values`")),
        };
        family = Some(Family { axis: fa, values });
    } else if let Some((text, line)) = family_values {
        let Some(f) = family.as_mut() else {
            return Err(at(line, "`family_values` needs `family`"));
        };
        let fbound = if f.axis.kind() == Kind::Voltage { Bound::Any } else { Bound::Positive };
        f.values = Value {
            text: &text,
            line,
            key: "family_values",
        }
        .list(f.axis.kind(), fbound)?;
    }
    Ok(SweepSpec {
        axis,
        scale,
        grid,
        family,
    })
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    parse_config_onto(RunConfig::default(), text)
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    load_config_onto(RunConfig::default(), path)
}

pub fn load_config_onto(base: RunConfig, path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_config_onto(base, &text)
}

fn si(v: f64, kind: Kind) -> String {
    match kind.si_unit() {
        "" => format!("{v:e}"),
        u => format!("{v:e} {u}"),
    }
}

fn si_list(values: &[f64], kind: Kind) -> String {
    let body: Vec<String> = values.iter().map(|v| format!("{v:e}")).collect();
    match kind.si_unit() {
        "" => body.join(", "),
        u => format!("{} {u}", body.join(", ")),
    }
}

fn concentration_list(values: &[Concentration]) -> String {
    values.iter().map(|c| c.emit()).collect::<Vec<_>>().join(", ")
}

/// Canonical text form of `cfg`, all values in SI.
pub fn emit_config(cfg: &RunConfig) -> String {
    let mut out = String::new();
    let e = &cfg.environment;
    let p = &cfg.pair;
    let t = &cfg.transducer;
    let mut w = |s: String| {
        out.push_str(&s);
        out.push('\n');
    };
    w("[environment]".into());
    w(format!("c_ion = {}", si(e.ionic_concentration, Kind::IonicConcentration)));
    w(format!("T = {}", si(e.temperature, Kind::Temperature)));
    w(format!("eps_r = {}", si(e.relative_permittivity, Kind::Dimensionless)));
    w(String::new());
    w("[pair]".into());
    w(format!("k_on = {}", si(p.k_on, Kind::AssociationRate)));
    w(format!("k_off = {}", si(p.k_off, Kind::DissociationRate)));
    w(format!("L_R = {}", si(p.receptor_length, Kind::Length)));
    w(format!("N_e = {}", si(p.electrons_per_ligand, Kind::Dimensionless)));
    w(format!("C_mol_R = {}", si(p.receptor_capacitance, Kind::Capacitance)));
    w(format!("C_mol_L = {}", si(p.ligand_capacitance, Kind::Capacitance)));
    w(format!("charge_sign = {}", name_of(&SIGNS, p.charge_sign)));
    w(String::new());
    w("[layer]".into());
    w(format!("c_R = {}", si(cfg.receptor_density, Kind::AreaDensity)));
    w(String::new());
    w("[transducer]".into());
    w(format!("W = {}", si(t.width, Kind::Length)));
    w(format!("L = {}", si(t.length, Kind::Length)));
    w(format!("t_ox = {}", si(t.oxide_thickness, Kind::Length)));
    w(format!("eps_ox = {}", si(t.oxide_rel_permittivity, Kind::Dimensionless)));
    w(format!("mu_eff = {}", si(t.effective_mobility, Kind::Mobility)));
    w(format!("V_DS = {}", si(t.drain_source_voltage, Kind::Voltage)));
    w(format!("C_dl = {}", si(t.dl_capacitance_per_area, Kind::CapacitancePerArea)));
    w(format!("C_s = {}", si(t.semiconductor_capacitance_per_area, Kind::CapacitancePerArea)));
    w(format!("N_t = {}", si(t.trap_density, Kind::TrapDensity)));
    w(format!("lambda = {}", si(t.tunneling_distance, Kind::Length)));
    w(format!("R_layer = {}", si(t.layer_resistance, Kind::Resistance)));
    if let Some(vgs) = t.gate_source_voltage {
        w(format!("V_GS = {}", si(vgs, Kind::Voltage)));
    }
    w(format!("V_TH0 = {}", si(t.threshold_voltage, Kind::Voltage)));
    w(format!("channel = {}", name_of(&CHANNELS, t.channel)));
    w(String::new());
    w("[signal]".into());
    w(format!("c = {}", cfg.signal.concentration.emit()));
    w(format!("reference = {}", name_of(&REFERENCES, cfg.signal.reference)));
    w(String::new());
    w("[band]".into());
    w(format!("f_min = {}", si(cfg.band.f_min, Kind::Frequency)));
    w(format!("f_max = {}", si(cfg.band.f_max, Kind::Frequency)));
    if let Some(s) = &cfg.sweep {
        w(String::new());
        w("[sweep]".into());
        w(format!("axis = {}", s.axis.key()));
        w(format!("scale = {}", s.scale.name()));
        w(format!("values = {}", si_list(&s.grid, s.axis.kind())));
        if let Some(f) = &s.family {
            w(format!("family = {}", f.axis.key()));
            w(format!("family_values = {}", si_list(&f.values, f.axis.kind())));
        }
    }
    w(String::new());
    w("[run]".into());
    w(format!("seed = {}", cfg.run.seed));
    if let Some(mode) = cfg.run.mode {
        w(format!("mode = {}", mode.name()));
    }
    if let Some(path) = &cfg.run.output {
        w(format!("output = {}", path.display()));
    }
    w(format!("lod_threshold = {:e}", cfg.run.lod.threshold_db));
    w(format!("lod_lo = {:e}", cfg.run.lod.lo_over_kd));
    w(format!("lod_hi = {:e}", cfg.run.lod.hi_over_kd));
    w(format!("lod_points = {}", cfg.run.lod.points));
    let s = &cfg.simulate;
    w(String::new());
    w("[simulate]".into());
    w(format!("levels = {}", concentration_list(&s.levels)));
    w(format!("symbol_rate = {}", si(s.symbol_rate, Kind::Frequency)));
    if let Some(dt) = s.dt {
        w(format!("dt = {}", si(dt, Kind::Time)));
    }
    w(format!("engine = {}", name_of(&ENGINES, s.engine)));
    w(format!("capacitance = {}", name_of(&CAPACITANCES, s.capacitance)));
    w(format!("thermal = {}", s.noise.thermal));
    w(format!("flicker = {}", s.noise.flicker));
    w(format!("initial = {}", name_of(&INITIALS, s.initial)));
    if !s.alphabet.is_empty() {
        w(format!("alphabet = {}", concentration_list(&s.alphabet)));
    }
    w(format!("symbols = {}", s.symbols));
    let v = &cfg.validate;
    w(String::new());
    w("[validate]".into());
    w(format!(
        "concentrations = {}",
        v.concentrations.iter().map(|m| format!("{m:e} KD")).collect::<Vec<_>>().join(", ")
    ));
    w(format!("length = {:e}", v.length));
    w(format!("mean_sigma = {:e}", v.mean_sigma));
    w(format!("variance_rel = {:e}", v.variance_rel));
    w(format!("tau_rel = {:e}", v.tau_rel));
    w(format!("psd_rel = {:e}", v.psd_rel));
    for i in &cfg.interferers {
        w(String::new());
        w("[interferer]".into());
        w(format!("concentration = {}", si(i.concentration, Kind::MolecularConcentration)));
        w(format!("k_on = {}", si(i.k_on, Kind::AssociationRate)));
        w(format!("k_off = {}", si(i.k_off, Kind::DissociationRate)));
        w(format!("N_e = {}", si(i.electrons, Kind::Dimensionless)));
        w(format!("L_R = {}", si(i.receptor_length_equivalent, Kind::Length)));
        w(format!("charge_sign = {}", name_of(&SIGNS, i.charge_sign)));
    }
    out
}
