//! Physical constants, unit conversions and electrostatic screening.
//!
//! Everything is strict SI internally: lengths in m, ionic concentration in
//! mol·m⁻³, ligand concentration in molecules·m⁻³.

use crate::error::{ModelError, Result};

/// Fundamental constants used throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Boltzmann constant (J/K)
    pub boltzmann: f64,
    /// Avogadro constant (1/mol)
    pub avogadro: f64,
    /// Elementary charge (C)
    pub elementary_charge: f64,
    /// Vacuum permittivity (F/m)
    pub vacuum_permittivity: f64,
}

impl PhysicalConstants {
    pub const CODATA_2018: PhysicalConstants = PhysicalConstants {
        boltzmann: 1.380649e-23,
        avogadro: 6.02214076e23,
        elementary_charge: 1.602176634e-19,
        vacuum_permittivity: 8.8541878128e-12,
    };
}

pub const BOLTZMANN: f64 = PhysicalConstants::CODATA_2018.boltzmann;
pub const AVOGADRO: f64 = PhysicalConstants::CODATA_2018.avogadro;
pub const ELEMENTARY_CHARGE: f64 = PhysicalConstants::CODATA_2018.elementary_charge;
pub const VACUUM_PERMITTIVITY: f64 = PhysicalConstants::CODATA_2018.vacuum_permittivity;

/// mol/L (M) to mol/m³.
pub fn molar_to_mol_per_m3(molar: f64) -> f64 {
    molar * 1.0e3
}

/// mol/m³ to molecules/m³.
pub fn mol_per_m3_to_molecules(mol_per_m3: f64) -> f64 {
    mol_per_m3 * AVOGADRO
}

/// mol/L (M) to molecules/m³.
pub fn molar_to_molecules(molar: f64) -> f64 {
    mol_per_m3_to_molecules(molar_to_mol_per_m3(molar))
}

/// molecules/m³ to mol/L (M).
pub fn molecules_to_molar(molecules: f64) -> f64 {
    molecules / AVOGADRO * 1.0e-3
}

/// Ionic, thermal and dielectric conditions of the fluid medium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Environment {
    /// Absolute temperature (K)
    pub temperature: f64,
    /// Ionic concentration (mol/m³)
    pub ionic_concentration: f64,
    /// Relative permittivity of the solvent
    pub relative_permittivity: f64,
}

impl Environment {
    pub fn new(temperature: f64, ionic_concentration: f64, relative_permittivity: f64) -> Result<Self> {
        let env = Environment {
            temperature,
            ionic_concentration,
            relative_permittivity,
        };
        env.validate()?;
        Ok(env)
    }

    /// Water at 298 K with a 70 mM ionic background.
    pub fn table1() -> Self {
        Environment {
            temperature: 298.0,
            ionic_concentration: 70.0,
            relative_permittivity: 78.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(ModelError::InvalidEnvironment(format!(
                "temperature must be > 0 K, got {}",
                self.temperature
            )));
        }
        if !(self.ionic_concentration.is_finite() && self.ionic_concentration > 0.0) {
            return Err(ModelError::InvalidEnvironment(format!(
                "ionic concentration must be > 0 mol/m3, got {}",
                self.ionic_concentration
            )));
        }
        if !(self.relative_permittivity.is_finite() && self.relative_permittivity >= 1.0) {
            return Err(ModelError::InvalidEnvironment(format!(
                "relative permittivity must be >= 1, got {}",
                self.relative_permittivity
            )));
        }
        Ok(())
    }

    /// Thermal energy k_B·T (J).
    pub fn thermal_energy(&self) -> f64 {
        BOLTZMANN * self.temperature
    }
}

/// Debye screening length of the medium (m).
pub fn debye_length(env: &Environment) -> Result<f64> {
    let lambda = (env.relative_permittivity * VACUUM_PERMITTIVITY * BOLTZMANN * env.temperature
        / (2.0 * AVOGADRO * ELEMENTARY_CHARGE * ELEMENTARY_CHARGE * env.ionic_concentration))
        .sqrt();
    if lambda.is_finite() && lambda > 0.0 {
        Ok(lambda)
    } else {
        Err(ModelError::InvalidEnvironment(format!(
            "Debye length evaluates to {lambda} for {env:?}"
        )))
    }
}

/// Mean charge induced at the channel by one electron sitting `distance` away
/// from it, screened over `debye_length` (C).
pub fn effective_charge_per_electron(distance: f64, debye_length: f64) -> Result<f64> {
    if !(distance.is_finite() && distance >= 0.0) {
        return Err(ModelError::Domain(format!(
            "charge distance must be finite and >= 0, got {distance}"
        )));
    }
    if !(debye_length.is_finite() && debye_length > 0.0) {
        return Err(ModelError::Domain(format!(
            "Debye length must be finite and > 0, got {debye_length}"
        )));
    }
    Ok(ELEMENTARY_CHARGE * (-distance / debye_length).exp())
}

/// Screened charge carried by one bound ligand, N_e·q_eff with the charge
/// distance taken as the receptor length (C).
pub fn ligand_charge(pair: &crate::kinetics::LigandReceptorPair, debye_length: f64) -> Result<f64> {
    Ok(pair.electrons_per_ligand * effective_charge_per_electron(pair.receptor_length, debye_length)?)
}
