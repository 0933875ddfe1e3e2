//! Equivalent-circuit transduction of bound charge into threshold-voltage and
//! drain-current shifts.
//!
//! The circuit is two series branches in parallel: oxide + semiconductor, and
//! receptor layer + bound-ligand layer + double layer. The ligand-layer
//! capacitance follows the steady-state mean occupancy of the current message.

use crate::error::{require_positive, ModelError, Result};
use crate::kinetics::{self, ChargeSign, LigandReceptorPair, RecognitionLayer};
use crate::physchem::VACUUM_PERMITTIVITY;
use crate::receiver::Receiver;

/// Majority carrier type of the channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChannelDoping {
    #[default]
    PType,
    NType,
}

/// FET geometry and electrical parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransducerConfig {
    /// Channel width W (m)
    pub width: f64,
    /// Channel length L (m)
    pub length: f64,
    /// Oxide thickness t_ox (m)
    pub oxide_thickness: f64,
    /// Relative permittivity of the oxide
    pub oxide_rel_permittivity: f64,
    /// Effective carrier mobility (m²/(V·s))
    pub effective_mobility: f64,
    /// Drain-source voltage (V)
    pub drain_source_voltage: f64,
    /// Double-layer capacitance (F/m²)
    pub dl_capacitance_per_area: f64,
    /// Semiconductor capacitance (F/m²)
    pub semiconductor_capacitance_per_area: f64,
    /// Oxide trap density (1/(eV·m³))
    pub trap_density: f64,
    /// Tunneling distance into the oxide (m)
    pub tunneling_distance: f64,
    /// Resistance of the bound-ligand layer (Ω)
    pub layer_resistance: f64,
    /// Gate-source voltage set by the reference electrode (V); only needed for
    /// the absolute bias current
    pub gate_source_voltage: Option<f64>,
    /// Baseline threshold voltage (V)
    pub threshold_voltage: f64,
    pub channel: ChannelDoping,
}

impl TransducerConfig {
    /// 0.1 × 5 µm SiNW with a 17.5 nm SiO₂ gate dielectric.
    pub fn table1() -> Self {
        TransducerConfig {
            width: 0.1e-6,
            length: 5e-6,
            oxide_thickness: 17.5e-9,
            oxide_rel_permittivity: 3.9,
            effective_mobility: 16e-3,
            drain_source_voltage: 0.1,
            dl_capacitance_per_area: 5e-2,
            semiconductor_capacitance_per_area: 2e-3,
            trap_density: 2.3e24,
            tunneling_distance: 0.05e-9,
            layer_resistance: 5e10,
            gate_source_voltage: None,
            threshold_voltage: 0.0,
            channel: ChannelDoping::PType,
        }
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("width", self.width)?;
        require_positive("length", self.length)?;
        require_positive("oxide_thickness", self.oxide_thickness)?;
        require_positive("oxide_rel_permittivity", self.oxide_rel_permittivity)?;
        require_positive("effective_mobility", self.effective_mobility)?;
        require_positive("drain_source_voltage", self.drain_source_voltage)?;
        require_positive("dl_capacitance_per_area", self.dl_capacitance_per_area)?;
        require_positive("semiconductor_capacitance_per_area", self.semiconductor_capacitance_per_area)?;
        require_positive("trap_density", self.trap_density)?;
        require_positive("tunneling_distance", self.tunneling_distance)?;
        require_positive("layer_resistance", self.layer_resistance)?;
        if let Some(v) = self.gate_source_voltage {
            if !v.is_finite() {
                return Err(ModelError::InvalidParameter {
                    name: "gate_source_voltage",
                    reason: "must be finite".into(),
                });
            }
        }
        if !self.threshold_voltage.is_finite() {
            return Err(ModelError::InvalidParameter {
                name: "threshold_voltage",
                reason: "must be finite".into(),
            });
        }
        Ok(())
    }

    /// Active area W·L (m²).
    pub fn area(&self) -> f64 {
        self.width * self.length
    }

    /// C_ox = ε_ox / t_ox (F/m²).
    pub fn oxide_capacitance_per_area(&self) -> f64 {
        self.oxide_rel_permittivity * VACUUM_PERMITTIVITY / self.oxide_thickness
    }
}

/// Capacitances of the equivalent circuit for a given bound count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacitanceBreakdown {
    /// Oxide capacitance per area (F/m²)
    pub c_ox_area: f64,
    /// Receptor layer N_R·C_mol,R (F)
    pub c_rec: f64,
    /// Bound-ligand layer N_B·C_mol,L (F)
    pub c_layer: f64,
    /// Oxide/semiconductor series branch (F)
    pub c_gate_branch: f64,
    /// Receptor/ligand/double-layer series branch, 0 when nothing is bound (F)
    pub c_surface_branch: f64,
    /// Total C_eq (F)
    pub c_eq: f64,
    /// Summed inverse capacitances of the surface branch, C_rec⁻¹ + C_layer⁻¹ + (C_dl·WL)⁻¹ (1/F)
    pub c_p: f64,
    /// Capacitance seen by the layer resistance in the thermal-noise filter (F)
    pub c_eq_prime: f64,
    /// Set when no ligand is bound and the surface branch vanishes
    pub degenerate: bool,
}

pub fn capacitances(
    n_bound: f64,
    cfg: &TransducerConfig,
    pair: &LigandReceptorPair,
    layer: &RecognitionLayer,
) -> CapacitanceBreakdown {
    let area = cfg.area();
    let c_ox_area = cfg.oxide_capacitance_per_area();
    let c_s_area = cfg.semiconductor_capacitance_per_area;
    let c_dl_area = cfg.dl_capacitance_per_area;
    let c_rec = layer.receptor_count * pair.receptor_capacitance;
    let c_layer = n_bound * pair.ligand_capacitance;

    let c_gate_branch = 1.0 / (1.0 / (c_ox_area * area) + 1.0 / (c_s_area * area));
    let degenerate = !(c_layer > 0.0);
    let (c_p, c_surface_branch) = if degenerate {
        (f64::INFINITY, 0.0)
    } else {
        let c_p = 1.0 / c_rec + 1.0 / c_layer + 1.0 / (c_dl_area * area);
        (c_p, 1.0 / c_p)
    };
    let c_eq_prime = c_layer
        + 1.0 / ((1.0 / c_dl_area + 1.0 / c_ox_area + 1.0 / c_s_area) / area + 1.0 / c_rec);

    CapacitanceBreakdown {
        c_ox_area,
        c_rec,
        c_layer,
        c_gate_branch,
        c_surface_branch,
        c_eq: c_gate_branch + c_surface_branch,
        c_p,
        c_eq_prime,
        degenerate,
    }
}

/// Capacitances at the steady-state mean occupancy for concentration `c`.
pub fn capacitances_at(c: f64, rx: &Receiver) -> CapacitanceBreakdown {
    let n_bound = kinetics::mean_bound_steady(c, &rx.pair, &rx.layer);
    capacitances(n_bound, &rx.transducer, &rx.pair, &rx.layer)
}

/// Surface-potential shift for `n_bound` ligands held at message capacitance `caps` (V).
pub(crate) fn potential_from_count(n_bound: f64, charge_per_ligand: f64, caps: &CapacitanceBreakdown) -> f64 {
    if n_bound == 0.0 || charge_per_ligand == 0.0 {
        return 0.0;
    }
    n_bound * charge_per_ligand / caps.c_eq
}

/// Mean surface-potential shift ΔΨ = ΔV_TH at steady state (V).
pub fn potential_shift(c: f64, rx: &Receiver) -> Result<f64> {
    check_concentration(c)?;
    let n_bound = kinetics::mean_bound_steady(c, &rx.pair, &rx.layer);
    let caps = capacitances(n_bound, &rx.transducer, &rx.pair, &rx.layer);
    Ok(potential_from_count(n_bound, rx.charge_per_ligand()?, &caps))
}

/// Closed-form limit of [`potential_shift`] as every receptor becomes occupied (V).
pub fn saturation_potential(rx: &Receiver) -> Result<f64> {
    let n = rx.layer.receptor_count;
    let caps = capacitances(n, &rx.transducer, &rx.pair, &rx.layer);
    Ok(potential_from_count(n, rx.charge_per_ligand()?, &caps))
}

/// g_m = (W/L)·μ_eff·C_ox·V_DS (S).
pub fn transconductance(cfg: &TransducerConfig) -> f64 {
    cfg.width / cfg.length * cfg.effective_mobility * cfg.oxide_capacitance_per_area() * cfg.drain_source_voltage
}

/// Magnitude of the mean drain-current shift g_m·ΔV_TH (A).
pub fn current_shift(c: f64, rx: &Receiver) -> Result<f64> {
    Ok(transconductance(&rx.transducer) * potential_shift(c, rx)?)
}

/// +1 when bound ligands accumulate majority carriers and raise the current,
/// −1 when they deplete the channel.
pub fn response_direction(pair: &LigandReceptorPair, cfg: &TransducerConfig) -> f64 {
    match (pair.charge_sign, cfg.channel) {
        (ChargeSign::Negative, ChannelDoping::PType) | (ChargeSign::Positive, ChannelDoping::NType) => 1.0,
        _ => -1.0,
    }
}

/// Linear-regime bias current before any binding (A).
pub fn baseline_current(cfg: &TransducerConfig) -> Result<f64> {
    let v_gs = cfg.gate_source_voltage.ok_or_else(|| {
        ModelError::Unsupported("baseline current needs a gate-source voltage".into())
    })?;
    let overdrive = v_gs - cfg.threshold_voltage;
    if overdrive < 0.0 {
        return Err(ModelError::Domain(format!(
            "device is off: V_GS = {v_gs} V is below the threshold {} V",
            cfg.threshold_voltage
        )));
    }
    Ok(cfg.width / cfg.length * cfg.effective_mobility * cfg.oxide_capacitance_per_area() * overdrive * cfg.drain_source_voltage)
}

/// d(ΔI_DS)/dc (A·m³).
///
/// Exact chain-rule derivative of `g_m · N_B·N_e·q_eff / C_eq(N_B)` with
/// `dC_eq/dN_B = 1 / (C_p² · N_B² · C_mol,L)`.
pub fn sensitivity(c: f64, rx: &Receiver) -> Result<f64> {
    check_concentration(c)?;
    if c == 0.0 {
        return Err(ModelError::Domain(
            "sensitivity is singular at zero concentration (empty ligand layer)".into(),
        ));
    }
    let kd = rx.dissociation_constant();
    let n_bound = kinetics::mean_bound_steady(c, &rx.pair, &rx.layer);
    let caps = capacitances(n_bound, &rx.transducer, &rx.pair, &rx.layer);
    let dn_dc = rx.layer.receptor_count * kd / ((kd + c) * (kd + c));
    let dresponse_dn = (caps.c_eq - 1.0 / (caps.c_p * caps.c_p * caps.c_layer)) / (caps.c_eq * caps.c_eq);
    Ok(transconductance(&rx.transducer) * rx.charge_per_ligand()? * dn_dc * dresponse_dn)
}

/// Current increase per unit increase of c/K_D (A).
pub fn normalized_sensitivity(c: f64, rx: &Receiver) -> Result<f64> {
    Ok(sensitivity(c, rx)? * rx.dissociation_constant())
}

fn check_concentration(c: f64) -> Result<()> {
    if c.is_finite() && c >= 0.0 {
        Ok(())
    } else {
        Err(ModelError::Domain(format!("ligand concentration must be finite and >= 0, got {c}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physchem::Environment;
    use approx::assert_relative_eq;

    fn with_env(c_ion: f64) -> Receiver {
        let mut rx = Receiver::table1();
        rx.environment = Environment::new(298.0, c_ion, 78.0).unwrap();
        rx
    }

    fn central_difference(c: f64, rx: &Receiver) -> f64 {
        let h = 1e-4 * c;
        (current_shift(c + h, rx).unwrap() - current_shift(c - h, rx).unwrap()) / (2.0 * h)
    }

    #[test]
    fn oxide_capacitance_table1() {
        let cfg = TransducerConfig::table1();
        assert_relative_eq!(cfg.oxide_capacitance_per_area(), 1.973e-3, max_relative = 0.005);
        let mut thick = cfg;
        thick.oxide_thickness *= 2.0;
        assert_relative_eq!(
            thick.oxide_capacitance_per_area(),
            cfg.oxide_capacitance_per_area() / 2.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn layer_capacitance_is_a_product() {
        let rx = Receiver::table1();
        let caps = capacitances(1e6, &rx.transducer, &rx.pair, &rx.layer);
        assert_relative_eq!(caps.c_layer, 2e-14, max_relative = 1e-15);
        assert!(!caps.degenerate);
        assert_relative_eq!(caps.c_eq, caps.c_gate_branch + caps.c_surface_branch, max_relative = 1e-15);
        assert_relative_eq!(caps.c_surface_branch, 1.0 / caps.c_p, max_relative = 1e-15);
    }

    #[test]
    fn empty_layer_is_degenerate() {
        let rx = Receiver::table1();
        let caps = capacitances(0.0, &rx.transducer, &rx.pair, &rx.layer);
        assert!(caps.degenerate);
        assert_eq!(caps.c_surface_branch, 0.0);
        assert_eq!(caps.c_eq, caps.c_gate_branch);
        assert!(caps.c_eq_prime > 0.0 && caps.c_eq_prime.is_finite());
        assert_eq!(potential_shift(0.0, &rx).unwrap(), 0.0);
    }

    #[test]
    fn transconductance_table1() {
        let cfg = TransducerConfig::table1();
        assert_relative_eq!(transconductance(&cfg), 6.31e-8, max_relative = 0.01);
        let mut v = cfg;
        v.drain_source_voltage *= 2.0;
        assert_relative_eq!(transconductance(&v), 2.0 * transconductance(&cfg), max_relative = 1e-15);
        let mut t = cfg;
        t.oxide_thickness *= 2.0;
        assert_relative_eq!(transconductance(&t), 0.5 * transconductance(&cfg), max_relative = 1e-15);
    }

    #[test]
    fn uncharged_ligands_give_no_response() {
        let mut rx = Receiver::table1();
        rx.pair.electrons_per_ligand = 0.0;
        let kd = rx.dissociation_constant();
        for r in [0.1, 1.0, 10.0] {
            assert_eq!(potential_shift(r * kd, &rx).unwrap(), 0.0);
        }
    }

    #[test]
    fn response_rises_and_saturates() {
        let rx = Receiver::table1();
        let kd = rx.dissociation_constant();
        let grid: Vec<f64> = (0..=30).map(|i| kd * 0.1 * 1000f64.powf(i as f64 / 30.0)).collect();
        let dv: Vec<f64> = grid.iter().map(|&c| potential_shift(c, &rx).unwrap()).collect();
        assert!(dv.windows(2).all(|w| w[1] > w[0]));
        let gains: Vec<f64> = dv.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(gains.last().unwrap() < &(gains[10] * 0.1));
        let limit = saturation_potential(&rx).unwrap();
        assert_relative_eq!(potential_shift(1e6 * kd, &rx).unwrap(), limit, max_relative = 1e-3);
    }

    #[test]
    fn current_is_transconductance_times_potential() {
        let rx = Receiver::table1();
        let gm = transconductance(&rx.transducer);
        let kd = rx.dissociation_constant();
        assert_eq!(current_shift(0.0, &rx).unwrap(), 0.0);
        for r in [0.3, 1.0, 4.0, 30.0] {
            let c = r * kd;
            let di = current_shift(c, &rx).unwrap();
            let dv = potential_shift(c, &rx).unwrap();
            assert!((di - gm * dv).abs() <= 1e-14 * di.abs());
        }
    }

    #[test]
    fn dilution_raises_threshold_shift_twentyfold() {
        let kd = Receiver::table1().dissociation_constant();
        let ratio = potential_shift(4.0 * kd, &with_env(1.0)).unwrap() / potential_shift(4.0 * kd, &with_env(70.0)).unwrap();
        assert!((ratio - 20.0).abs() <= 0.25 * 20.0, "fold change {ratio}");
    }

    #[test]
    fn debye_suppression_of_receptor_length() {
        let rx = Receiver::table1();
        let ld = rx.debye_length().unwrap();
        let kd = rx.dissociation_constant();
        let mut long = rx;
        long.pair.receptor_length = 8e-9;
        let ratio = potential_shift(4.0 * kd, &long).unwrap() / potential_shift(4.0 * kd, &rx).unwrap();
        assert_relative_eq!(ratio, (-4e-9 / ld).exp(), max_relative = 1e-12);
        assert_relative_eq!(ratio, (-4.0f64 / 1.147).exp(), max_relative = 0.01);
    }

    #[test]
    fn baseline_current_examples() {
        let mut cfg = TransducerConfig::table1();
        assert!(matches!(baseline_current(&cfg), Err(ModelError::Unsupported(_))));
        cfg.threshold_voltage = 0.3;
        cfg.gate_source_voltage = Some(0.3);
        assert_eq!(baseline_current(&cfg).unwrap(), 0.0);
        cfg.gate_source_voltage = Some(0.8);
        let i0 = baseline_current(&cfg).unwrap();
        let mut v = cfg;
        v.drain_source_voltage *= 3.0;
        assert_relative_eq!(baseline_current(&v).unwrap(), 3.0 * i0, max_relative = 1e-14);
        let mut w = cfg;
        w.width *= 2.0;
        assert_relative_eq!(baseline_current(&w).unwrap(), 2.0 * i0, max_relative = 1e-14);
        cfg.gate_source_voltage = Some(0.1);
        assert!(baseline_current(&cfg).is_err());
    }

    #[test]
    fn sensitivity_matches_finite_difference() {
        let rx = Receiver::table1();
        let kd = rx.dissociation_constant();
        for r in [0.5, 1.0, 4.0, 8.0, 16.0] {
            let c = r * kd;
            let analytic = sensitivity(c, &rx).unwrap();
            let numeric = central_difference(c, &rx);
            assert!((analytic - numeric).abs() / numeric < 1e-3, "c = {r} K_D: {analytic} vs {numeric}");
        }
        assert!(sensitivity(0.0, &rx).is_err());
    }

    #[test]
    fn sensitivity_trends() {
        let rx = Receiver::table1();
        let kd = rx.dissociation_constant();
        let by_c: Vec<f64> = (0..20)
            .map(|i| sensitivity(kd * 0.5 * 40f64.powf(i as f64 / 19.0), &rx).unwrap())
            .collect();
        assert!(by_c.iter().all(|&s| s > 0.0));
        assert!(by_c.windows(2).all(|w| w[1] < w[0]));

        let mut short = rx;
        short.pair.receptor_length = 1e-9;
        assert!(sensitivity(4.0 * kd, &short).unwrap() > sensitivity(4.0 * kd, &rx).unwrap());
    }
}
