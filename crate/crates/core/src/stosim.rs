//! Stochastic per-receptor simulation of the recognition layer and the
//! transducer output it drives.
//!
//! Each receptor is a continuous-time Markov chain over `{free, bound to
//! species s}`. A fixed step `dt` is advanced with the exact transition
//! matrix `exp(Q·dt)`, so stationary statistics carry no discretization bias.
//! Species compete for the same finite receptor pool.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{require_non_negative, require_positive, ModelError, Result};
use crate::kinetics::{self, ChargeSign, LigandReceptorPair, MessageSchedule, RecognitionLayer};
use crate::noise;
use crate::physchem;
use crate::receiver::Receiver;
use crate::spectral::{self, SampleAcf};
use crate::transducer::{self, capacitances};

const OCCUPANCY_STREAM: u64 = 0;
const SYMBOL_STREAM: u64 = 1;
const THERMAL_STREAM: u64 = 2;
const FLICKER_STREAM: u64 = 3;

/// A chemically similar molecule that also binds the receptors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfererSpecies {
    /// Constant background concentration (molecules/m³)
    pub concentration: f64,
    pub k_on: f64,
    pub k_off: f64,
    /// Mean number of elementary charges per molecule
    pub electrons: f64,
    /// Distance of its charge from the channel when bound (m)
    pub receptor_length_equivalent: f64,
    pub charge_sign: ChargeSign,
}

impl InterfererSpecies {
    pub fn validate(&self) -> Result<()> {
        require_non_negative("interferer.concentration", self.concentration)?;
        require_positive("interferer.k_on", self.k_on)?;
        require_positive("interferer.k_off", self.k_off)?;
        require_non_negative("interferer.electrons", self.electrons)?;
        require_non_negative("interferer.receptor_length_equivalent", self.receptor_length_equivalent)
    }
}

/// Kinetic and charge description of one binding species inside a trace.
/// Species 0 is always the information ligand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Species {
    pub k_on: f64,
    pub k_off: f64,
    pub electrons: f64,
    pub charge_distance: f64,
    pub charge_sign: ChargeSign,
    /// Fixed concentration for interferers; `None` for the scheduled ligand
    pub fixed_concentration: Option<f64>,
}

impl Species {
    fn primary(pair: &LigandReceptorPair) -> Self {
        Species {
            k_on: pair.k_on,
            k_off: pair.k_off,
            electrons: pair.electrons_per_ligand,
            charge_distance: pair.receptor_length,
            charge_sign: pair.charge_sign,
            fixed_concentration: None,
        }
    }

    fn interferer(s: &InterfererSpecies) -> Self {
        Species {
            k_on: s.k_on,
            k_off: s.k_off,
            electrons: s.electrons,
            charge_distance: s.receptor_length_equivalent,
            charge_sign: s.charge_sign,
            fixed_concentration: Some(s.concentration),
        }
    }

    fn concentration(&self, ligand_level: f64) -> f64 {
        self.fixed_concentration.unwrap_or(ligand_level)
    }
}

/// How receptor transitions are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Engine {
    /// Multinomial draws on the per-state receptor counts; same law as
    /// drawing every receptor independently.
    #[default]
    Aggregated,
    /// One uniform draw per receptor per step on an explicit state vector.
    PerReceptor,
    /// Deterministic expected occupancy, i.e. no receptor noise.
    MeanField,
}

/// Occupancy at the start of the schedule.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum InitialOccupancy {
    #[default]
    Empty,
    /// Drawn from the stationary distribution of the first symbol.
    Steady,
    /// Explicit bound counts per species.
    Counts(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOptions {
    pub dt: f64,
    pub engine: Engine,
    pub initial: InitialOccupancy,
    /// Reject steps longer than a tenth of the fastest binding timescale.
    pub enforce_step_bound: bool,
}

impl SimulationOptions {
    pub fn new(dt: f64) -> Self {
        SimulationOptions {
            dt,
            engine: Engine::default(),
            initial: InitialOccupancy::default(),
            enforce_step_bound: true,
        }
    }
}

/// Receptor occupation: 0 is free, `s + 1` is bound to species `s`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReceptorState {
    states: Vec<u8>,
    species: usize,
}

impl ReceptorState {
    pub fn new(receptors: usize, species: usize) -> Self {
        ReceptorState {
            states: vec![0; receptors],
            species,
        }
    }

    fn from_counts(counts: &[usize], receptors: usize) -> Self {
        let mut states = Vec::with_capacity(receptors);
        for (s, &n) in counts.iter().enumerate() {
            states.extend(std::iter::repeat_n((s + 1) as u8, n));
        }
        states.resize(receptors, 0);
        ReceptorState {
            states,
            species: counts.len(),
        }
    }

    pub fn receptors(&self) -> usize {
        self.states.len()
    }

    /// Species index bound to receptor `i`, if any.
    pub fn bound_species(&self, i: usize) -> Option<usize> {
        match self.states[i] {
            0 => None,
            s => Some(s as usize - 1),
        }
    }

    /// Counts per state: `[free, bound_0, bound_1, ...]`.
    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.species + 1];
        for &s in &self.states {
            counts[s as usize] += 1;
        }
        counts
    }

    fn step<R: Rng>(&mut self, transition: &Matrix, rng: &mut R) {
        let cumulative: Vec<Vec<f64>> = transition
            .iter()
            .map(|row| {
                row.iter()
                    .scan(0.0, |acc, p| {
                        *acc += p;
                        Some(*acc)
                    })
                    .collect()
            })
            .collect();
        for state in self.states.iter_mut() {
            let u: f64 = rng.random();
            let row = &cumulative[*state as usize];
            let next = row.iter().position(|&c| u < c).unwrap_or(row.len() - 1);
            *state = next as u8;
        }
    }
}

/// Simulated occupancy and, once synthesized, transducer output.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub dt: f64,
    /// Sample `k` holds the state at `start + (k + 1)·dt`
    pub time: Vec<f64>,
    /// Ligand concentration in force during each step (molecules/m³)
    pub concentration: Vec<f64>,
    /// Bound counts, indexed `[species][step]`
    pub n_bound: Vec<Vec<f64>>,
    pub species: Vec<Species>,
    pub receptor_count: usize,
    pub steps_per_symbol: usize,
    /// Threshold-voltage shift (V); empty until synthesized
    pub delta_vth: Vec<f64>,
    /// Drain-current shift, signed by the response direction (A); empty until synthesized
    pub delta_ids: Vec<f64>,
    pub rng_seed: u64,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.len() as f64 * self.dt
    }

    /// Total bound receptors at each step.
    pub fn total_bound(&self) -> Vec<f64> {
        (0..self.len())
            .map(|k| self.n_bound.iter().map(|s| s[k]).sum())
            .collect()
    }

    /// Writes the trace as CSV: `time_s, n_bound[_species_k]..., delta_vth_V, delta_ids_A`.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut header = vec!["time_s".to_string(), "n_bound".to_string()];
        header.extend((1..self.species.len()).map(|k| format!("n_bound_species_{k}")));
        header.push("delta_vth_V".into());
        header.push("delta_ids_A".into());
        writeln!(out, "{}", header.join(","))?;
        for k in 0..self.len() {
            let mut row = vec![format!("{:e}", self.time[k])];
            row.extend(self.n_bound.iter().map(|s| format!("{}", s[k])));
            row.push(self.delta_vth.get(k).map_or(String::new(), |v| format!("{v:e}")));
            row.push(self.delta_ids.get(k).map_or(String::new(), |v| format!("{v:e}")));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

type Matrix = Vec<Vec<f64>>;

fn generator(species: &[Species], ligand_level: f64) -> Matrix {
    let n = species.len() + 1;
    let mut q = vec![vec![0.0; n]; n];
    for (s, sp) in species.iter().enumerate() {
        let bind = sp.k_on * sp.concentration(ligand_level);
        q[0][s + 1] = bind;
        q[0][0] -= bind;
        q[s + 1][0] = sp.k_off;
        q[s + 1][s + 1] = -sp.k_off;
    }
    q
}

fn mat_mul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    let mut c = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                c[i][j] += aik * b[k][j];
            }
        }
    }
    c
}

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
fn expm(a: &Matrix) -> Matrix {
    let n = a.len();
    let norm = a
        .iter()
        .map(|row| row.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm > 0.25 { (norm / 0.25).log2().ceil() as u32 } else { 0 };
    let scale = 0.5f64.powi(squarings as i32);
    let scaled: Matrix = a.iter().map(|r| r.iter().map(|x| x * scale).collect()).collect();
    let mut result: Matrix = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let mut term = result.clone();
    for k in 1..=20 {
        term = mat_mul(&term, &scaled);
        for row in term.iter_mut() {
            for x in row.iter_mut() {
                *x /= k as f64;
            }
        }
        for i in 0..n {
            for j in 0..n {
                result[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        result = mat_mul(&result, &result);
    }
    // rows of a stochastic matrix: clip round-off and renormalize
    for row in result.iter_mut() {
        for x in row.iter_mut() {
            *x = x.max(0.0);
        }
        let sum: f64 = row.iter().sum();
        for x in row.iter_mut() {
            *x /= sum;
        }
    }
    result
}

/// Stationary occupation probabilities `[free, bound_0, ...]` under competition.
fn stationary(species: &[Species], ligand_level: f64) -> Vec<f64> {
    let weights: Vec<f64> = species
        .iter()
        .map(|s| s.k_on * s.concentration(ligand_level) / s.k_off)
        .collect();
    let z = 1.0 + weights.iter().sum::<f64>();
    std::iter::once(1.0 / z).chain(weights.iter().map(|w| w / z)).collect()
}

fn multinomial<R: Rng>(rng: &mut R, n: u64, probs: &[f64], out: &mut [u64]) {
    let mut remaining = n;
    let mut mass = 1.0;
    let last = probs.len() - 1;
    for (j, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            out[j] = 0;
            continue;
        }
        if j == last {
            out[j] = remaining;
            break;
        }
        let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
        let draw = if q >= 1.0 {
            remaining
        } else if q <= 0.0 {
            0
        } else {
            Binomial::new(remaining, q).expect("probability in (0, 1)").sample(rng)
        };
        out[j] = draw;
        remaining -= draw;
        mass -= p;
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Seed of the `index`-th independent trace drawn from a master seed.
pub fn trace_seed(master: u64, index: u64) -> u64 {
    master.wrapping_add(index)
}

fn species_label(s: usize) -> String {
    if s == 0 {
        "species 0 (information ligand)".into()
    } else {
        format!("species {s} (interferer {})", s - 1)
    }
}

fn steps_per_symbol(schedule: &MessageSchedule, dt: f64) -> Result<usize> {
    let duration = schedule.symbol_duration();
    let steps = (duration / dt).round();
    if steps < 1.0 || (steps * dt - duration).abs() > 1e-9 * duration {
        return Err(ModelError::Configuration(format!(
            "symbol duration {duration} s is not a whole number of {dt} s steps"
        )));
    }
    Ok(steps as usize)
}

/// Simulates receptor occupancy under `schedule` with optional interferers.
pub fn simulate_occupancy(
    schedule: &MessageSchedule,
    pair: &LigandReceptorPair,
    layer: &RecognitionLayer,
    interferers: &[InterfererSpecies],
    options: &SimulationOptions,
    seed: u64,
) -> Result<Trace> {
    schedule.validate()?;
    pair.validate()?;
    require_positive("dt", options.dt)?;
    for i in interferers {
        i.validate()?;
    }
    let dt = options.dt;
    let species: Vec<Species> = std::iter::once(Species::primary(pair))
        .chain(interferers.iter().map(Species::interferer))
        .collect();
    if species.len() > 254 {
        return Err(ModelError::Configuration("at most 253 interferer species are supported".into()));
    }

    if options.enforce_step_bound {
        for (s, sp) in species.iter().enumerate() {
            let fastest = schedule
                .levels
                .iter()
                .map(|&c| 1.0 / (sp.k_on * sp.concentration(c) + sp.k_off))
                .fold(f64::INFINITY, f64::min);
            if dt > 0.1 * fastest * (1.0 + 1e-12) {
                return Err(ModelError::Configuration(format!(
                    "dt = {dt} s exceeds a tenth of the binding timescale {fastest} s of {}",
                    species_label(s)
                )));
            }
        }
    }

    let per_symbol = steps_per_symbol(schedule, dt)?;
    let n_steps = per_symbol * schedule.levels.len();
    let receptors = layer.discrete_count();
    let n_states = species.len() + 1;

    let mut transitions: HashMap<u64, Matrix> = HashMap::new();
    for &c in &schedule.levels {
        transitions
            .entry(c.to_bits())
            .or_insert_with(|| {
                let q = generator(&species, c);
                let scaled: Matrix = q.iter().map(|r| r.iter().map(|x| x * dt).collect()).collect();
                expm(&scaled)
            });
    }

    let mut rng = stream_rng(seed, OCCUPANCY_STREAM);
    let initial_counts: Vec<usize> = match &options.initial {
        InitialOccupancy::Empty => vec![0; species.len()],
        InitialOccupancy::Steady => {
            let pi = stationary(&species, schedule.levels[0]);
            match options.engine {
                Engine::MeanField => pi[1..].iter().map(|p| (p * receptors as f64).round() as usize).collect(),
                _ => {
                    let mut out = vec![0u64; n_states];
                    multinomial(&mut rng, receptors as u64, &pi, &mut out);
                    out[1..].iter().map(|&x| x as usize).collect()
                }
            }
        }
        InitialOccupancy::Counts(c) => {
            if c.len() != species.len() || c.iter().sum::<usize>() > receptors {
                return Err(ModelError::Configuration(format!(
                    "initial counts {c:?} do not fit {} species on {receptors} receptors",
                    species.len()
                )));
            }
            c.clone()
        }
    };

    let mut n_bound = vec![Vec::with_capacity(n_steps); species.len()];
    let mut concentration = Vec::with_capacity(n_steps);
    let mut time = Vec::with_capacity(n_steps);

    let mut counts: Vec<f64> = std::iter::once((receptors - initial_counts.iter().sum::<usize>()) as f64)
        .chain(initial_counts.iter().map(|&x| x as f64))
        .collect();
    let mut state = match options.engine {
        Engine::PerReceptor => Some(ReceptorState::from_counts(&initial_counts, receptors)),
        _ => None,
    };
    let mut draws = vec![0u64; n_states];

    for k in 0..n_steps {
        let level = schedule.levels[k / per_symbol];
        let p = &transitions[&level.to_bits()];
        match options.engine {
            Engine::Aggregated => {
                let mut next = vec![0.0; n_states];
                for i in 0..n_states {
                    multinomial(&mut rng, counts[i] as u64, &p[i], &mut draws);
                    for j in 0..n_states {
                        next[j] += draws[j] as f64;
                    }
                }
                counts = next;
            }
            Engine::PerReceptor => {
                let st = state.as_mut().expect("per-receptor state");
                st.step(p, &mut rng);
                counts = st.counts().into_iter().map(|x| x as f64).collect();
            }
            Engine::MeanField => {
                let mut next = vec![0.0; n_states];
                for i in 0..n_states {
                    for j in 0..n_states {
                        next[j] += counts[i] * p[i][j];
                    }
                }
                counts = next;
            }
        }
        for s in 0..species.len() {
            n_bound[s].push(counts[s + 1]);
        }
        concentration.push(level);
        time.push(schedule.start_time + (k + 1) as f64 * dt);
    }

    Ok(Trace {
        dt,
        time,
        concentration,
        n_bound,
        species,
        receptor_count: receptors,
        steps_per_symbol: per_symbol,
        delta_vth: Vec::new(),
        delta_ids: Vec::new(),
        rng_seed: seed,
    })
}

/// Sample ACF of the information-ligand bound count after discarding `burn_in` seconds.
pub fn empirical_acf(trace: &Trace, max_lag: f64, burn_in: f64) -> Result<SampleAcf> {
    let skip = (burn_in / trace.dt).ceil() as usize;
    let lag_steps = (max_lag / trace.dt).round() as usize;
    if trace.len() < skip + 10 * lag_steps.max(1) {
        return Err(ModelError::InsufficientData(format!(
            "trace of {} steps is shorter than burn-in {skip} + 10 × max lag {lag_steps}",
            trace.len()
        )));
    }
    spectral::sample_acf(&trace.n_bound[0][skip..], trace.dt, lag_steps)
}

/// Burn-in used before steady-state statistics: 20 binding timescales.
pub fn burn_in(c: f64, pair: &LigandReceptorPair) -> f64 {
    20.0 * kinetics::binding_timescale(c, pair)
}

/// Which capacitance converts bound charge into ΔV_TH.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CapacitanceModel {
    /// Steady-state mean occupancy of the current symbol, matching the
    /// analytical signal and binding-noise models.
    #[default]
    MessageMean,
    /// Instantaneous total occupancy.
    Instantaneous,
}

/// Transducing noise added on top of the intrinsic receptor noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct NoiseFlags {
    pub thermal: bool,
    pub flicker: bool,
}

impl NoiseFlags {
    pub const NONE: NoiseFlags = NoiseFlags {
        thermal: false,
        flicker: false,
    };
    pub const ALL: NoiseFlags = NoiseFlags {
        thermal: true,
        flicker: true,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OutputOptions {
    pub noise: NoiseFlags,
    pub capacitance: CapacitanceModel,
    /// Band for the synthesized transducing noise; defaults to `[1/T, 1/(2·dt)]`.
    pub band: Option<(f64, f64)>,
}

/// Fills `delta_vth` and `delta_ids` from the occupancy trace.
pub fn synthesize_output(mut trace: Trace, rx: &Receiver, options: &OutputOptions) -> Result<Trace> {
    if trace.is_empty() {
        return Err(ModelError::InsufficientData("empty occupancy trace".into()));
    }
    let ld = rx.debye_length()?;
    let reference = trace.species[0].charge_sign;
    let charges: Vec<f64> = trace
        .species
        .iter()
        .map(|s| {
            let q = s.electrons * physchem::effective_charge_per_electron(s.charge_distance, ld)?;
            Ok(if s.charge_sign == reference { q } else { -q })
        })
        .collect::<Result<_>>()?;

    let mut mean_caps: HashMap<u64, transducer::CapacitanceBreakdown> = HashMap::new();
    let mut delta_vth = Vec::with_capacity(trace.len());
    for k in 0..trace.len() {
        let charge: f64 = trace.n_bound.iter().zip(&charges).map(|(n, q)| n[k] * q).sum();
        let caps = match options.capacitance {
            CapacitanceModel::MessageMean => *mean_caps.entry(trace.concentration[k].to_bits()).or_insert_with(|| {
                let pi = stationary(&trace.species, trace.concentration[k]);
                let mean_bound = rx.layer.receptor_count * pi[1..].iter().sum::<f64>();
                capacitances(mean_bound, &rx.transducer, &rx.pair, &rx.layer)
            }),
            CapacitanceModel::Instantaneous => {
                let total: f64 = trace.n_bound.iter().map(|n| n[k]).sum();
                capacitances(total, &rx.transducer, &rx.pair, &rx.layer)
            }
        };
        delta_vth.push(if charge == 0.0 { 0.0 } else { charge / caps.c_eq });
    }

    let n = trace.len();
    let nyquist = 0.5 / trace.dt;
    let lowest = 1.0 / trace.duration();
    let (f_lo, f_hi) = options.band.unwrap_or((lowest, nyquist));
    if options.noise.thermal || options.noise.flicker {
        if f_hi > nyquist * (1.0 + 1e-12) || f_lo < lowest * (1.0 - 1e-12) || f_lo >= f_hi {
            return Err(ModelError::Configuration(format!(
                "noise band [{f_lo}, {f_hi}] Hz lies outside the band [{lowest}, {nyquist}] Hz resolvable by this trace"
            )));
        }
    }
    if options.noise.thermal {
        let mean_c = trace.concentration.iter().sum::<f64>() / n as f64;
        let floor = noise::thermal_floor(rx);
        let rc = rx.transducer.layer_resistance * transducer::capacitances_at(mean_c, rx).c_eq_prime;
        let mut rng = stream_rng(trace.rng_seed, THERMAL_STREAM);
        let thermal = spectral::synthesize_noise(&mut rng, n, trace.dt, f_lo, f_hi, |f| {
            let x = 2.0 * std::f64::consts::PI * rc * f;
            floor / (1.0 + x * x)
        });
        delta_vth.iter_mut().zip(&thermal).for_each(|(v, t)| *v += t);
    }
    if options.noise.flicker {
        let coefficient = noise::flicker_coefficient(&rx.transducer, &rx.environment);
        let mut rng = stream_rng(trace.rng_seed, FLICKER_STREAM);
        let flicker = spectral::synthesize_noise(&mut rng, n, trace.dt, f_lo, f_hi, |f| coefficient / f);
        delta_vth.iter_mut().zip(&flicker).for_each(|(v, x)| *v += x);
    }

    let gain = transducer::response_direction(&rx.pair, &rx.transducer) * transducer::transconductance(&rx.transducer);
    trace.delta_ids = delta_vth.iter().map(|v| gain * v).collect();
    trace.delta_vth = delta_vth;
    Ok(trace)
}

/// Threshold decisions on the drain-current shift sampled at the end of each symbol.
///
/// Thresholds compare against `direction · ΔI_DS`, the current change in the
/// direction bound ligands push it, so they are positive for either doping.
pub fn demodulate_csk(trace: &Trace, schedule: &MessageSchedule, thresholds: &[f64], direction: f64) -> Result<Vec<usize>> {
    if !thresholds.windows(2).all(|w| w[1] > w[0]) || thresholds.iter().any(|t| !t.is_finite()) {
        return Err(ModelError::InvalidParameter {
            name: "thresholds",
            reason: "must be finite and strictly increasing".into(),
        });
    }
    if trace.delta_ids.len() != trace.len() {
        return Err(ModelError::Misaligned("trace has no synthesized output current".into()));
    }
    let per_symbol = steps_per_symbol(schedule, trace.dt).map_err(|e| ModelError::Misaligned(e.to_string()))?;
    if per_symbol != trace.steps_per_symbol || trace.len() != per_symbol * schedule.levels.len() {
        return Err(ModelError::Misaligned(format!(
            "{} symbols of {per_symbol} steps do not match a trace of {} steps",
            schedule.levels.len(),
            trace.len()
        )));
    }
    let first = schedule.start_time + trace.dt;
    if (trace.time[0] - first).abs() > 1e-9 * trace.dt.max(first.abs()) {
        return Err(ModelError::Misaligned(format!(
            "trace starts at {} s, schedule implies {first} s",
            trace.time[0]
        )));
    }
    Ok((0..schedule.levels.len())
        .map(|i| {
            let sample = direction * trace.delta_ids[(i + 1) * per_symbol - 1];
            thresholds.iter().filter(|&&t| sample > t).count()
        })
        .collect())
}

/// Decision thresholds halfway between the analytical current shifts of
/// adjacent alphabet levels (A, oriented as in [`demodulate_csk`]).
pub fn midpoint_thresholds(alphabet: &[f64], rx: &Receiver) -> Result<Vec<f64>> {
    let levels = alphabet
        .iter()
        .map(|&c| transducer::current_shift(c, rx))
        .collect::<Result<Vec<_>>>()?;
    Ok(levels.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect())
}

/// End-to-end symbol-error-rate experiment over iid equiprobable symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct SerExperiment {
    /// Concentration per symbol value, non-decreasing (molecules/m³)
    pub alphabet: Vec<f64>,
    pub symbol_rate: f64,
    pub n_symbols: usize,
    pub simulation: SimulationOptions,
    pub output: OutputOptions,
    pub interferers: Vec<InterfererSpecies>,
    /// Defaults to [`midpoint_thresholds`]
    pub thresholds: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SerEstimate {
    pub errors: usize,
    pub symbols: usize,
    pub rate: f64,
    /// Wilson 95 % interval
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Wilson score interval at 95 % confidence.
pub fn wilson_interval(errors: usize, trials: usize) -> (f64, f64) {
    let z = 1.959963984540054;
    let n = trials as f64;
    let p = errors as f64 / n;
    let denom = 1.0 + z * z / n;
    let center = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    let low = if errors == 0 { 0.0 } else { (center - half).max(0.0) };
    let high = if errors == trials { 1.0 } else { (center + half).min(1.0) };
    (low, high)
}

pub fn estimate_ser(experiment: &SerExperiment, rx: &Receiver, seed: u64) -> Result<SerEstimate> {
    if experiment.n_symbols < 100 {
        return Err(ModelError::InvalidParameter {
            name: "n_symbols",
            reason: format!("need at least 100 symbols, got {}", experiment.n_symbols),
        });
    }
    if experiment.alphabet.len() < 2 || !experiment.alphabet.windows(2).all(|w| w[1] >= w[0]) {
        return Err(ModelError::InvalidParameter {
            name: "alphabet",
            reason: "need at least two non-decreasing concentration levels".into(),
        });
    }
    let mut symbol_rng = stream_rng(seed, SYMBOL_STREAM);
    let sent: Vec<usize> = (0..experiment.n_symbols)
        .map(|_| symbol_rng.random_range(0..experiment.alphabet.len()))
        .collect();
    let schedule = MessageSchedule::new(
        sent.iter().map(|&i| experiment.alphabet[i]).collect(),
        experiment.symbol_rate,
        0.0,
    )?;
    let trace = simulate_occupancy(&schedule, &rx.pair, &rx.layer, &experiment.interferers, &experiment.simulation, seed)?;
    let trace = synthesize_output(trace, rx, &experiment.output)?;
    let thresholds = match &experiment.thresholds {
        Some(t) => t.clone(),
        None => midpoint_thresholds(&experiment.alphabet, rx)?,
    };
    let direction = transducer::response_direction(&rx.pair, &rx.transducer);
    let decided = demodulate_csk(&trace, &schedule, &thresholds, direction)?;
    let errors = sent.iter().zip(&decided).filter(|(a, b)| a != b).count();
    let (ci_low, ci_high) = wilson_interval(errors, sent.len());
    Ok(SerEstimate {
        errors,
        symbols: sent.len(),
        rate: errors as f64 / sent.len() as f64,
        ci_low,
        ci_high,
    })
}
