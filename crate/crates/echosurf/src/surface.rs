//! Meta-surface reflection models.
//!
//! Two modes are implemented:
//!
//! * **ideal** — the conventional diagonal model: atom `n` multiplies its
//!   incident sample by `a_n * exp(j*theta_n)`, with no state and no
//!   cross-atom coupling.
//! * **impaired** — a per-atom discrete-time state equation derived from the
//!   switched resistor-capacitor realization. With symbol period `T_s` and
//!   time constant `R*C`, the memory coefficient is
//!   `alpha = exp(-T_s / (R*C))`, and each atom evolves as
//!
//!   ```text
//!   z[t]     = alpha * s[t-1] + beta * u[t]
//!   s[t]     = f(z[t])                  f(z) = tanh(|z|/p) * p * e^{j arg z}
//!   out[t]   = a * e^{j theta} * s[t]
//!   ```
//!
//!   The activation saturates the magnitude at `p = p_sat` and preserves the
//!   phase, with `f(0) = 0`. It is 1-Lipschitz, which together with
//!   `alpha < 1` gives the fading-memory behaviour the reservoir view relies
//!   on. HRS/LRS device states (and the FeFET/ReRAM variants) enter as
//!   alternative `(alpha, a)` tables.
//!
//! Impairment knobs used by the model-based analysis (additive per-atom
//! Gaussian distortion, von Mises phase errors) live here as well.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{PI, TAU};

use crate::channel::draw_cn;
use crate::error::{Error, Result};
use crate::seed;

/// Magnitude-saturating, phase-preserving activation shared with the
/// reservoir view of the link.
pub fn saturate(z: Complex64, p_sat: f64) -> Complex64 {
    let r = z.norm();
    if r == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    z * (p_sat * (r / p_sat).tanh() / r)
}

/// Per-atom device parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomParams {
    /// Selected resistance, ohms. Zero encodes a zero time constant
    /// (memoryless atom).
    pub resistance: f64,
    /// Capacitance, farads.
    pub capacitance: f64,
    /// Symbol duration `T_s`, seconds.
    pub sample_period: f64,
    /// `alpha = exp(-T_s / (R*C))`, in [0, 1).
    pub memory_coeff: f64,
    /// Input coupling `beta > 0`.
    pub input_gain: f64,
    /// Reflection magnitude `a` in (0, 1]; the dissipation of the selected
    /// resistance state.
    pub amplitude: f64,
    /// Saturation level `p_sat > 0` of the activation.
    pub saturation: f64,
}

impl AtomParams {
    /// Builds parameters from circuit values; `alpha` is derived.
    pub fn from_rc(
        resistance: f64,
        capacitance: f64,
        sample_period: f64,
        input_gain: f64,
        amplitude: f64,
        saturation: f64,
    ) -> Result<Self> {
        if resistance < 0.0 || capacitance <= 0.0 || sample_period <= 0.0 {
            return Err(Error::invalid("resistance >= 0, capacitance > 0, sample_period > 0 required"));
        }
        let memory_coeff = if resistance == 0.0 {
            0.0
        } else {
            (-sample_period / (resistance * capacitance)).exp()
        };
        let p = Self {
            resistance,
            capacitance,
            sample_period,
            memory_coeff,
            input_gain,
            amplitude,
            saturation,
        };
        p.validate()?;
        Ok(p)
    }

    /// Builds parameters from a target memory coefficient; the resistance is
    /// back-computed against a nominal capacitance so the circuit fields stay
    /// consistent with `alpha`.
    pub fn with_memory(
        memory_coeff: f64,
        sample_period: f64,
        input_gain: f64,
        amplitude: f64,
        saturation: f64,
    ) -> Result<Self> {
        if !(0.0..1.0).contains(&memory_coeff) {
            return Err(Error::invalid(format!("memory_coeff must be in [0, 1), got {memory_coeff}")));
        }
        if sample_period <= 0.0 {
            return Err(Error::invalid("sample_period must be > 0"));
        }
        let capacitance = 1e-9;
        let resistance = if memory_coeff == 0.0 {
            0.0
        } else {
            -sample_period / (capacitance * memory_coeff.ln())
        };
        let p = Self {
            resistance,
            capacitance,
            sample_period,
            memory_coeff,
            input_gain,
            amplitude,
            saturation,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.memory_coeff) {
            return Err(Error::invalid(format!(
                "memory_coeff must be in [0, 1) for echo-state safety, got {}",
                self.memory_coeff
            )));
        }
        if !(self.amplitude > 0.0 && self.amplitude <= 1.0) {
            return Err(Error::invalid(format!(
                "amplitude must be in (0, 1] (passive surface), got {}",
                self.amplitude
            )));
        }
        if self.input_gain <= 0.0 {
            return Err(Error::invalid("input_gain must be > 0"));
        }
        if self.saturation <= 0.0 {
            return Err(Error::invalid("saturation must be > 0"));
        }
        Ok(())
    }
}

/// Resistance state of a switched atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResistanceState {
    Hrs,
    Lrs,
}

/// Named `(alpha, a)` tables for the supported device realizations.
///
/// The circuit values are documented defaults, not measured data; everything
/// is overridable from the harness config.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceProfile {
    pub name: String,
    pub r_hrs: f64,
    pub r_lrs: f64,
    pub capacitance: f64,
    pub a_hrs: f64,
    pub a_lrs: f64,
    pub input_gain: f64,
    pub saturation: f64,
}

impl DeviceProfile {
    /// Looks up a built-in profile: `rescap-default`, `fefet-like`,
    /// `reram-like`.
    pub fn by_name(name: &str) -> Option<Self> {
        let p = match name {
            "rescap-default" => Self {
                name: name.into(),
                r_hrs: 1.0e4,
                r_lrs: 1.0e3,
                capacitance: 1.0e-9,
                a_hrs: 0.85,
                a_lrs: 0.95,
                input_gain: 1.0,
                saturation: 1.0,
            },
            // FeFET switches capacitance rather than resistance; the table
            // realizes the same (alpha, a) abstraction.
            "fefet-like" => Self {
                name: name.into(),
                r_hrs: 5.0e3,
                r_lrs: 5.0e2,
                capacitance: 1.0e-9,
                a_hrs: 0.90,
                a_lrs: 0.97,
                input_gain: 1.0,
                saturation: 1.0,
            },
            "reram-like" => Self {
                name: name.into(),
                r_hrs: 2.0e4,
                r_lrs: 2.0e3,
                capacitance: 5.0e-10,
                a_hrs: 0.80,
                a_lrs: 0.92,
                input_gain: 1.0,
                saturation: 1.0,
            },
            _ => return None,
        };
        Some(p)
    }

    /// Atom parameters for one resistance state at the given symbol period.
    pub fn atom_params(&self, state: ResistanceState, sample_period: f64) -> Result<AtomParams> {
        let (r, a) = match state {
            ResistanceState::Hrs => (self.r_hrs, self.a_hrs),
            ResistanceState::Lrs => (self.r_lrs, self.a_lrs),
        };
        AtomParams::from_rc(r, self.capacitance, sample_period, self.input_gain, a, self.saturation)
    }
}

/// The `2^b` uniformly spaced phases an atom can be programmed to.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseCodebook {
    pub bits: u32,
    pub phases: Vec<f64>,
}

impl PhaseCodebook {
    pub fn new(bits: u32) -> Result<Self> {
        if bits == 0 || bits > 16 {
            return Err(Error::invalid(format!("codebook bits must be in 1..=16, got {bits}")));
        }
        let n = 1usize << bits;
        let phases = (0..n).map(|k| TAU * k as f64 / n as f64).collect();
        Ok(Self { bits, phases })
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }
}

/// Nearest codebook phase by circular distance; ties go to the lower index.
pub fn quantize_phase(theta: f64, cb: &PhaseCodebook) -> (usize, f64) {
    let mut best_idx = 0usize;
    let mut best_dist = f64::INFINITY;
    for (k, &phi) in cb.phases.iter().enumerate() {
        let mut d = (theta - phi) % TAU;
        if d > PI {
            d -= TAU;
        } else if d < -PI {
            d += TAU;
        }
        let dist = d.abs();
        if dist < best_dist {
            best_dist = dist;
            best_idx = k;
        }
    }
    (best_idx, cb.phases[best_idx])
}

/// Ideal vs stateful reflection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurfaceMode {
    Ideal,
    Impaired,
}

/// Full programmable state of the surface.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceConfig {
    pub atoms: Vec<AtomParams>,
    pub phase_idx: Vec<usize>,
    pub codebook: PhaseCodebook,
    pub mode: SurfaceMode,
    /// Cascade two identical (alpha, beta) stages per atom (second-order
    /// variant). Off by default.
    pub two_stage: bool,
}

impl SurfaceConfig {
    pub fn new(
        atoms: Vec<AtomParams>,
        phase_idx: Vec<usize>,
        codebook: PhaseCodebook,
        mode: SurfaceMode,
    ) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::invalid("surface needs at least one atom"));
        }
        if atoms.len() != phase_idx.len() {
            return Err(Error::dims("atoms and phase_idx lengths differ"));
        }
        for p in &atoms {
            p.validate()?;
        }
        if let Some(&bad) = phase_idx.iter().find(|&&i| i >= codebook.len()) {
            return Err(Error::invalid(format!("phase index {bad} outside codebook of {}", codebook.len())));
        }
        Ok(Self { atoms, phase_idx, codebook, mode, two_stage: false })
    }

    /// Same parameters for every atom, phases all at codebook index 0.
    pub fn uniform(n: usize, params: AtomParams, codebook: PhaseCodebook, mode: SurfaceMode) -> Result<Self> {
        Self::new(vec![params; n], vec![0; n], codebook, mode)
    }

    pub fn n_atoms(&self) -> usize {
        self.atoms.len()
    }

    /// Decoded per-atom phases.
    pub fn phases(&self) -> Vec<f64> {
        self.phase_idx.iter().map(|&i| self.codebook.phases[i]).collect()
    }

    /// Replaces the programmed phases by the quantization of `continuous`.
    pub fn quantized_from(&self, continuous: &[f64]) -> Result<(Self, Vec<usize>)> {
        if continuous.len() != self.n_atoms() {
            return Err(Error::dims("phase vector length != atom count"));
        }
        let idx: Vec<usize> = continuous.iter().map(|&t| quantize_phase(t, &self.codebook).0).collect();
        let mut cfg = self.clone();
        cfg.phase_idx = idx.clone();
        Ok((cfg, idx))
    }

    pub fn max_memory_coeff(&self) -> f64 {
        self.atoms.iter().map(|p| p.memory_coeff).fold(0.0, f64::max)
    }
}

/// Per-atom internal memory. `second` is populated only for two-stage
/// surfaces.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomState {
    pub values: Vec<Complex64>,
    pub second: Option<Vec<Complex64>>,
}

impl AtomState {
    pub fn zeros(n: usize, two_stage: bool) -> Self {
        Self {
            values: vec![Complex64::new(0.0, 0.0); n],
            second: two_stage.then(|| vec![Complex64::new(0.0, 0.0); n]),
        }
    }

    pub fn for_config(cfg: &SurfaceConfig) -> Self {
        Self::zeros(cfg.n_atoms(), cfg.two_stage)
    }

    pub fn reset(&mut self) {
        self.values.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        if let Some(s) = &mut self.second {
            s.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        }
    }

    pub fn norm(&self) -> f64 {
        let a: f64 = self.values.iter().map(|z| z.norm_sqr()).sum();
        let b: f64 = self.second.as_ref().map_or(0.0, |s| s.iter().map(|z| z.norm_sqr()).sum());
        (a + b).sqrt()
    }
}

/// Diagonal reflection of the ideal model: `out_n = a_n e^{j theta_n} u_n`.
pub fn ideal_reflect(config: &SurfaceConfig, incident: &[Complex64]) -> Result<Vec<Complex64>> {
    if config.mode != SurfaceMode::Ideal {
        return Err(Error::UnsupportedConfiguration("ideal_reflect requires mode = ideal".into()));
    }
    let phases = config.phases();
    ideal_reflect_with_phases(config, &phases, incident)
}

pub(crate) fn ideal_reflect_with_phases(
    config: &SurfaceConfig,
    phases: &[f64],
    incident: &[Complex64],
) -> Result<Vec<Complex64>> {
    if incident.len() != config.n_atoms() || phases.len() != config.n_atoms() {
        return Err(Error::dims(format!(
            "incident length {} != atom count {}",
            incident.len(),
            config.n_atoms()
        )));
    }
    Ok(config
        .atoms
        .iter()
        .zip(phases.iter().zip(incident.iter()))
        .map(|(p, (&theta, &u))| Complex64::from_polar(p.amplitude, theta) * u)
        .collect())
}

/// One state update of a single impaired atom. Returns `(new_state,
/// reflected)`.
pub fn atom_step(
    state: Complex64,
    incident: Complex64,
    p: &AtomParams,
    theta: f64,
) -> (Complex64, Complex64) {
    let z = state * p.memory_coeff + incident * p.input_gain;
    let new_state = saturate(z, p.saturation);
    let reflected = Complex64::from_polar(p.amplitude, theta) * new_state;
    (new_state, reflected)
}

/// Advances the whole surface one symbol. Atoms are independent; ideal mode
/// bypasses the state entirely.
pub fn surface_step(
    state: &mut AtomState,
    incident: &[Complex64],
    config: &SurfaceConfig,
) -> Result<Vec<Complex64>> {
    let phases = config.phases();
    surface_step_with_phases(state, incident, config, &phases)
}

/// As [`surface_step`] but with explicit (possibly unquantized) phases; used
/// by the trainers.
pub fn surface_step_with_phases(
    state: &mut AtomState,
    incident: &[Complex64],
    config: &SurfaceConfig,
    phases: &[f64],
) -> Result<Vec<Complex64>> {
    if config.mode == SurfaceMode::Ideal {
        return ideal_reflect_with_phases(config, phases, incident);
    }
    if incident.len() != config.n_atoms()
        || state.values.len() != config.n_atoms()
        || phases.len() != config.n_atoms()
    {
        return Err(Error::dims("surface_step operand lengths disagree"));
    }
    let n = config.n_atoms();
    let mut reflected = vec![Complex64::new(0.0, 0.0); n];
    if config.two_stage {
        let second = state
            .second
            .as_mut()
            .ok_or_else(|| Error::InternalConsistency("two-stage surface without second state bank".into()))?;
        for i in 0..n {
            let p = &config.atoms[i];
            let (s1, _) = atom_step(state.values[i], incident[i], p, phases[i]);
            state.values[i] = s1;
            let (s2, out) = atom_step(second[i], s1, p, phases[i]);
            second[i] = s2;
            reflected[i] = out;
        }
    } else {
        for i in 0..n {
            let p = &config.atoms[i];
            let (s, out) = atom_step(state.values[i], incident[i], p, phases[i]);
            state.values[i] = s;
            reflected[i] = out;
        }
    }
    Ok(reflected)
}

/// Hardware-impairment knobs of the model-based analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ImpairmentKnob {
    /// I.i.d. complex Gaussian distortion of the stated power, added to each
    /// atom's reflected sample every symbol.
    AdditiveNoise { power: f64 },
    /// Zero-mean von Mises perturbation of each programmed phase, drawn once
    /// and held for the frame.
    PhaseError { concentration: f64 },
}

/// Materialized impairment: fixed per-frame phase offsets plus a per-symbol
/// distortion hook.
#[derive(Debug, Clone, PartialEq)]
pub struct Impairment {
    pub phase_offsets: Vec<f64>,
    pub noise_power: f64,
}

impl Impairment {
    pub fn none(n: usize) -> Self {
        Self { phase_offsets: vec![0.0; n], noise_power: 0.0 }
    }

    /// Adds the per-symbol distortion to a reflected vector.
    pub fn distort(&self, rng: &mut ChaCha8Rng, reflected: &mut [Complex64]) {
        if self.noise_power == 0.0 {
            return;
        }
        for r in reflected.iter_mut() {
            *r += draw_cn(rng, self.noise_power);
        }
    }
}

/// Instantiates an impairment for `config`. Additive mode keeps the phases
/// and returns a distortion power; phase-error mode draws one von Mises
/// offset per atom from `seed`.
pub fn apply_impairment(
    config: &SurfaceConfig,
    knob: ImpairmentKnob,
    seed: u64,
) -> Result<(SurfaceConfig, Impairment)> {
    let n = config.n_atoms();
    match knob {
        ImpairmentKnob::AdditiveNoise { power } => {
            if power < 0.0 {
                return Err(Error::invalid(format!("distortion power must be >= 0, got {power}")));
            }
            Ok((config.clone(), Impairment { phase_offsets: vec![0.0; n], noise_power: power }))
        }
        ImpairmentKnob::PhaseError { concentration } => {
            if concentration < 0.0 {
                return Err(Error::invalid(format!("concentration must be >= 0, got {concentration}")));
            }
            let mut rng = seed::rng(seed);
            let offsets = (0..n).map(|_| sample_von_mises(concentration, &mut rng)).collect();
            Ok((config.clone(), Impairment { phase_offsets: offsets, noise_power: 0.0 }))
        }
    }
}

/// Zero-mean von Mises draw by the Best-Fisher rejection method. Degenerates
/// to uniform on (-pi, pi] at zero concentration.
fn sample_von_mises(kappa: f64, rng: &mut ChaCha8Rng) -> f64 {
    if kappa < 1e-8 {
        return rng.random_range(-PI..PI);
    }
    let a = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
    let b = (a - (2.0 * a).sqrt()) / (2.0 * kappa);
    let r = (1.0 + b * b) / (2.0 * b);
    loop {
        let u1: f64 = rng.random();
        let z = (PI * u1).cos();
        let f = (1.0 + r * z) / (r + z);
        let c = kappa * (r - f);
        let u2: f64 = rng.random();
        if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
            let u3: f64 = rng.random();
            let angle = f.clamp(-1.0, 1.0).acos();
            return if u3 >= 0.5 { angle } else { -angle };
        }
    }
}
