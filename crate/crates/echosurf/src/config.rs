//! Harness configuration: a flat, typed key-value text format with section
//! headers.
//!
//! ```text
//! # comment
//! [scenario]
//! ap_antennas = 2
//! atoms = 16
//!
//! [sweep]
//! atoms = 16,64
//! methods = rc,model_based
//! ```
//!
//! Every section and key is known ahead of time; unknown names are hard
//! errors with the offending line, as are type mismatches. Missing keys keep
//! their documented defaults.

use std::path::Path;

use crate::error::{Error, Result};
use crate::frames::Modulation;
use crate::metrics::{MethodTag, PowerModel};
use crate::surface::{ImpairmentKnob, ResistanceState, SurfaceMode};

/// FNV-1a of the raw config text; recorded with every result row.
pub fn config_hash(text: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// `[run]`: master seed and worker count.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSection {
    pub seed: u64,
    /// 0 = library default.
    pub threads: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { seed: 1, threads: 0 }
    }
}

/// `[scenario]`: channel geometry and statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSection {
    pub ap_antennas: usize,
    pub users: usize,
    pub atoms: usize,
    pub blockage: bool,
    pub reflect_k_factor: f64,
    pub path_loss_direct: f64,
    pub path_loss_forward: f64,
    pub path_loss_reflect: f64,
    pub innovation_rate: f64,
    pub noise_power: f64,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        Self {
            ap_antennas: 2,
            users: 1,
            atoms: 16,
            blockage: false,
            reflect_k_factor: 10.0,
            path_loss_direct: 1.0,
            path_loss_forward: 1.0,
            path_loss_reflect: 1.0,
            innovation_rate: 0.0,
            noise_power: 0.01,
        }
    }
}

/// `[surface]`: device profile, mode, codebook and impairment knob.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceSection {
    pub device: String,
    pub mode: SurfaceMode,
    pub phase_bits: u32,
    pub resistance_state: ResistanceState,
    pub sample_period: f64,
    pub two_stage: bool,
    /// Echo-state clamp applied to every memory coefficient.
    pub rho_max: f64,
    /// Direct overrides of the device table (applied when set).
    pub memory_coeff: Option<f64>,
    pub amplitude: Option<f64>,
    pub input_gain: Option<f64>,
    pub saturation: Option<f64>,
    pub knob: Option<ImpairmentKnob>,
}

impl Default for SurfaceSection {
    fn default() -> Self {
        Self {
            device: "rescap-default".into(),
            mode: SurfaceMode::Impaired,
            phase_bits: 2,
            resistance_state: ResistanceState::Lrs,
            sample_period: 1e-6,
            two_stage: false,
            rho_max: 0.95,
            memory_coeff: None,
            amplitude: None,
            input_gain: None,
            saturation: None,
            knob: None,
        }
    }
}

/// `[frame]`: layout and modulation.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSection {
    pub symbols: usize,
    pub dmrs_every: usize,
    pub csrs_every: usize,
    pub modulation: Modulation,
}

impl Default for FrameSection {
    fn default() -> Self {
        Self { symbols: 140, dmrs_every: 7, csrs_every: 0, modulation: Modulation::Qpsk }
    }
}

/// `[training]`: alternating-trainer knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSection {
    pub max_outer_iters: usize,
    pub inner_steps: usize,
    pub step_size: f64,
    pub ridge: f64,
    pub washout: usize,
    pub tol: f64,
    pub quantize_per_iter: bool,
    pub fd_step: f64,
}

impl Default for TrainingSection {
    fn default() -> Self {
        let d = crate::beamform::TrainOptions::default();
        Self {
            max_outer_iters: d.max_outer_iters,
            inner_steps: d.inner_steps,
            step_size: d.step_size,
            ridge: d.ridge,
            washout: d.washout,
            tol: d.tol,
            quantize_per_iter: d.quantize_per_iter,
            fd_step: d.fd_step,
        }
    }
}

/// `[sweep]`: grid axes, trial count and methods.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSection {
    pub atoms: Vec<usize>,
    pub snr_db: Vec<f64>,
    /// Memory coefficient of the impaired surface; 0 selects ideal hardware.
    pub impairment: Vec<f64>,
    /// CSI error power on the baseline, relative to each link's mean power;
    /// 0 selects perfect CSI.
    pub csi_error: Vec<f64>,
    pub trials: usize,
    pub methods: Vec<MethodTag>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            atoms: vec![16, 64],
            snr_db: vec![20.0],
            impairment: vec![0.3],
            csi_error: vec![1.0],
            trials: 50,
            methods: vec![MethodTag::Rc, MethodTag::ModelBased],
        }
    }
}

/// `[sounding]`: loopback evaluation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SoundingSection {
    pub pilot_len: usize,
    pub subset_size: usize,
    pub self_interference: f64,
    pub snr_db: Vec<f64>,
    pub smoothing: f64,
    pub sweeps: usize,
    pub trials: usize,
}

impl Default for SoundingSection {
    fn default() -> Self {
        Self {
            pilot_len: 8,
            subset_size: 4,
            self_interference: 0.0,
            snr_db: vec![0.0, 10.0, 20.0],
            smoothing: 0.5,
            sweeps: 5,
            trials: 200,
        }
    }
}

/// Fully parsed harness configuration.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct HarnessConfig {
    pub run: RunSection,
    pub scenario: ScenarioSection,
    pub surface: SurfaceSection,
    pub frame: FrameSection,
    pub training: TrainingSection,
    pub power: PowerModel,
    pub sweep: SweepSection,
    pub sounding: SoundingSection,
    /// Hash of the text this config was parsed from (0 for defaults).
    pub hash: u64,
}

fn cfg_err(line: usize, message: impl Into<String>) -> Error {
    Error::Config { line, message: message.into() }
}

struct Pair<'a> {
    line: usize,
    key: &'a str,
    value: &'a str,
}

fn parse_u64(p: &Pair) -> Result<u64> {
    p.value.parse().map_err(|_| cfg_err(p.line, format!("`{}` expects an unsigned integer, got `{}`", p.key, p.value)))
}

fn parse_usize(p: &Pair) -> Result<usize> {
    p.value.parse().map_err(|_| cfg_err(p.line, format!("`{}` expects an unsigned integer, got `{}`", p.key, p.value)))
}

fn parse_f64(p: &Pair) -> Result<f64> {
    let v: f64 = p
        .value
        .parse()
        .map_err(|_| cfg_err(p.line, format!("`{}` expects a number, got `{}`", p.key, p.value)))?;
    if !v.is_finite() {
        return Err(cfg_err(p.line, format!("`{}` must be finite", p.key)));
    }
    Ok(v)
}

fn parse_bool(p: &Pair) -> Result<bool> {
    match p.value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(cfg_err(p.line, format!("`{}` expects true or false, got `{}`", p.key, p.value))),
    }
}

fn parse_list<T>(p: &Pair, f: impl Fn(&str) -> Option<T>) -> Result<Vec<T>> {
    let items: Option<Vec<T>> = p.value.split(',').map(|s| f(s.trim())).collect();
    let items = items.ok_or_else(|| cfg_err(p.line, format!("`{}` has a malformed list entry in `{}`", p.key, p.value)))?;
    if items.is_empty() {
        return Err(cfg_err(p.line, format!("`{}` must not be empty", p.key)));
    }
    Ok(items)
}

/// Parses the text format. Unknown sections/keys, duplicate keys and type
/// errors are rejected with their line number.
pub fn parse_config(text: &str) -> Result<HarnessConfig> {
    let mut cfg = HarnessConfig::default();
    cfg.hash = config_hash(text);
    let mut section: Option<String> = None;
    let mut seen: std::collections::BTreeSet<(String, String)> = Default::default();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| cfg_err(line_no, "unterminated section header"))?
                .trim();
            match name {
                "run" | "scenario" | "surface" | "frame" | "training" | "power" | "sweep" | "sounding" => {
                    section = Some(name.to_string());
                }
                other => return Err(cfg_err(line_no, format!("unknown section `[{other}]`"))),
            }
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| cfg_err(line_no, format!("expected `key = value`, got `{line}`")))?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() {
            return Err(cfg_err(line_no, "empty key"));
        }
        if value.is_empty() {
            return Err(cfg_err(line_no, format!("`{key}` has no value")));
        }
        let sec = section
            .clone()
            .ok_or_else(|| cfg_err(line_no, format!("`{key}` appears before any [section]")))?;
        if !seen.insert((sec.clone(), key.to_string())) {
            return Err(cfg_err(line_no, format!("duplicate key `{key}` in [{sec}]")));
        }
        let p = Pair { line: line_no, key, value };
        apply_pair(&mut cfg, &sec, &p)?;
    }
    validate_config(&cfg)?;
    Ok(cfg)
}

fn apply_pair(cfg: &mut HarnessConfig, section: &str, p: &Pair) -> Result<()> {
    let unknown = || cfg_err(p.line, format!("unknown key `{}` in [{section}]", p.key));
    match section {
        "run" => match p.key {
            "seed" => cfg.run.seed = parse_u64(p)?,
            "threads" => cfg.run.threads = parse_usize(p)?,
            _ => return Err(unknown()),
        },
        "scenario" => match p.key {
            "ap_antennas" => cfg.scenario.ap_antennas = parse_usize(p)?,
            "users" => cfg.scenario.users = parse_usize(p)?,
            "atoms" => cfg.scenario.atoms = parse_usize(p)?,
            "blockage" => cfg.scenario.blockage = parse_bool(p)?,
            "reflect_k_factor" => cfg.scenario.reflect_k_factor = parse_f64(p)?,
            "path_loss_direct" => cfg.scenario.path_loss_direct = parse_f64(p)?,
            "path_loss_forward" => cfg.scenario.path_loss_forward = parse_f64(p)?,
            "path_loss_reflect" => cfg.scenario.path_loss_reflect = parse_f64(p)?,
            "innovation_rate" => cfg.scenario.innovation_rate = parse_f64(p)?,
            "noise_power" => cfg.scenario.noise_power = parse_f64(p)?,
            _ => return Err(unknown()),
        },
        "surface" => match p.key {
            "device" => {
                if crate::surface::DeviceProfile::by_name(p.value).is_none() {
                    return Err(cfg_err(p.line, format!("unknown device profile `{}`", p.value)));
                }
                cfg.surface.device = p.value.to_string();
            }
            "mode" => {
                cfg.surface.mode = match p.value {
                    "ideal" => SurfaceMode::Ideal,
                    "impaired" => SurfaceMode::Impaired,
                    other => return Err(cfg_err(p.line, format!("mode must be ideal|impaired, got `{other}`"))),
                }
            }
            "phase_bits" => cfg.surface.phase_bits = parse_u64(p)? as u32,
            "resistance_state" => {
                cfg.surface.resistance_state = match p.value {
                    "hrs" => ResistanceState::Hrs,
                    "lrs" => ResistanceState::Lrs,
                    other => return Err(cfg_err(p.line, format!("resistance_state must be hrs|lrs, got `{other}`"))),
                }
            }
            "sample_period" => cfg.surface.sample_period = parse_f64(p)?,
            "two_stage" => cfg.surface.two_stage = parse_bool(p)?,
            "rho_max" => cfg.surface.rho_max = parse_f64(p)?,
            "memory_coeff" => cfg.surface.memory_coeff = Some(parse_f64(p)?),
            "amplitude" => cfg.surface.amplitude = Some(parse_f64(p)?),
            "input_gain" => cfg.surface.input_gain = Some(parse_f64(p)?),
            "saturation" => cfg.surface.saturation = Some(parse_f64(p)?),
            "knob" => {
                // Level is attached by `knob_level`; store a zero-level knob.
                cfg.surface.knob = match p.value {
                    "none" => None,
                    "additive-noise" => Some(ImpairmentKnob::AdditiveNoise { power: 0.0 }),
                    "phase-error" => Some(ImpairmentKnob::PhaseError { concentration: 0.0 }),
                    other => {
                        return Err(cfg_err(
                            p.line,
                            format!("knob must be none|additive-noise|phase-error, got `{other}`"),
                        ))
                    }
                };
            }
            "knob_level" => {
                let level = parse_f64(p)?;
                cfg.surface.knob = match cfg.surface.knob {
                    Some(ImpairmentKnob::AdditiveNoise { .. }) => {
                        Some(ImpairmentKnob::AdditiveNoise { power: level })
                    }
                    Some(ImpairmentKnob::PhaseError { .. }) => {
                        Some(ImpairmentKnob::PhaseError { concentration: level })
                    }
                    None => {
                        return Err(cfg_err(p.line, "knob_level requires a preceding `knob` setting"))
                    }
                };
            }
            _ => return Err(unknown()),
        },
        "frame" => match p.key {
            "symbols" => cfg.frame.symbols = parse_usize(p)?,
            "dmrs_every" => cfg.frame.dmrs_every = parse_usize(p)?,
            "csrs_every" => cfg.frame.csrs_every = parse_usize(p)?,
            "modulation" => {
                cfg.frame.modulation = Modulation::from_name(p.value)
                    .ok_or_else(|| cfg_err(p.line, format!("modulation must be qpsk|16qam, got `{}`", p.value)))?;
            }
            _ => return Err(unknown()),
        },
        "training" => match p.key {
            "max_outer_iters" => cfg.training.max_outer_iters = parse_usize(p)?,
            "inner_steps" => cfg.training.inner_steps = parse_usize(p)?,
            "step_size" => cfg.training.step_size = parse_f64(p)?,
            "ridge" => cfg.training.ridge = parse_f64(p)?,
            "washout" => cfg.training.washout = parse_usize(p)?,
            "tol" => cfg.training.tol = parse_f64(p)?,
            "quantize_per_iter" => cfg.training.quantize_per_iter = parse_bool(p)?,
            "fd_step" => cfg.training.fd_step = parse_f64(p)?,
            _ => return Err(unknown()),
        },
        "power" => match p.key {
            "p_tx" => cfg.power.p_tx = parse_f64(p)?,
            "p_circuit_ap" => cfg.power.p_circuit_ap = parse_f64(p)?,
            "p_atom" => cfg.power.p_atom = parse_f64(p)?,
            "bandwidth" => cfg.power.bandwidth = parse_f64(p)?,
            _ => return Err(unknown()),
        },
        "sweep" => match p.key {
            "atoms" => cfg.sweep.atoms = parse_list(p, |s| s.parse::<usize>().ok())?,
            "snr_db" => cfg.sweep.snr_db = parse_list(p, |s| s.parse::<f64>().ok())?,
            "impairment" => cfg.sweep.impairment = parse_list(p, |s| s.parse::<f64>().ok())?,
            "csi_error" => cfg.sweep.csi_error = parse_list(p, |s| s.parse::<f64>().ok())?,
            "trials" => cfg.sweep.trials = parse_usize(p)?,
            "methods" => cfg.sweep.methods = parse_list(p, MethodTag::from_name)?,
            _ => return Err(unknown()),
        },
        "sounding" => match p.key {
            "pilot_len" => cfg.sounding.pilot_len = parse_usize(p)?,
            "subset_size" => cfg.sounding.subset_size = parse_usize(p)?,
            "self_interference" => cfg.sounding.self_interference = parse_f64(p)?,
            "snr_db" => cfg.sounding.snr_db = parse_list(p, |s| s.parse::<f64>().ok())?,
            "smoothing" => cfg.sounding.smoothing = parse_f64(p)?,
            "sweeps" => cfg.sounding.sweeps = parse_usize(p)?,
            "trials" => cfg.sounding.trials = parse_usize(p)?,
            _ => return Err(unknown()),
        },
        _ => unreachable!("section names were validated"),
    }
    Ok(())
}

fn validate_config(cfg: &HarnessConfig) -> Result<()> {
    let err = |m: &str| Error::Config { line: 0, message: m.into() };
    if cfg.scenario.ap_antennas == 0 || cfg.scenario.users == 0 || cfg.scenario.atoms == 0 {
        return Err(err("scenario dimensions must be >= 1"));
    }
    if cfg.scenario.noise_power < 0.0 {
        return Err(err("scenario noise_power must be >= 0"));
    }
    if cfg.surface.phase_bits == 0 || cfg.surface.phase_bits > 16 {
        return Err(err("surface phase_bits must be in 1..=16"));
    }
    if !(cfg.surface.rho_max > 0.0 && cfg.surface.rho_max < 1.0) {
        return Err(err("surface rho_max must be in (0, 1)"));
    }
    if let Some(a) = cfg.surface.memory_coeff {
        if !(0.0..1.0).contains(&a) {
            return Err(err("surface memory_coeff override must be in [0, 1)"));
        }
    }
    if cfg.frame.symbols == 0 || cfg.frame.dmrs_every == 0 {
        return Err(err("frame symbols and dmrs_every must be >= 1"));
    }
    if cfg.sweep.trials == 0 {
        return Err(err("sweep trials must be >= 1"));
    }
    if cfg.sweep.atoms.iter().any(|&n| n == 0) {
        return Err(err("sweep atoms entries must be >= 1"));
    }
    if cfg.sweep.impairment.iter().any(|&a| !(0.0..1.0).contains(&a)) {
        return Err(err("sweep impairment entries must be in [0, 1)"));
    }
    if cfg.sweep.csi_error.iter().any(|&e| e < 0.0) {
        return Err(err("sweep csi_error entries must be >= 0"));
    }
    if cfg.sounding.pilot_len == 0 || cfg.sounding.subset_size == 0 {
        return Err(err("sounding pilot_len and subset_size must be >= 1"));
    }
    if !(0.0..=1.0).contains(&cfg.sounding.smoothing) {
        return Err(err("sounding smoothing must be in [0, 1]"));
    }
    if cfg.sounding.sweeps == 0 || cfg.sounding.trials == 0 {
        return Err(err("sounding sweeps and trials must be >= 1"));
    }
    cfg.power.validate()?;
    Ok(())
}

/// Reads and parses a config file.
pub fn load_config(path: impl AsRef<Path>) -> Result<HarnessConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

impl HarnessConfig {
    /// Scenario for a given atom count and SNR (noise power `10^(-snr/10)`
    /// against unit-power symbols).
    pub fn scenario_for(&self, atoms: usize) -> crate::channel::ScenarioConfig {
        crate::channel::ScenarioConfig {
            ap_antennas: self.scenario.ap_antennas,
            atoms,
            users: self.scenario.users,
            blockage: self.scenario.blockage,
            reflect_k_factor: self.scenario.reflect_k_factor,
            path_loss_direct: self.scenario.path_loss_direct,
            path_loss_forward: self.scenario.path_loss_forward,
            path_loss_reflect: self.scenario.path_loss_reflect,
            innovation_rate: self.scenario.innovation_rate,
        }
    }

    /// Builds the surface for `atoms` atoms. `impairment` overrides the
    /// memory coefficient; 0 selects the ideal diagonal model with unit
    /// amplitude.
    pub fn surface_for(&self, atoms: usize, impairment: f64) -> Result<crate::surface::SurfaceConfig> {
        use crate::surface::{AtomParams, PhaseCodebook, SurfaceConfig};
        let codebook = PhaseCodebook::new(self.surface.phase_bits)?;
        let profile = crate::surface::DeviceProfile::by_name(&self.surface.device)
            .ok_or_else(|| Error::invalid(format!("unknown device profile `{}`", self.surface.device)))?;
        let base = profile.atom_params(self.surface.resistance_state, self.surface.sample_period)?;
        let params = if impairment == 0.0 {
            AtomParams::with_memory(
                0.0,
                self.surface.sample_period,
                self.surface.input_gain.unwrap_or(base.input_gain),
                1.0,
                1e9,
            )?
        } else {
            AtomParams::with_memory(
                self.surface.memory_coeff.unwrap_or(impairment),
                self.surface.sample_period,
                self.surface.input_gain.unwrap_or(base.input_gain),
                self.surface.amplitude.unwrap_or(base.amplitude),
                self.surface.saturation.unwrap_or(base.saturation),
            )?
        };
        let mode = if impairment == 0.0 { SurfaceMode::Ideal } else { SurfaceMode::Impaired };
        let params = crate::reservoir::enforce_esp(&[params], self.surface.rho_max)?.remove(0);
        let mut cfg = SurfaceConfig::uniform(atoms, params, codebook, mode)?;
        cfg.two_stage = self.surface.two_stage && impairment > 0.0;
        Ok(cfg)
    }

    /// Frame layout for this config's stream count.
    pub fn frame_config(&self, seed: u64) -> Result<crate::frames::FrameConfig> {
        crate::frames::FrameConfig::periodic(
            self.frame.symbols,
            self.scenario.users,
            self.frame.dmrs_every,
            self.frame.csrs_every,
            self.frame.modulation,
            seed,
        )
    }

    pub fn train_options(&self, seed: u64) -> crate::beamform::TrainOptions {
        crate::beamform::TrainOptions {
            max_outer_iters: self.training.max_outer_iters,
            inner_steps: self.training.inner_steps,
            step_size: self.training.step_size,
            ridge: self.training.ridge,
            tol: self.training.tol,
            washout: self.training.washout,
            seed,
            quantize_per_iter: self.training.quantize_per_iter,
            fd_step: self.training.fd_step,
        }
    }
}
