//! Three-part channel model for the reflecting-surface uplink.
//!
//! The link between mobile stations (MSs) and the access point (AP) is split
//! into a forward channel (MS -> surface), a reflecting channel
//! (surface -> AP) and a direct channel (MS -> AP). MS-side links fade as
//! i.i.d. Rayleigh and evolve by a first-order Gauss-Markov recursion; the
//! AP-surface link is static and drawn once as Rician with configurable
//! K-factor. Path loss enters as a per-link power scalar.
//!
//! All generators are pure functions of `(config, seed)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::seed;

/// One circularly-symmetric complex Gaussian draw with mean power `power`.
pub(crate) fn draw_cn(rng: &mut ChaCha8Rng, power: f64) -> Complex64 {
    let s = (power / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// Matrix of i.i.d. complex Gaussian entries, row-major draw order.
pub(crate) fn cn_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, power: f64) -> DMatrix<Complex64> {
    let mut m = DMatrix::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            m[(r, c)] = draw_cn(rng, power);
        }
    }
    m
}

/// Scenario geometry and statistics consumed by [`make_channel_set`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// AP antenna count (M).
    pub ap_antennas: usize,
    /// Meta-atom count (N).
    pub atoms: usize,
    /// Mobile-station count (K).
    pub users: usize,
    /// Direct MS->AP path blocked.
    pub blockage: bool,
    /// Rician K-factor of the static AP-surface link.
    pub reflect_k_factor: f64,
    /// Per-link mean power multipliers.
    pub path_loss_direct: f64,
    pub path_loss_forward: f64,
    pub path_loss_reflect: f64,
    /// Gauss-Markov innovation rate for MS-side links, in [0, 1].
    pub innovation_rate: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            ap_antennas: 1,
            atoms: 16,
            users: 1,
            blockage: false,
            reflect_k_factor: 10.0,
            path_loss_direct: 1.0,
            path_loss_forward: 1.0,
            path_loss_reflect: 1.0,
            innovation_rate: 0.0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ap_antennas == 0 || self.atoms == 0 || self.users == 0 {
            return Err(Error::invalid(
                "scenario requires at least one AP antenna, one atom and one user",
            ));
        }
        if self.reflect_k_factor < 0.0 {
            return Err(Error::invalid("reflect_k_factor must be >= 0"));
        }
        for (name, v) in [
            ("path_loss_direct", self.path_loss_direct),
            ("path_loss_forward", self.path_loss_forward),
            ("path_loss_reflect", self.path_loss_reflect),
        ] {
            if !(v >= 0.0) {
                return Err(Error::invalid(format!("{name} must be >= 0, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.innovation_rate) {
            return Err(Error::invalid("innovation_rate must be in [0, 1]"));
        }
        Ok(())
    }
}

/// The three channel matrices plus what [`evolve`] needs to refresh them.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// Direct MS->AP channel, `ap_antennas x users`. All-zero under blockage.
    pub h_direct: DMatrix<Complex64>,
    /// Forward MS->surface channel, `atoms x users`.
    pub h_forward: DMatrix<Complex64>,
    /// Reflecting surface->AP channel, `ap_antennas x atoms`. Static.
    pub h_reflect: DMatrix<Complex64>,
    /// Direct path blocked (h_direct pinned to zero).
    pub blockage: bool,
    /// Gauss-Markov innovation rate for MS-side links.
    pub innovation_rate: f64,
    /// Per-entry mean power of fresh direct-link draws.
    pub power_direct: f64,
    /// Per-entry mean power of fresh forward-link draws.
    pub power_forward: f64,
}

impl ChannelSet {
    pub fn ap_antennas(&self) -> usize {
        self.h_direct.nrows()
    }

    pub fn atoms(&self) -> usize {
        self.h_reflect.ncols()
    }

    pub fn users(&self) -> usize {
        self.h_direct.ncols()
    }

    /// Checks the type invariants: blockage pins `h_direct` to zero, all
    /// entries finite, shapes consistent.
    pub fn validate(&self) -> Result<()> {
        if self.h_forward.ncols() != self.users() {
            return Err(Error::dims("h_forward user count != h_direct user count"));
        }
        if self.h_forward.nrows() != self.atoms() {
            return Err(Error::dims("h_forward atom count != h_reflect atom count"));
        }
        if self.h_reflect.nrows() != self.ap_antennas() {
            return Err(Error::dims("h_reflect antenna count != h_direct antenna count"));
        }
        if self.blockage && self.h_direct.iter().any(|z| z.norm_sqr() != 0.0) {
            return Err(Error::InternalConsistency(
                "blockage set but h_direct has nonzero entries".into(),
            ));
        }
        let finite = |m: &DMatrix<Complex64>| m.iter().all(|z| z.re.is_finite() && z.im.is_finite());
        if !finite(&self.h_direct) || !finite(&self.h_forward) || !finite(&self.h_reflect) {
            return Err(Error::InternalConsistency("channel matrix has NaN/Inf entries".into()));
        }
        if !(0.0..=1.0).contains(&self.innovation_rate) {
            return Err(Error::invalid("innovation_rate must be in [0, 1]"));
        }
        Ok(())
    }
}

/// I.i.d. Rayleigh-fading matrix with per-entry mean power `power`.
pub fn gen_rayleigh(rows: usize, cols: usize, power: f64, seed: u64) -> Result<DMatrix<Complex64>> {
    if rows == 0 || cols == 0 {
        return Err(Error::invalid("matrix dimensions must be >= 1"));
    }
    if power < 0.0 {
        return Err(Error::invalid(format!("power must be >= 0, got {power}")));
    }
    let mut rng = seed::rng(seed);
    Ok(cn_matrix(&mut rng, rows, cols, power))
}

/// Rician-fading matrix with unit per-entry mean power.
///
/// Each entry is `sqrt(K/(K+1))` times a deterministic unit-modulus LOS term
/// (phase drawn from `los_phase_seed`) plus `sqrt(1/(K+1))` times a Rayleigh
/// term drawn from `seed`.
pub fn gen_rician(
    rows: usize,
    cols: usize,
    k_factor: f64,
    los_phase_seed: u64,
    seed: u64,
) -> Result<DMatrix<Complex64>> {
    if rows == 0 || cols == 0 {
        return Err(Error::invalid("matrix dimensions must be >= 1"));
    }
    if k_factor < 0.0 {
        return Err(Error::invalid(format!("k_factor must be >= 0, got {k_factor}")));
    }
    let los_scale = (k_factor / (k_factor + 1.0)).sqrt();
    let nlos_power = 1.0 / (k_factor + 1.0);
    let mut los_rng = seed::rng(los_phase_seed);
    let mut nlos_rng = seed::rng(seed);
    let mut m = DMatrix::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            let phase: f64 = los_rng.random_range(0.0..TAU);
            let los = Complex64::from_polar(los_scale, phase);
            m[(r, c)] = los + draw_cn(&mut nlos_rng, nlos_power);
        }
    }
    Ok(m)
}

/// Draws a full [`ChannelSet`] for the scenario.
pub fn make_channel_set(cfg: &ScenarioConfig, seed: u64) -> Result<ChannelSet> {
    cfg.validate()?;
    let h_direct = if cfg.blockage {
        DMatrix::zeros(cfg.ap_antennas, cfg.users)
    } else {
        gen_rayleigh(cfg.ap_antennas, cfg.users, cfg.path_loss_direct, seed::derive(seed, 1))?
    };
    let h_forward = gen_rayleigh(cfg.atoms, cfg.users, cfg.path_loss_forward, seed::derive(seed, 2))?;
    let h_reflect = gen_rician(
        cfg.ap_antennas,
        cfg.atoms,
        cfg.reflect_k_factor,
        seed::derive(seed, 3),
        seed::derive(seed, 4),
    )? * Complex64::new(cfg.path_loss_reflect.sqrt(), 0.0);
    let set = ChannelSet {
        h_direct,
        h_forward,
        h_reflect,
        blockage: cfg.blockage,
        innovation_rate: cfg.innovation_rate,
        power_direct: cfg.path_loss_direct,
        power_forward: cfg.path_loss_forward,
    };
    set.validate()?;
    Ok(set)
}

/// One Gauss-Markov step of the MS-side links:
/// `h <- sqrt(1 - rho^2) * h + rho * fresh`, with `fresh` a same-power draw.
/// The reflecting link and the blockage flag are untouched.
pub fn evolve(set: &ChannelSet, seed: u64) -> ChannelSet {
    let rho = set.innovation_rate;
    let keep = (1.0 - rho * rho).sqrt();
    let mut out = set.clone();
    if rho == 0.0 {
        return out;
    }
    let mut rng_d = seed::rng(seed::derive(seed, 1));
    let mut rng_f = seed::rng(seed::derive(seed, 2));
    if !set.blockage {
        let fresh = cn_matrix(&mut rng_d, set.h_direct.nrows(), set.h_direct.ncols(), set.power_direct);
        out.h_direct = out.h_direct.map(|z| z * keep) + fresh * Complex64::new(rho, 0.0);
    }
    let fresh = cn_matrix(&mut rng_f, set.h_forward.nrows(), set.h_forward.ncols(), set.power_forward);
    out.h_forward = out.h_forward.map(|z| z * keep) + fresh * Complex64::new(rho, 0.0);
    out
}
