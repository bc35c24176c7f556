//! AP-surface channel acquisition by full-duplex loopback.
//!
//! The AP transmits an orthogonal pilot while one atom at a time reflects it
//! back, so each measurement observes the rank-1 back-and-forth product
//! `phi_n * g_n * g_n^T` (transpose, not adjoint: the return path of a
//! passive reflector is the transposed-reciprocal channel). De-piloting and
//! an anchor-based rank-1 factorization recover `g_n` up to a global sign
//! per atom — inherent to observing `g g^T` — which downstream phase
//! designs absorb. A round-robin scheduler traverses atom subsets until the
//! full matrix is estimated, blending sweeps through an exponential
//! smoother, and a principal-angle detector scores subspace variation
//! between consecutive measurements.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::TAU;

use crate::channel::draw_cn;
use crate::error::{Error, Result};
use crate::seed;

/// Loopback protocol parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SoundingConfig {
    /// Pilot length L (>= AP antenna count).
    pub pilot_len: usize,
    /// Atoms visited per round-robin turn.
    pub subset_size: usize,
    /// Receiver noise power during loopback.
    pub noise_power: f64,
    /// Residual self-interference power after cancellation.
    pub self_interference_power: f64,
    /// Sweep blending weight beta in [0, 1]; new estimate weight.
    pub smoothing: f64,
    pub seed: u64,
}

impl Default for SoundingConfig {
    fn default() -> Self {
        Self {
            pilot_len: 8,
            subset_size: 4,
            noise_power: 0.0,
            self_interference_power: 0.0,
            smoothing: 1.0,
            seed: 0,
        }
    }
}

impl SoundingConfig {
    pub fn validate(&self, ap_antennas: usize) -> Result<()> {
        if self.pilot_len < ap_antennas {
            return Err(Error::invalid(format!(
                "pilot length {} must cover all {ap_antennas} AP antennas",
                self.pilot_len
            )));
        }
        if self.subset_size == 0 {
            return Err(Error::invalid("subset_size must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.smoothing) {
            return Err(Error::invalid("smoothing must be in [0, 1]"));
        }
        if self.noise_power < 0.0 || self.self_interference_power < 0.0 {
            return Err(Error::invalid("noise powers must be >= 0"));
        }
        Ok(())
    }
}

/// One atom's recovered AP-side channel.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomChannelEstimate {
    pub g_hat: DVector<Complex64>,
    /// The estimate is defined up to a global +- sign.
    pub sign_ambiguous: bool,
    /// `|| A_hat - g_hat g_hat^T ||_F`: rank-1 model violation.
    pub residual: f64,
}

/// Orthogonal-row pilot with equal row power: DFT rows with a seeded random
/// column phase twist, so `S S^H = L I` exactly.
pub fn gen_csrs(ap_antennas: usize, pilot_len: usize, seed_val: u64) -> Result<DMatrix<Complex64>> {
    if ap_antennas == 0 {
        return Err(Error::invalid("need at least one AP antenna"));
    }
    if pilot_len < ap_antennas {
        return Err(Error::invalid(format!(
            "pilot length {pilot_len} shorter than antenna count {ap_antennas}"
        )));
    }
    let mut rng = seed::rng(seed_val);
    let twists: Vec<Complex64> =
        (0..pilot_len).map(|_| Complex64::from_polar(1.0, rng.random_range(0.0..TAU))).collect();
    let mut s = DMatrix::zeros(ap_antennas, pilot_len);
    for r in 0..ap_antennas {
        for c in 0..pilot_len {
            let phase = TAU * (r * c) as f64 / pilot_len as f64;
            s[(r, c)] = Complex64::from_polar(1.0, phase) * twists[c];
        }
    }
    Ok(s)
}

use rand::Rng as _;

/// Full-duplex loopback measurement over the active atom set:
/// `Y = (sum_{n in A} phi_n g_n g_n^T) S + noise + SI residual`.
pub fn simulate_loopback(
    g: &DMatrix<Complex64>,
    active: &[usize],
    phi: &[Complex64],
    pilot: &DMatrix<Complex64>,
    noise_power: f64,
    si_power: f64,
    seed_val: u64,
) -> Result<DMatrix<Complex64>> {
    if active.is_empty() {
        return Err(Error::invalid("active atom set must be nonempty"));
    }
    let m = g.nrows();
    if pilot.nrows() != m {
        return Err(Error::dims("pilot rows != AP antenna count"));
    }
    if phi.len() != g.ncols() {
        return Err(Error::dims("coefficient vector length != atom count"));
    }
    if let Some(&bad) = active.iter().find(|&&n| n >= g.ncols()) {
        return Err(Error::invalid(format!("active atom {bad} out of range")));
    }
    if noise_power < 0.0 || si_power < 0.0 {
        return Err(Error::invalid("noise powers must be >= 0"));
    }
    let l = pilot.ncols();
    // Loopback response H = sum phi_n g_n g_n^T (M x M), then Y = H S.
    let mut h = DMatrix::<Complex64>::zeros(m, m);
    for &n in active {
        let gn = g.column(n);
        for r in 0..m {
            for c in 0..m {
                h[(r, c)] += phi[n] * gn[r] * gn[c];
            }
        }
    }
    let mut y = &h * pilot;
    if noise_power > 0.0 || si_power > 0.0 {
        let mut rng = seed::rng(seed_val);
        let total = noise_power + si_power;
        for r in 0..m {
            for c in 0..l {
                y[(r, c)] += draw_cn(&mut rng, total);
            }
        }
    }
    Ok(y)
}

/// Removes the pilot: `Y S^H (S S^H)^{-1}`.
pub fn depilot(y: &DMatrix<Complex64>, pilot: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    if y.ncols() != pilot.ncols() {
        return Err(Error::dims("measurement and pilot lengths differ"));
    }
    let gram = pilot * pilot.adjoint();
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::SingularSystem("pilot Gram matrix is singular".into()))?;
    // X (S S^H) = Y S^H  =>  (S S^H) X^H = S Y^H.
    let rhs = pilot * y.adjoint();
    Ok(chol.solve(&rhs).adjoint())
}

/// Recovers one atom's channel from a single-active-atom measurement by
/// anchor-based rank-1 factorization of `A = Y S^H (S S^H)^{-1} / phi`.
///
/// `noise_floor` guards the anchor: if the largest diagonal magnitude of `A`
/// falls below it, the measurement is rejected as too weak.
pub fn estimate_atom_channel(
    y: &DMatrix<Complex64>,
    pilot: &DMatrix<Complex64>,
    phi: Complex64,
    noise_floor: f64,
) -> Result<AtomChannelEstimate> {
    if phi.norm() == 0.0 {
        return Err(Error::invalid("atom coefficient phi must be nonzero"));
    }
    let a = depilot(y, pilot)? / phi;
    let m = a.nrows();
    let mut anchor = 0usize;
    let mut peak = -1.0f64;
    for i in 0..m {
        let d = a[(i, i)].norm();
        if d > peak {
            peak = d;
            anchor = i;
        }
    }
    if peak < noise_floor {
        return Err(Error::LowSnr { peak, floor: noise_floor });
    }
    // Principal square root of the anchor diagonal, then the anchor row
    // scaled by it: A[i*, j] = g_{i*} g_j.
    let g_anchor = a[(anchor, anchor)].sqrt();
    if g_anchor.norm() == 0.0 {
        return Err(Error::LowSnr { peak: 0.0, floor: noise_floor });
    }
    let mut g_hat = DVector::zeros(m);
    for j in 0..m {
        g_hat[j] = a[(anchor, j)] / g_anchor;
    }
    g_hat[anchor] = g_anchor;
    let mut outer = DMatrix::zeros(m, m);
    for r in 0..m {
        for c in 0..m {
            outer[(r, c)] = g_hat[r] * g_hat[c];
        }
    }
    let residual = (&a - &outer).norm();
    Ok(AtomChannelEstimate { g_hat, sign_ambiguous: true, residual })
}

/// A full-surface estimate after some number of sweeps.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepEstimate {
    /// `ap_antennas x atoms` estimated channel.
    pub g_hat: DMatrix<Complex64>,
    /// Per-atom rank-1 residual from the latest sweep.
    pub residuals: Vec<f64>,
}

/// Round-robin schedule: atoms 0..n in ceil(n / subset) turns.
pub fn round_robin_schedule(n_atoms: usize, subset_size: usize) -> Vec<Vec<usize>> {
    (0..n_atoms).collect::<Vec<_>>().chunks(subset_size.max(1)).map(|c| c.to_vec()).collect()
}

fn check_schedule(schedule: &[Vec<usize>], n_atoms: usize) -> Result<()> {
    let mut seen = vec![false; n_atoms];
    for turn in schedule {
        for &atom in turn {
            if atom >= n_atoms {
                return Err(Error::InternalConsistency(format!("schedule names atom {atom} of {n_atoms}")));
            }
            if seen[atom] {
                return Err(Error::InternalConsistency(format!("schedule visits atom {atom} twice")));
            }
            seen[atom] = true;
        }
    }
    if let Some(missing) = seen.iter().position(|&s| !s) {
        return Err(Error::InternalConsistency(format!("schedule never visits atom {missing}")));
    }
    Ok(())
}

/// Runs one full sweep over an explicit schedule. Within a turn the subset's
/// atoms are activated one at a time (each sub-slot is a single-active
/// measurement); all other atoms absorb. New estimates are sign-resolved
/// against the prior and blended with weight `smoothing`.
pub fn run_schedule(
    g_truth: &DMatrix<Complex64>,
    schedule: &[Vec<usize>],
    cfg: &SoundingConfig,
    prior: Option<&SweepEstimate>,
) -> Result<SweepEstimate> {
    let m = g_truth.nrows();
    let n = g_truth.ncols();
    cfg.validate(m)?;
    check_schedule(schedule, n)?;
    if let Some(p) = prior {
        if p.g_hat.nrows() != m || p.g_hat.ncols() != n {
            return Err(Error::dims("prior estimate shape differs from the channel"));
        }
    }
    let pilot = gen_csrs(m, cfg.pilot_len, seed::derive(cfg.seed, 0xC5))?;
    let phi = vec![Complex64::new(1.0, 0.0); n];
    let mut g_hat = match prior {
        Some(p) => p.g_hat.clone(),
        None => DMatrix::zeros(m, n),
    };
    let mut residuals = vec![0.0; n];
    for (turn_idx, turn) in schedule.iter().enumerate() {
        for (slot_idx, &atom) in turn.iter().enumerate() {
            let slot_seed = seed::derive_path(cfg.seed, &[turn_idx as u64, slot_idx as u64, atom as u64]);
            let y = simulate_loopback(
                g_truth,
                &[atom],
                &phi,
                &pilot,
                cfg.noise_power,
                cfg.self_interference_power,
                slot_seed,
            )?;
            let est = estimate_atom_channel(&y, &pilot, phi[atom], 0.0)?;
            residuals[atom] = est.residual;
            let mut g_new = est.g_hat;
            match prior {
                Some(p) => {
                    // Resolve the sign against the prior, then blend.
                    let p_col = p.g_hat.column(atom);
                    let d_plus = (&g_new - &p_col).norm();
                    let d_minus = (-&g_new - p_col).norm();
                    if d_minus < d_plus {
                        g_new = -g_new;
                    }
                    let beta = cfg.smoothing;
                    for r in 0..m {
                        g_hat[(r, atom)] =
                            p.g_hat[(r, atom)] * Complex64::new(1.0 - beta, 0.0) + g_new[r] * Complex64::new(beta, 0.0);
                    }
                }
                None => {
                    // First sweep: take the anchor-positive branch as-is.
                    for r in 0..m {
                        g_hat[(r, atom)] = g_new[r];
                    }
                }
            }
        }
    }
    Ok(SweepEstimate { g_hat, residuals })
}

/// One full round-robin sweep with the canonical schedule.
pub fn round_robin(
    g_truth: &DMatrix<Complex64>,
    cfg: &SoundingConfig,
    prior: Option<&SweepEstimate>,
) -> Result<SweepEstimate> {
    let schedule = round_robin_schedule(g_truth.ncols(), cfg.subset_size);
    run_schedule(g_truth, &schedule, cfg, prior)
}

/// Dominant column basis at numerical rank `sigma > 1e-6 * sigma_max`.
fn dominant_basis(m: &DMatrix<Complex64>) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
    let svd = m.clone().svd(true, true);
    let u = svd.u.as_ref().expect("svd with u requested");
    let vt = svd.v_t.as_ref().expect("svd with v_t requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    if smax <= 0.0 {
        return Err(Error::UndefinedSubspace("measurement is identically zero".into()));
    }
    let rank = svd.singular_values.iter().filter(|&&s| s > 1e-6 * smax).count();
    let col = u.columns(0, rank).into_owned();
    let row = vt.rows(0, rank).adjoint(); // right singular vectors as columns
    Ok((col, row))
}

/// `1 - cos(largest principal angle)` between the dominant subspaces.
fn subspace_score(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    let overlap = a.adjoint() * b;
    let svd = overlap.svd(false, false);
    let r = a.ncols().min(b.ncols());
    let mut vals: Vec<f64> = svd.singular_values.iter().cloned().collect();
    vals.sort_by(|x, y| y.partial_cmp(x).unwrap());
    let cos_max_angle = vals.get(r - 1).copied().unwrap_or(0.0).clamp(0.0, 1.0);
    1.0 - cos_max_angle
}

/// Variation score in [0, 1] across a history of (de-piloted) measurements:
/// the worst `1 - cos(largest principal angle)` between dominant row/column
/// subspaces of consecutive entries.
pub fn detect_variation(history: &[DMatrix<Complex64>]) -> Result<f64> {
    if history.len() < 2 {
        return Err(Error::invalid("need at least two measurements"));
    }
    let shape = history[0].shape();
    if history.iter().any(|m| m.shape() != shape) {
        return Err(Error::dims("measurement history has mixed shapes"));
    }
    let bases: Vec<_> = history.iter().map(dominant_basis).collect::<Result<_>>()?;
    let mut score = 0.0f64;
    for w in bases.windows(2) {
        let (col_a, row_a) = &w[0];
        let (col_b, row_b) = &w[1];
        let s = subspace_score(col_a, col_b).max(subspace_score(row_a, row_b));
        score = score.max(s);
    }
    Ok(score.clamp(0.0, 1.0))
}
