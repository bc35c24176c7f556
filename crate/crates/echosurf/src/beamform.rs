//! Joint passive/active beamforming on the reflecting-surface uplink.
//!
//! The link is treated as an auto-encoder: transmitted reference symbols are
//! the reservoir input, the surface is the reservoir, and the combiner is
//! the trainable readout. [`train_joint`] alternates
//!
//! * a projected-gradient sweep over the continuous per-atom phases with the
//!   combiner fixed (analytic chain rule through the ideal reflection path,
//!   central finite differences through the stateful one), and
//! * a closed-form ridge solve of the combiner on the actually received
//!   reference block.
//!
//! Phases are projected onto the codebook once at the end, followed by one
//! more combiner solve. [`model_based_baseline`] implements the
//! phase-alignment design from (possibly erroneous) explicit CSI with an
//! MMSE combiner, and [`derive_downlink`] turns an uplink solution into the
//! reciprocity precoder.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::channel::{draw_cn, ChannelSet};
use crate::error::{Error, Result};
use crate::frames::{demodulate, Modulation};
use crate::reservoir::{
    readout_loss, train_readout, EchoStateSystem, ReadoutTrainingSet, Transition,
};
use crate::seed;
use crate::surface::{
    surface_step_with_phases, AtomState, Impairment, SurfaceConfig, SurfaceMode,
};

/// End-to-end link state: channels, surface, receive/transmit processing.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkModel {
    pub channels: ChannelSet,
    pub surface: SurfaceConfig,
    pub state: AtomState,
    pub impairment: Option<Impairment>,
    /// Receive combiner, `users x ap_antennas`; estimates are `combiner * r`.
    pub combiner: DMatrix<Complex64>,
    /// Downlink precoder, `ap_antennas x users` (unit-norm columns once
    /// derived).
    pub precoder: DMatrix<Complex64>,
    /// Receiver noise power per antenna.
    pub noise_power: f64,
}

impl LinkModel {
    pub fn new(channels: ChannelSet, surface: SurfaceConfig, noise_power: f64) -> Result<Self> {
        channels.validate()?;
        if surface.n_atoms() != channels.atoms() {
            return Err(Error::dims(format!(
                "surface has {} atoms, channels expect {}",
                surface.n_atoms(),
                channels.atoms()
            )));
        }
        if noise_power < 0.0 {
            return Err(Error::invalid("noise_power must be >= 0"));
        }
        let m = channels.ap_antennas();
        let k = channels.users();
        let state = AtomState::for_config(&surface);
        // Small uniform starting combiner. The scale matters for training:
        // the first phase sweep runs against this fixed readout, and a small
        // one puts its implied target far beyond the reachable effective
        // gain, so that sweep maximizes the gain instead of stalling at the
        // readout's equalization point.
        let combiner = DMatrix::from_element(k, m, Complex64::new(1e-6 / (m as f64).sqrt(), 0.0));
        let precoder = DMatrix::zeros(m, k);
        Ok(Self { channels, surface, state, impairment: None, combiner, precoder, noise_power })
    }

    /// Installs quantized phase indices on the surface.
    pub fn set_phase_indices(&mut self, idx: &[usize]) -> Result<()> {
        if idx.len() != self.surface.n_atoms() {
            return Err(Error::dims("phase index count != atom count"));
        }
        if let Some(&bad) = idx.iter().find(|&&i| i >= self.surface.codebook.len()) {
            return Err(Error::invalid(format!("phase index {bad} outside codebook")));
        }
        self.surface.phase_idx = idx.to_vec();
        Ok(())
    }

    /// The echo-state view of the link: input map `diag(beta) * h_forward`,
    /// diagonal transition `alpha`, shared saturation. Covers the
    /// single-stage surface; the readout chain (surface coefficients,
    /// reflecting channel, combiner) sits on top of these states.
    pub fn as_reservoir(&self) -> EchoStateSystem {
        let n = self.surface.n_atoms();
        let mut input_map = self.channels.h_forward.clone();
        for (i, p) in self.surface.atoms.iter().enumerate() {
            for c in 0..input_map.ncols() {
                input_map[(i, c)] *= Complex64::new(p.input_gain, 0.0);
            }
        }
        let alphas = DVector::from_iterator(n, self.surface.atoms.iter().map(|p| p.memory_coeff));
        let sat = DVector::from_iterator(n, self.surface.atoms.iter().map(|p| p.saturation));
        EchoStateSystem {
            input_map,
            transition: Transition::Diagonal(alphas),
            saturation: sat,
            readout: None,
            washout: 10,
        }
    }
}

/// Runs the uplink received-signal law over a symbol block:
/// `r[t] = h_direct x[t] + h_reflect reflected[t] + n[t]`, with the surface
/// state advancing sequentially from zero. Pure in `(link, symbols, seed)`.
pub fn simulate_uplink(
    link: &LinkModel,
    symbols: &DMatrix<Complex64>,
    seed_val: u64,
) -> Result<DMatrix<Complex64>> {
    let phases = link.surface.phases();
    simulate_uplink_with_phases(link, symbols, &phases, seed_val)
}

/// As [`simulate_uplink`] with explicit continuous phases (trainer path).
pub fn simulate_uplink_with_phases(
    link: &LinkModel,
    symbols: &DMatrix<Complex64>,
    phases: &[f64],
    seed_val: u64,
) -> Result<DMatrix<Complex64>> {
    let k = link.channels.users();
    let m = link.channels.ap_antennas();
    let n = link.channels.atoms();
    if symbols.nrows() != k {
        return Err(Error::dims(format!("symbol rows {} != user count {k}", symbols.nrows())));
    }
    if phases.len() != n {
        return Err(Error::dims("phase vector length != atom count"));
    }
    let t_len = symbols.ncols();

    // Effective phases include any per-frame impairment offsets.
    let eff_phases: Vec<f64> = match &link.impairment {
        Some(imp) => phases.iter().zip(imp.phase_offsets.iter()).map(|(p, o)| p + o).collect(),
        None => phases.to_vec(),
    };

    let mut noise_rng = seed::rng(seed::derive(seed_val, 1));
    let mut distort_rng = seed::rng(seed::derive(seed_val, 2));

    let mut state = link.state.clone();
    state.reset();
    let mut received = DMatrix::zeros(m, t_len);
    let mut incident = vec![Complex64::new(0.0, 0.0); n];
    for t in 0..t_len {
        let x = symbols.column(t);
        // incident = h_forward * x
        for i in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for u in 0..k {
                acc += link.channels.h_forward[(i, u)] * x[u];
            }
            incident[i] = acc;
        }
        let mut reflected = surface_step_with_phases(&mut state, &incident, &link.surface, &eff_phases)?;
        if let Some(imp) = &link.impairment {
            imp.distort(&mut distort_rng, &mut reflected);
        }
        for a in 0..m {
            let mut acc = Complex64::new(0.0, 0.0);
            for u in 0..k {
                acc += link.channels.h_direct[(a, u)] * x[u];
            }
            for i in 0..n {
                acc += link.channels.h_reflect[(a, i)] * reflected[i];
            }
            if link.noise_power > 0.0 {
                acc += draw_cn(&mut noise_rng, link.noise_power);
            }
            received[(a, t)] = acc;
        }
    }
    Ok(received)
}

/// Knobs of the alternating trainer.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOptions {
    pub max_outer_iters: usize,
    /// Phase-gradient steps per outer iteration.
    pub inner_steps: usize,
    /// Maximum per-sweep phase move, radians.
    pub step_size: f64,
    /// Ridge weight relative to the mean received-feature power; the
    /// absolute weight is frozen at the first evaluation and reported as
    /// [`TrainOutcome::effective_ridge`].
    pub ridge: f64,
    /// Convergence tolerance on the training loss.
    pub tol: f64,
    pub washout: usize,
    pub seed: u64,
    /// Project phases onto the codebook after every outer iteration
    /// (ablation switch; default quantizes once at the end).
    pub quantize_per_iter: bool,
    /// Central finite-difference step for the stateful surface, radians.
    pub fd_step: f64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            max_outer_iters: 30,
            inner_steps: 2,
            step_size: 0.3,
            ridge: 1e-3,
            tol: 1e-9,
            washout: 10,
            seed: 0,
            quantize_per_iter: false,
            fd_step: 1e-3,
        }
    }
}

impl TrainOptions {
    pub fn validate(&self) -> Result<()> {
        if self.inner_steps == 0 {
            return Err(Error::invalid("inner_steps must be >= 1"));
        }
        if !(self.step_size > 0.0) || !(self.tol > 0.0) || !(self.fd_step > 0.0) {
            return Err(Error::invalid("step_size, tol and fd_step must be > 0"));
        }
        if self.ridge < 0.0 {
            return Err(Error::invalid("ridge must be >= 0"));
        }
        Ok(())
    }
}

/// What [`train_joint`] hands back.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    /// Quantized per-atom phase indices.
    pub phase_indices: Vec<usize>,
    /// Combiner re-solved for the quantized phases.
    pub combiner: DMatrix<Complex64>,
    /// Best-so-far training loss per outer iteration (non-increasing).
    pub loss_trace: Vec<f64>,
    /// Best continuous (unit-modulus) iterate and its loss.
    pub continuous_phases: Vec<f64>,
    pub continuous_loss: f64,
    /// Loss of the quantized solution after the final combiner solve.
    pub quantized_loss: f64,
    /// Absolute ridge weight used in every combiner solve
    /// (`opts.ridge` x mean feature power at the starting phases).
    pub effective_ridge: f64,
    pub converged: bool,
    /// Set when the step-size budget ran out before convergence.
    pub diagnostic: Option<String>,
}

struct Evaluator<'a> {
    link: &'a LinkModel,
    inputs: &'a DMatrix<Complex64>,
    targets: &'a DMatrix<Complex64>,
    opts: &'a TrainOptions,
    /// Absolute ridge weight, frozen once per training run.
    ridge_abs: f64,
}

impl Evaluator<'_> {
    fn received(&self, phases: &[f64]) -> Result<DMatrix<Complex64>> {
        simulate_uplink_with_phases(self.link, self.inputs, phases, self.opts.seed)
    }

    fn training_set(&self, received: DMatrix<Complex64>) -> ReadoutTrainingSet {
        ReadoutTrainingSet {
            features: received,
            targets: self.targets.clone(),
            ridge: self.ridge_abs,
            washout: self.opts.washout,
        }
    }

    /// Received + LS-optimal combiner + loss, all at `phases`.
    fn solve(&self, phases: &[f64]) -> Result<(DMatrix<Complex64>, f64)> {
        let ts = self.training_set(self.received(phases)?);
        let w = train_readout(&ts)?;
        let loss = readout_loss(&ts, &w)?;
        Ok((w, loss))
    }

    /// Loss at `phases` with a fixed combiner.
    fn loss_fixed_w(&self, phases: &[f64], w: &DMatrix<Complex64>) -> Result<f64> {
        let ts = self.training_set(self.received(phases)?);
        readout_loss(&ts, w)
    }

    /// Fixed-combiner loss and its gradient with respect to the continuous
    /// phases. The ideal reflection path uses the analytic chain rule
    /// (Wirtinger gradient against the unit-modulus coefficients
    /// `c_n = e^{j theta_n}`, then `dL/dtheta_n = -2 Im(c_n conj(grad_n))`);
    /// the stateful path uses central finite differences.
    fn gradient_and_loss(
        &self,
        phases: &[f64],
        w: &DMatrix<Complex64>,
    ) -> Result<(Vec<f64>, f64)> {
        if self.link.surface.mode == SurfaceMode::Ideal {
            self.analytic_gradient(phases, w)
        } else {
            let loss = self.loss_fixed_w(phases, w)?;
            Ok((self.fd_gradient(phases, w)?, loss))
        }
    }

    fn analytic_gradient(
        &self,
        phases: &[f64],
        w: &DMatrix<Complex64>,
    ) -> Result<(Vec<f64>, f64)> {
        let n = self.link.surface.n_atoms();
        let t_total = self.inputs.ncols();
        let wash = self.opts.washout.min(t_total);
        let received = self.received(phases)?;
        let resid = w * &received - self.targets; // K x T
        let loss: f64 = (wash..t_total)
            .map(|t| resid.column(t).iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum();
        // v[n, t] = a_n e^{j off_n} (h_forward x[t])_n
        let mut v = &self.link.channels.h_forward * self.inputs; // N x T
        for i in 0..n {
            let off = self.link.impairment.as_ref().map_or(0.0, |imp| imp.phase_offsets[i]);
            let scale = Complex64::from_polar(self.link.surface.atoms[i].amplitude, off);
            for t in 0..t_total {
                v[(i, t)] *= scale;
            }
        }
        let back = self.link.channels.h_reflect.adjoint() * (w.adjoint() * resid); // N x T
        let mut grad = vec![0.0; n];
        for i in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for t in wash..t_total {
                acc += v[(i, t)].conj() * back[(i, t)];
            }
            let c = Complex64::from_polar(1.0, phases[i]);
            grad[i] = -2.0 * (c * acc.conj()).im;
        }
        Ok((grad, loss))
    }

    /// Central finite differences of the fixed-combiner loss with respect to
    /// each phase. Probes run on cloned state, in parallel.
    fn fd_gradient(&self, phases: &[f64], w: &DMatrix<Complex64>) -> Result<Vec<f64>> {
        let delta = self.opts.fd_step;
        let n = phases.len();
        let grads: Result<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut plus = phases.to_vec();
                plus[i] += delta;
                let mut minus = phases.to_vec();
                minus[i] -= delta;
                let lp = self.loss_fixed_w(&plus, w)?;
                let lm = self.loss_fixed_w(&minus, w)?;
                Ok((lp - lm) / (2.0 * delta))
            })
            .collect();
        grads
    }
}

/// Alternating minimization of
/// `L(theta, W) = sum_t || W r[t](theta) - target[t] ||^2`
/// over the continuous phases and the combiner; see the module docs for the
/// schedule. Returns the best iterate with a monotone loss trace.
pub fn train_joint(
    link: &LinkModel,
    dmrs_in: &DMatrix<Complex64>,
    dmrs_target: &DMatrix<Complex64>,
    opts: &TrainOptions,
) -> Result<TrainOutcome> {
    opts.validate()?;
    if dmrs_in.shape() != dmrs_target.shape() {
        return Err(Error::dims("dmrs_in and dmrs_target shapes differ"));
    }
    if dmrs_in.ncols() <= opts.washout {
        return Err(Error::invalid(format!(
            "training block of {} symbols does not exceed washout {}",
            dmrs_in.ncols(),
            opts.washout
        )));
    }
    // Freeze the absolute ridge at the starting point's mean feature power,
    // so the solves stay comparable across iterations.
    let initial_phases = link.surface.phases();
    let r0 = simulate_uplink_with_phases(link, dmrs_in, &initial_phases, opts.seed)?;
    let wash0 = opts.washout.min(r0.ncols());
    let feat_power = {
        let cols = r0.ncols() - wash0;
        if cols == 0 || r0.nrows() == 0 {
            0.0
        } else {
            r0.columns(wash0, cols).iter().map(|z| z.norm_sqr()).sum::<f64>()
                / (cols * r0.nrows()) as f64
        }
    };
    let ridge_abs = if feat_power > 0.0 { opts.ridge * feat_power } else { opts.ridge };
    let ev = Evaluator { link, inputs: dmrs_in, targets: dmrs_target, opts, ridge_abs };

    let mut phases = link.surface.phases();
    let mut w = link.combiner.clone();
    let target_power: f64 = (opts.washout.min(dmrs_target.ncols())..dmrs_target.ncols())
        .map(|t| dmrs_target.column(t).iter().map(|z| z.norm_sqr()).sum::<f64>())
        .sum();
    // Loss differences below the rounding noise of the residual sum are
    // ties, never improvements.
    let noise_tol = 1e-12 * target_power.max(1e-300);

    let mut best_phases = phases.clone();
    let mut best_w: Option<DMatrix<Complex64>> = None;
    let mut best_loss = f64::INFINITY;
    let mut trace = Vec::new();
    let mut step = opts.step_size;
    let mut halvings = 0usize;
    let mut prev_raw = f64::INFINITY;
    let mut converged = false;
    let mut diagnostic = None;

    if opts.max_outer_iters == 0 {
        let (w0, loss0) = ev.solve(&phases)?;
        let (qcfg, idx) = link.surface.quantized_from(&phases)?;
        debug_assert_eq!(qcfg.phase_idx, idx);
        trace.push(loss0);
        return Ok(TrainOutcome {
            phase_indices: idx,
            combiner: w0.clone(),
            loss_trace: trace,
            continuous_phases: phases,
            continuous_loss: loss0,
            quantized_loss: loss0,
            effective_ridge: ridge_abs,
            converged: false,
            diagnostic: None,
        });
    }

    'outer: for outer in 0..opts.max_outer_iters {
        // Phase sweep. The descent direction is the gradient of the loss at
        // the current (fixed) combiner; right after a combiner solve that is
        // also the exact gradient of the reduced objective min_W L(theta, W)
        // (envelope theorem). Step lengths come from a backtracking /
        // doubling line search scored on the re-solved loss, with the
        // fixed-combiner loss breaking ties: the re-solved loss is what the
        // alternation actually minimizes, while the tie-breaker keeps the
        // sweep moving when the combiner can absorb a phase change outright
        // (e.g. a scalar link).
        for _ in 0..opts.inner_steps {
            let (grad, l0_fixed) = ev.gradient_and_loss(&phases, &w)?;
            let gmax = grad.iter().map(|g| g.abs()).fold(0.0f64, f64::max);
            if gmax < 1e-14 * (1.0 + l0_fixed) {
                break;
            }
            // (re-solved loss, fixed-combiner loss) at a candidate; one
            // simulation serves both.
            let score = |ph: &[f64]| -> Result<(f64, f64)> {
                let ts = ev.training_set(ev.received(ph)?);
                let w_new = train_readout(&ts)?;
                Ok((readout_loss(&ts, &w_new)?, readout_loss(&ts, &w)?))
            };
            // Re-solved ties fall through to the fixed-combiner loss.
            let le = |a: &(f64, f64), b: &(f64, f64)| {
                if a.0 < b.0 - noise_tol {
                    true
                } else if a.0 > b.0 + noise_tol {
                    false
                } else {
                    a.1 <= b.1
                }
            };
            let lt = |a: &(f64, f64), b: &(f64, f64)| {
                if a.0 < b.0 - noise_tol {
                    true
                } else if a.0 > b.0 + noise_tol {
                    false
                } else {
                    a.1 < b.1
                }
            };
            let s0 = score(&phases)?;
            // First proposal moves the dominant atom by `step` radians;
            // halve on ascent, then double while the score keeps dropping.
            let mut mu = step / gmax;
            let mut accepted = None;
            for _ in 0..12 {
                let trial: Vec<f64> =
                    phases.iter().zip(grad.iter()).map(|(p, g)| p - mu * g).collect();
                let s1 = score(&trial)?;
                if le(&s1, &s0) {
                    accepted = Some((trial, s1));
                    break;
                }
                mu *= 0.5;
            }
            let Some((mut best_trial, mut best_s)) = accepted else {
                break;
            };
            for _ in 0..16 {
                mu *= 2.0;
                let trial: Vec<f64> =
                    phases.iter().zip(grad.iter()).map(|(p, g)| p - mu * g).collect();
                let s1 = score(&trial)?;
                if lt(&s1, &best_s) {
                    best_trial = trial;
                    best_s = s1;
                } else {
                    break;
                }
            }
            phases = best_trial;
        }

        // Combiner solve on the actual received block.
        let (w_new, loss) = ev.solve(&phases)?;
        w = w_new;
        if loss < best_loss {
            best_loss = loss;
            best_phases = phases.clone();
            best_w = Some(w.clone());
        }
        trace.push(best_loss);

        if opts.quantize_per_iter {
            let (qcfg, _) = link.surface.quantized_from(&phases)?;
            phases = qcfg.phases();
        }

        if outer > 0 {
            if loss > prev_raw + opts.tol {
                step *= 0.5;
                halvings += 1;
                phases = best_phases.clone();
                if let Some(bw) = &best_w {
                    w = bw.clone();
                }
                if halvings > 5 {
                    diagnostic = Some(format!(
                        "loss failed to decrease after {halvings} step halvings; returning best iterate"
                    ));
                    break 'outer;
                }
            } else if (prev_raw - loss).abs() < opts.tol {
                converged = true;
                break 'outer;
            }
        }
        prev_raw = loss;
    }

    // Project onto the codebook once and re-solve the combiner, then polish
    // by coordinate descent on the lattice: per-atom nearest rounding can
    // land on a jointly suboptimal combination when quantization errors
    // interact, and single-index sweeps repair that without enumerating the
    // codebook jointly.
    let (_, mut idx) = link.surface.quantized_from(&best_phases)?;
    let phases_of =
        |idx: &[usize]| -> Vec<f64> { idx.iter().map(|&i| link.surface.codebook.phases[i]).collect() };
    let (mut w_q, mut loss_q) = ev.solve(&phases_of(&idx))?;
    let codebook_len = link.surface.codebook.len();
    'polish: for _ in 0..2 {
        let mut improved = false;
        for atom in 0..idx.len() {
            for cand in 0..codebook_len {
                if cand == idx[atom] {
                    continue;
                }
                let mut trial = idx.clone();
                trial[atom] = cand;
                let (w_t, l_t) = ev.solve(&phases_of(&trial))?;
                if l_t < loss_q - noise_tol {
                    idx = trial;
                    w_q = w_t;
                    loss_q = l_t;
                    improved = true;
                }
            }
        }
        // Common shifts handle the gauge coupling: a shared rotation of all
        // atoms trades against the direct path only, and single-index moves
        // cannot cross it.
        for k in 1..codebook_len {
            let trial: Vec<usize> = idx.iter().map(|&i| (i + k) % codebook_len).collect();
            let (w_t, l_t) = ev.solve(&phases_of(&trial))?;
            if l_t < loss_q - noise_tol {
                idx = trial;
                w_q = w_t;
                loss_q = l_t;
                improved = true;
            }
        }
        if !improved {
            break 'polish;
        }
    }
    let quantized = phases_of(&idx);

    // The quantized point is itself a feasible unit-modulus iterate, so the
    // recorded continuous optimum can only be at least as good.
    if loss_q < best_loss - noise_tol {
        best_loss = loss_q;
        best_phases = quantized.clone();
    }
    assert!(
        loss_q >= best_loss - noise_tol - 1e-9 * best_loss.abs(),
        "quantized loss {loss_q} below continuous optimum {best_loss}"
    );

    Ok(TrainOutcome {
        phase_indices: idx,
        combiner: w_q,
        loss_trace: trace,
        continuous_phases: best_phases,
        continuous_loss: best_loss,
        quantized_loss: loss_q,
        effective_ridge: ridge_abs,
        converged,
        diagnostic,
    })
}

/// Composite single-user channel seen through the surface:
/// `h_eff = h_direct + sum_n a_n e^{j theta_n} h_forward[n] h_reflect[:, n]`.
pub fn effective_channel(
    csi: &ChannelSet,
    amplitudes: &[f64],
    phases: &[f64],
) -> Result<DVector<Complex64>> {
    if csi.users() != 1 {
        return Err(Error::UnsupportedConfiguration(
            "effective_channel is defined for the single-user link".into(),
        ));
    }
    let n = csi.atoms();
    if amplitudes.len() != n || phases.len() != n {
        return Err(Error::dims("amplitude/phase vectors must match the atom count"));
    }
    let m = csi.ap_antennas();
    let mut h = DVector::from_iterator(m, csi.h_direct.column(0).iter().cloned());
    for i in 0..n {
        let coeff = Complex64::from_polar(amplitudes[i], phases[i]) * csi.h_forward[(i, 0)];
        for a in 0..m {
            h[a] += coeff * csi.h_reflect[(a, i)];
        }
    }
    Ok(h)
}

/// Continuous phase-alignment rule from explicit CSI: every reflected path
/// is rotated onto the direct path as seen through the reference combiner
/// `w_ref` (onto the zero-phase axis under blockage).
pub fn model_based_phases(csi: &ChannelSet, w_ref: &DVector<Complex64>) -> Result<Vec<f64>> {
    if csi.users() != 1 {
        return Err(Error::UnsupportedConfiguration(
            "the model-based baseline supports exactly one user".into(),
        ));
    }
    if w_ref.len() != csi.ap_antennas() {
        return Err(Error::dims("reference combiner length != antenna count"));
    }
    let direct: Complex64 = w_ref.iter().zip(csi.h_direct.column(0).iter()).map(|(w, h)| w.conj() * h).sum();
    let ref_phase = if direct.norm() > 0.0 { direct.arg() } else { 0.0 };
    let n = csi.atoms();
    let mut phases = Vec::with_capacity(n);
    for i in 0..n {
        let through: Complex64 =
            w_ref.iter().zip(csi.h_reflect.column(i).iter()).map(|(w, h)| w.conj() * h).sum();
        phases.push(ref_phase - through.arg() - csi.h_forward[(i, 0)].arg());
    }
    Ok(phases)
}

/// Phase-alignment design plus MMSE combiner from explicit (estimated) CSI.
/// Returns codebook indices and the `1 x ap_antennas` combiner.
pub fn model_based_design(
    csi: &ChannelSet,
    amplitudes: &[f64],
    codebook: &crate::surface::PhaseCodebook,
    noise_power: f64,
) -> Result<(Vec<usize>, DMatrix<Complex64>)> {
    if csi.users() != 1 {
        return Err(Error::UnsupportedConfiguration(
            "the model-based baseline supports exactly one user".into(),
        ));
    }
    let m = csi.ap_antennas();
    let direct_norm = csi.h_direct.column(0).norm();
    let w_ref = if direct_norm > 0.0 {
        DVector::from_iterator(m, csi.h_direct.column(0).iter().cloned()) / Complex64::new(direct_norm, 0.0)
    } else {
        DVector::from_element(m, Complex64::new(1.0 / (m as f64).sqrt(), 0.0))
    };
    let continuous = model_based_phases(csi, &w_ref)?;
    let quantized: Vec<usize> =
        continuous.iter().map(|&t| crate::surface::quantize_phase(t, codebook).0).collect();
    let phases: Vec<f64> = quantized.iter().map(|&i| codebook.phases[i]).collect();
    let h_eff = effective_channel(csi, amplitudes, &phases)?;
    // Single-stream MMSE combiner from the estimated effective channel.
    let denom = h_eff.norm_squared() + noise_power;
    if denom <= 0.0 {
        return Err(Error::DegenerateSolution("estimated effective channel and noise are both zero".into()));
    }
    let mut w = DMatrix::zeros(1, m);
    for a in 0..m {
        w[(0, a)] = h_eff[a].conj() / Complex64::new(denom, 0.0);
    }
    Ok((quantized, w))
}

/// [`model_based_design`] against a link's surface and codebook.
pub fn model_based_baseline(
    csi: &ChannelSet,
    link: &LinkModel,
) -> Result<(Vec<usize>, DMatrix<Complex64>)> {
    let amplitudes: Vec<f64> = link.surface.atoms.iter().map(|p| p.amplitude).collect();
    model_based_design(csi, &amplitudes, &link.surface.codebook, link.noise_power)
}

/// Reciprocity precoder: `P = combiner^T` with unit-norm columns. Downlink
/// surface phases are the uplink ones.
pub fn derive_downlink(combiner: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let mut p = combiner.transpose();
    for c in 0..p.ncols() {
        let norm = p.column(c).norm();
        if norm < 1e-300 {
            return Err(Error::DegenerateSolution(format!("combiner row {c} has zero norm")));
        }
        let scale = Complex64::new(1.0 / norm, 0.0);
        for r in 0..p.nrows() {
            p[(r, c)] *= scale;
        }
    }
    Ok(p)
}

/// Equalizes `received` with the combiner and hard-demodulates, after an
/// optional per-stream LS complex-gain fit against a known reference block
/// `(tx_ref, rx_ref)`. Bits come back stream-major.
pub fn demodulate_link(
    received: &DMatrix<Complex64>,
    combiner: &DMatrix<Complex64>,
    modulation: Modulation,
    reference: Option<(&DMatrix<Complex64>, &DMatrix<Complex64>)>,
) -> Result<Vec<u8>> {
    if combiner.ncols() != received.nrows() {
        return Err(Error::dims("combiner width != received antenna count"));
    }
    let k = combiner.nrows();
    let y = combiner * received; // K x T
    let mut gains = vec![Complex64::new(1.0, 0.0); k];
    if let Some((tx_ref, rx_ref)) = reference {
        if rx_ref.nrows() != received.nrows() || tx_ref.nrows() != k || tx_ref.ncols() != rx_ref.ncols() {
            return Err(Error::dims("reference block shapes disagree with the link"));
        }
        let y_ref = combiner * rx_ref;
        for s in 0..k {
            let denom: f64 = y_ref.row(s).iter().map(|z| z.norm_sqr()).sum();
            if denom > 0.0 {
                let num: Complex64 =
                    y_ref.row(s).iter().zip(tx_ref.row(s).iter()).map(|(e, r)| e.conj() * r).sum();
                gains[s] = num / denom;
            }
        }
    }
    let mut bits = Vec::with_capacity(k * y.ncols() * modulation.bits_per_symbol());
    for s in 0..k {
        let scaled: Vec<Complex64> = y.row(s).iter().map(|z| z * gains[s]).collect();
        bits.extend(demodulate(&scaled, modulation));
    }
    Ok(bits)
}
