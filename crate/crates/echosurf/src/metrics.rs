//! Link metrics: BER, EVM-based SINR, spectral efficiency, energy
//! efficiency.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Cap applied to the EVM-based SINR when the residual vanishes.
pub const SINR_CAP: f64 = 1e9;

/// Bit error rate: Hamming distance over length.
pub fn ber(tx_bits: &[u8], rx_bits: &[u8]) -> Result<f64> {
    if tx_bits.is_empty() || tx_bits.len() != rx_bits.len() {
        return Err(Error::dims(format!(
            "bit vectors must be equal nonzero length ({} vs {})",
            tx_bits.len(),
            rx_bits.len()
        )));
    }
    let errors = tx_bits.iter().zip(rx_bits.iter()).filter(|(a, b)| a != b).count();
    Ok(errors as f64 / tx_bits.len() as f64)
}

/// Effective SINR from the error vector magnitude after a per-stream LS
/// complex-gain fit. Per stream, `g = argmin ||est - g ref||^2`; the SINR is
/// the fitted signal power over the residual power,
/// `sum_s |g_s|^2 ||ref_s||^2 / sum_s ||est_s - g_s ref_s||^2`, capped at
/// [`SINR_CAP`]. Pure gain differences between estimate and reference are
/// fitted out.
pub fn evm_sinr(estimates: &DMatrix<Complex64>, references: &DMatrix<Complex64>) -> Result<f64> {
    if estimates.shape() != references.shape() {
        return Err(Error::dims("estimate and reference shapes differ"));
    }
    let ref_power: f64 = references.iter().map(|z| z.norm_sqr()).sum();
    if ref_power <= 0.0 {
        return Err(Error::invalid("reference power must be > 0"));
    }
    let mut sig_power = 0.0;
    let mut err_power = 0.0;
    for s in 0..estimates.nrows() {
        let est = estimates.row(s);
        let refr = references.row(s);
        let denom: f64 = refr.iter().map(|z| z.norm_sqr()).sum();
        let gain = if denom > 0.0 {
            let num: Complex64 = refr.iter().zip(est.iter()).map(|(r, e)| r.conj() * e).sum();
            num / denom
        } else {
            Complex64::new(0.0, 0.0)
        };
        sig_power += gain.norm_sqr() * denom;
        err_power += est
            .iter()
            .zip(refr.iter())
            .map(|(e, r)| (e - r * gain).norm_sqr())
            .sum::<f64>();
    }
    if sig_power == 0.0 {
        return Ok(0.0);
    }
    if err_power <= sig_power / SINR_CAP {
        return Ok(SINR_CAP);
    }
    Ok((sig_power / err_power).min(SINR_CAP))
}

/// Shannon rate map `log2(1 + sinr)`.
pub fn spectral_efficiency(sinr: f64) -> f64 {
    (1.0 + sinr).log2()
}

/// Power consumption knobs of the energy-efficiency metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerModel {
    /// Transmit power, watts.
    pub p_tx: f64,
    /// AP circuit power, watts.
    pub p_circuit_ap: f64,
    /// Control/bias power per meta-atom, watts.
    pub p_atom: f64,
    /// System bandwidth, hertz.
    pub bandwidth: f64,
}

impl Default for PowerModel {
    fn default() -> Self {
        Self { p_tx: 1.0, p_circuit_ap: 0.5, p_atom: 0.01, bandwidth: 1e6 }
    }
}

impl PowerModel {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("p_tx", self.p_tx),
            ("p_circuit_ap", self.p_circuit_ap),
            ("p_atom", self.p_atom),
            ("bandwidth", self.bandwidth),
        ] {
            if !(v >= 0.0) {
                return Err(Error::invalid(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Delivered bits per joule:
/// `se * bandwidth / (p_tx + p_circuit_ap + n_atoms * p_atom)`.
pub fn energy_efficiency(se: f64, pm: &PowerModel, n_atoms: usize) -> Result<f64> {
    pm.validate()?;
    let denom = pm.p_tx + pm.p_circuit_ap + n_atoms as f64 * pm.p_atom;
    if denom <= 0.0 {
        return Err(Error::invalid("total consumed power must be > 0"));
    }
    Ok(se * pm.bandwidth / denom)
}

/// Which design produced a result row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodTag {
    Rc,
    ModelBased,
}

impl MethodTag {
    pub fn name(self) -> &'static str {
        match self {
            MethodTag::Rc => "rc",
            MethodTag::ModelBased => "model_based",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "rc" => Some(MethodTag::Rc),
            "model_based" => Some(MethodTag::ModelBased),
            _ => None,
        }
    }
}

/// Metrics of one (configuration, seed, method) run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub config_hash: u64,
    pub seed: u64,
    pub method: MethodTag,
    pub ber: f64,
    pub sinr_db: f64,
    pub se_bps_hz: f64,
    pub ee_bits_per_joule: f64,
}

impl ExperimentResult {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("ber", self.ber),
            ("sinr_db", self.sinr_db),
            ("se_bps_hz", self.se_bps_hz),
            ("ee_bits_per_joule", self.ee_bits_per_joule),
        ] {
            if !v.is_finite() {
                return Err(Error::InternalConsistency(format!("{name} is not finite: {v}")));
            }
        }
        // A working receiver never does worse than guessing by much.
        if !(0.0..=0.55).contains(&self.ber) {
            return Err(Error::InternalConsistency(format!("ber {} outside [0, 0.5+eps]", self.ber)));
        }
        Ok(())
    }
}
