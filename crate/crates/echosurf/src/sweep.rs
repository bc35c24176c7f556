//! Monte-Carlo experiment runner.
//!
//! `run_sweep` walks the grid (atoms x SNR x impairment x CSI error), runs
//! `trials` independent links per point, trains the learned design on the
//! frame's DMRS block and the model-based design on perturbed CSI, evaluates
//! both on the held-out DATA symbols of the same frame and noise
//! realization, and emits the raw and summary CSV tables.
//!
//! Determinism: every random quantity derives from
//! `derive_path(master_seed, [TAG, point_index, trial, ...])`, so output is
//! byte-identical for a fixed (config, seed) and unaffected by thread count
//! or by adding grid points or trials after the fact.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::beamform::{
    demodulate_link, model_based_baseline, simulate_uplink, train_joint, LinkModel,
};
use crate::channel::{cn_matrix, make_channel_set, ChannelSet};
use crate::config::HarnessConfig;
use crate::error::{Error, Result};
use crate::frames::{build_frame, split_frame, Frame};
use crate::metrics::{ber, energy_efficiency, evm_sinr, spectral_efficiency, ExperimentResult, MethodTag};
use crate::report::{self, ResultRow, SummaryRow};
use crate::seed;
use crate::surface::apply_impairment;

const TAG_TRIAL: u64 = 0x71;
const TAG_CHANNEL: u64 = 1;
const TAG_FRAME: u64 = 2;
const TAG_BITS: u64 = 3;
const TAG_TRAIN: u64 = 4;
const TAG_EVAL: u64 = 5;
const TAG_CSI: u64 = 6;
const TAG_KNOB: u64 = 7;
const TAG_SOUND: u64 = 0x50;

/// One grid point of the sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub n_atoms: usize,
    pub snr_db: f64,
    pub impairment: f64,
    pub csi_error: f64,
}

/// Everything a sweep produces.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub rows: Vec<ResultRow>,
    pub summary: Vec<SummaryRow>,
    pub results_csv: String,
    pub summary_csv: String,
}

fn grid(cfg: &HarnessConfig) -> Vec<SweepPoint> {
    let mut points = Vec::new();
    for &n_atoms in &cfg.sweep.atoms {
        for &snr_db in &cfg.sweep.snr_db {
            for &impairment in &cfg.sweep.impairment {
                for &csi_error in &cfg.sweep.csi_error {
                    points.push(SweepPoint { n_atoms, snr_db, impairment, csi_error });
                }
            }
        }
    }
    points
}

fn noise_power_for(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

fn empirical_power(m: &DMatrix<Complex64>) -> f64 {
    if m.len() == 0 {
        return 0.0;
    }
    m.iter().map(|z| z.norm_sqr()).sum::<f64>() / m.len() as f64
}

/// Adds i.i.d. complex Gaussian estimation error of power
/// `rel * mean |h|^2` per entry, per link. A blocked (all-zero) direct link
/// stays zero.
pub fn perturb_csi(set: &ChannelSet, rel: f64, seed_val: u64) -> ChannelSet {
    if rel == 0.0 {
        return set.clone();
    }
    let mut out = set.clone();
    let mut rng = seed::rng(seed_val);
    for (m, tag) in [(&mut out.h_direct, 0u64), (&mut out.h_forward, 1), (&mut out.h_reflect, 2)] {
        let p = empirical_power(m);
        let _ = tag;
        if p > 0.0 {
            let err = cn_matrix(&mut rng, m.nrows(), m.ncols(), rel * p);
            *m += err;
        }
    }
    out
}

fn gather_columns(m: &DMatrix<Complex64>, positions: &[usize]) -> DMatrix<Complex64> {
    let mut out = DMatrix::zeros(m.nrows(), positions.len());
    for (j, &p) in positions.iter().enumerate() {
        out.set_column(j, &m.column(p));
    }
    out
}

struct TrialSetup {
    channels: ChannelSet,
    frame: Frame,
    dmrs_tx: DMatrix<Complex64>,
    data_tx: DMatrix<Complex64>,
    data_positions: Vec<usize>,
    noise_power: f64,
    trial_seed: u64,
}

fn setup_trial(cfg: &HarnessConfig, point: &SweepPoint, point_idx: usize, trial: usize) -> Result<TrialSetup> {
    let trial_seed = seed::derive_path(cfg.run.seed, &[TAG_TRIAL, point_idx as u64, trial as u64]);
    let scenario = cfg.scenario_for(point.n_atoms);
    let channels = make_channel_set(&scenario, seed::derive(trial_seed, TAG_CHANNEL))?;
    let frame_cfg = cfg.frame_config(seed::derive(trial_seed, TAG_FRAME))?;
    let mut bit_rng = seed::rng(seed::derive(trial_seed, TAG_BITS));
    use rand::Rng;
    let data_bits: Vec<u8> = (0..frame_cfg.data_bit_len()).map(|_| bit_rng.random_range(0..2u8)).collect();
    let frame = build_frame(&frame_cfg, &data_bits)?;
    let blocks = split_frame(&frame);
    let data_positions = frame_cfg.data_positions();
    if data_positions.is_empty() {
        return Err(Error::UnsupportedConfiguration(
            "the frame layout leaves no DATA symbols to evaluate on".into(),
        ));
    }
    Ok(TrialSetup {
        channels,
        dmrs_tx: blocks.dmrs,
        data_tx: blocks.data,
        data_positions,
        frame,
        noise_power: noise_power_for(point.snr_db),
        trial_seed,
    })
}

fn evaluate(
    cfg: &HarnessConfig,
    setup: &TrialSetup,
    link: &LinkModel,
    combiner: &DMatrix<Complex64>,
    point: &SweepPoint,
    method: MethodTag,
) -> Result<ExperimentResult> {
    let eval_seed = seed::derive(setup.trial_seed, TAG_EVAL);
    let received = simulate_uplink(link, &setup.frame.symbols, eval_seed)?;
    let r_data = gather_columns(&received, &setup.data_positions);
    let r_dmrs = gather_columns(&received, &setup.frame.config.dmrs_positions);

    let equalized = combiner * &r_data;
    let sinr = evm_sinr(&equalized, &setup.data_tx)?;
    let se = spectral_efficiency(sinr);
    let ee = energy_efficiency(se, &cfg.power, point.n_atoms)?;

    let rx_bits = demodulate_link(
        &r_data,
        combiner,
        setup.frame.config.modulation,
        Some((&setup.dmrs_tx, &r_dmrs)),
    )?;
    let bit_err = ber(&setup.frame.data_bits, &rx_bits)?;

    let result = ExperimentResult {
        config_hash: cfg.hash,
        seed: setup.trial_seed,
        method,
        ber: bit_err,
        sinr_db: 10.0 * sinr.log10(),
        se_bps_hz: se,
        ee_bits_per_joule: ee,
    };
    result.validate()?;
    Ok(result)
}

/// Runs both methods for one (point, trial). Rows come back in config method
/// order.
pub fn run_trial(cfg: &HarnessConfig, point: &SweepPoint, point_idx: usize, trial: usize) -> Result<Vec<ResultRow>> {
    let setup = setup_trial(cfg, point, point_idx, trial)?;
    let surface = cfg.surface_for(point.n_atoms, point.impairment)?;
    let mut rows = Vec::with_capacity(cfg.sweep.methods.len());
    for &method in &cfg.sweep.methods {
        let mut link = LinkModel::new(setup.channels.clone(), surface.clone(), setup.noise_power)?;
        if let Some(knob) = cfg.surface.knob {
            let (_, imp) = apply_impairment(&link.surface, knob, seed::derive(setup.trial_seed, TAG_KNOB))?;
            link.impairment = Some(imp);
        }
        let combiner = match method {
            MethodTag::Rc => {
                let opts = cfg.train_options(seed::derive(setup.trial_seed, TAG_TRAIN));
                let out = train_joint(&link, &setup.dmrs_tx, &setup.dmrs_tx, &opts)?;
                link.set_phase_indices(&out.phase_indices)?;
                out.combiner
            }
            MethodTag::ModelBased => {
                let csi = perturb_csi(&setup.channels, point.csi_error, seed::derive(setup.trial_seed, TAG_CSI));
                let (idx, w) = model_based_baseline(&csi, &link)?;
                link.set_phase_indices(&idx)?;
                w
            }
        };
        let result = evaluate(cfg, &setup, &link, &combiner, point, method)?;
        rows.push(ResultRow {
            n_atoms: point.n_atoms,
            snr_db: point.snr_db,
            impairment: point.impairment,
            csi_error: point.csi_error,
            trial,
            method,
            seed: result.seed,
            config_hash: result.config_hash,
            ber: result.ber,
            sinr_db: result.sinr_db,
            se_bps_hz: result.se_bps_hz,
            ee_bits_per_joule: result.ee_bits_per_joule,
        });
    }
    Ok(rows)
}

fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if threads == 0 {
        Ok(f())
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InternalConsistency(format!("thread pool: {e}")))?;
        Ok(pool.install(f))
    }
}

/// Runs the full grid. `threads = 0` uses the process-wide pool.
pub fn run_sweep(cfg: &HarnessConfig, threads: usize) -> Result<SweepOutput> {
    let points = grid(cfg);
    let jobs: Vec<(usize, usize)> = points
        .iter()
        .enumerate()
        .flat_map(|(pi, _)| (0..cfg.sweep.trials).map(move |t| (pi, t)))
        .collect();

    let row_groups: Result<Vec<Vec<ResultRow>>> = with_pool(threads, || {
        jobs.par_iter().map(|&(pi, trial)| run_trial(cfg, &points[pi], pi, trial)).collect()
    })?;
    let rows: Vec<ResultRow> = row_groups?.into_iter().flatten().collect();

    let summary = report::summarize(&rows);
    let results_csv = report::results_to_csv(&rows);
    let summary_csv = report::summary_to_csv(&summary);

    // Internal consistency: the summary must be recomputable from the raw
    // CSV text alone.
    let reparsed = report::parse_results_csv(&results_csv)?;
    let recomputed = report::summary_to_csv(&report::summarize(&reparsed));
    if recomputed != summary_csv {
        return Err(Error::InternalConsistency(
            "summary medians do not match a recomputation from the raw rows".into(),
        ));
    }

    Ok(SweepOutput { rows, summary, results_csv, summary_csv })
}

/// Raw and summary tables of the sounding evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct SoundingOutput {
    pub raw_csv: String,
    pub summary_csv: String,
}

pub const SOUNDING_RAW_HEADER: &str = "snr_db,trial,sweep,atom,residual,rel_error";
pub const SOUNDING_SUMMARY_HEADER: &str = "snr_db,sweep,trials,median_rel_error";

/// Sweeps the loopback estimator over the SNR grid: `trials` independent
/// static channels per SNR, `sweeps` blended round-robin passes each, one
/// raw row per (snr, trial, sweep, atom).
pub fn run_sounding_eval(cfg: &HarnessConfig, threads: usize) -> Result<SoundingOutput> {
    use crate::sounding::{round_robin, SoundingConfig, SweepEstimate};

    let m = cfg.scenario.ap_antennas;
    let n = cfg.scenario.atoms;
    let jobs: Vec<(usize, usize)> = cfg
        .sounding
        .snr_db
        .iter()
        .enumerate()
        .flat_map(|(si, _)| (0..cfg.sounding.trials).map(move |t| (si, t)))
        .collect();

    type TrialRows = Vec<(f64, usize, usize, usize, f64, f64)>;
    let groups: Result<Vec<TrialRows>> = with_pool(threads, || {
        jobs.par_iter()
            .map(|&(si, trial)| {
                let snr_db = cfg.sounding.snr_db[si];
                let noise = noise_power_for(snr_db);
                let base = seed::derive_path(cfg.run.seed, &[TAG_SOUND, si as u64, trial as u64]);
                let g = crate::channel::gen_rician(
                    m,
                    n,
                    cfg.scenario.reflect_k_factor,
                    seed::derive(base, 1),
                    seed::derive(base, 2),
                )? * Complex64::new(cfg.scenario.path_loss_reflect.sqrt(), 0.0);

                let mut rows = Vec::with_capacity(cfg.sounding.sweeps * n);
                let mut prior: Option<SweepEstimate> = None;
                for sweep in 0..cfg.sounding.sweeps {
                    let scfg = SoundingConfig {
                        pilot_len: cfg.sounding.pilot_len.max(m),
                        subset_size: cfg.sounding.subset_size,
                        noise_power: noise,
                        self_interference_power: cfg.sounding.self_interference,
                        smoothing: cfg.sounding.smoothing,
                        seed: seed::derive_path(base, &[3, sweep as u64]),
                    };
                    let est = round_robin(&g, &scfg, prior.as_ref())?;
                    for atom in 0..n {
                        let gn = g.column(atom);
                        let en = est.g_hat.column(atom);
                        let rel = (&en - &gn).norm().min((&en + gn).norm()) / gn.norm();
                        rows.push((snr_db, trial, sweep, atom, est.residuals[atom], rel));
                    }
                    prior = Some(est);
                }
                Ok(rows)
            })
            .collect()
    })?;

    let mut raw = String::from(SOUNDING_RAW_HEADER);
    raw.push('\n');
    let mut by_point: std::collections::BTreeMap<(usize, usize), Vec<f64>> = Default::default();
    let flat: Vec<_> = groups?.into_iter().flatten().collect();
    for (snr_db, trial, sweep, atom, residual, rel) in &flat {
        use std::fmt::Write as _;
        let _ = writeln!(raw, "{snr_db},{trial},{sweep},{atom},{residual},{rel}");
        let si = cfg.sounding.snr_db.iter().position(|s| s == snr_db).expect("snr from grid");
        by_point.entry((si, *sweep)).or_default().push(*rel);
    }

    let mut summary = String::from(SOUNDING_SUMMARY_HEADER);
    summary.push('\n');
    for ((si, sweep), mut vals) in by_point {
        use std::fmt::Write as _;
        let med = report::median(&mut vals);
        let _ = writeln!(summary, "{},{},{},{}", cfg.sounding.snr_db[si], sweep, cfg.sounding.trials, med);
    }

    Ok(SoundingOutput { raw_csv: raw, summary_csv: summary })
}

/// Writes `results.csv` and `summary.csv` under `out_dir`.
pub fn write_sweep(output: &SweepOutput, out_dir: &std::path::Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("results.csv"), &output.results_csv)?;
    std::fs::write(out_dir.join("summary.csv"), &output.summary_csv)?;
    Ok(())
}

/// Writes `sounding.csv` and `sounding_summary.csv` under `out_dir`.
pub fn write_sounding(output: &SoundingOutput, out_dir: &std::path::Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("sounding.csv"), &output.raw_csv)?;
    std::fs::write(out_dir.join("sounding_summary.csv"), &output.summary_csv)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn tiny_config() -> HarnessConfig {
        parse_config(
            "\
[run]
seed = 7

[scenario]
ap_antennas = 2
atoms = 4
users = 1

[frame]
symbols = 28
dmrs_every = 4

[training]
max_outer_iters = 4
inner_steps = 1
washout = 2

[sweep]
atoms = 4
snr_db = 20
impairment = 0.3
csi_error = 0.5
trials = 1
methods = rc, model_based
",
        )
        .unwrap()
    }

    #[test]
    fn single_point_single_trial_yields_two_rows() {
        let cfg = tiny_config();
        let out = run_sweep(&cfg, 1).unwrap();
        assert_eq!(out.rows.len(), 2);
        assert_eq!(out.rows[0].method, MethodTag::Rc);
        assert_eq!(out.rows[1].method, MethodTag::ModelBased);
        assert_eq!(out.summary.len(), 2);
    }

    #[test]
    fn sweep_is_byte_identical_across_runs_and_thread_counts() {
        let cfg = tiny_config();
        let a = run_sweep(&cfg, 1).unwrap();
        let b = run_sweep(&cfg, 1).unwrap();
        assert_eq!(a.results_csv, b.results_csv);
        assert_eq!(a.summary_csv, b.summary_csv);
        let c = run_sweep(&cfg, 2).unwrap();
        assert_eq!(a.results_csv, c.results_csv);
    }

    #[test]
    fn earlier_trials_survive_trial_count_changes() {
        let mut cfg = tiny_config();
        let one = run_sweep(&cfg, 1).unwrap();
        cfg.sweep.trials = 3;
        let three = run_sweep(&cfg, 1).unwrap();
        assert_eq!(&three.rows[..2], &one.rows[..]);
    }

    #[test]
    fn csi_perturbation_scales_with_request() {
        let cfg = crate::channel::ScenarioConfig { atoms: 200, users: 50, ..Default::default() };
        let set = make_channel_set(&cfg, 3).unwrap();
        let noisy = perturb_csi(&set, 1.0, 4);
        let diff = &noisy.h_forward - &set.h_forward;
        let p = empirical_power(&diff);
        assert!((p - 1.0).abs() < 0.05, "error power {p}");
        let same = perturb_csi(&set, 0.0, 5);
        assert_eq!(same, set);
    }

    #[test]
    fn blocked_direct_csi_stays_zero() {
        let cfg = crate::channel::ScenarioConfig { blockage: true, ..Default::default() };
        let set = make_channel_set(&cfg, 6).unwrap();
        let noisy = perturb_csi(&set, 2.0, 7);
        assert!(noisy.h_direct.iter().all(|z| z.norm() == 0.0));
        assert_ne!(noisy.h_forward, set.h_forward);
    }

    #[test]
    fn sounding_eval_produces_monotone_noiseless_limit() {
        let cfg = parse_config(
            "\
[run]
seed = 9

[scenario]
ap_antennas = 2
atoms = 4

[sounding]
pilot_len = 4
subset_size = 2
snr_db = 200
smoothing = 1.0
sweeps = 2
trials = 3
",
        )
        .unwrap();
        let out = run_sounding_eval(&cfg, 1).unwrap();
        // 200 dB SNR is effectively noiseless: every rel_error < 1e-9.
        for line in out.raw_csv.lines().skip(1) {
            let rel: f64 = line.split(',').last().unwrap().parse().unwrap();
            assert!(rel < 1e-9, "line `{line}`");
        }
        assert!(out.summary_csv.lines().count() > 1);
    }
}
