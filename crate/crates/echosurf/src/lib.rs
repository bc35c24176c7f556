//! Link-level simulator for reflecting-surface-aided wireless links whose
//! meta-atoms exhibit nonlinearity and memory, an echo-state view of the
//! end-to-end link, and trainers for joint passive/active beamforming.
//!
//! Module map:
//!
//! * [`channel`] — three-part channel (direct / forward / reflecting) with
//!   Gauss-Markov evolution.
//! * [`surface`] — ideal diagonal reflection and the stateful Res-Cap atom
//!   model, plus impairment knobs.
//! * [`reservoir`] — reservoir rollouts, echo-state-property checks, ridge
//!   readout training.
//! * [`beamform`] — uplink simulation, the alternating trainer, the
//!   model-based baseline, reciprocity precoding, demodulation.
//! * [`sounding`] — full-duplex CSRS loopback, rank-1 channel recovery,
//!   round-robin traversal, subspace variation detection.
//! * [`frames`] — DMRS/CSRS/DATA frame structure and QPSK/16QAM modems.
//! * [`metrics`], [`config`], [`sweep`], [`report`] — the evaluation
//!   harness.

pub mod beamform;
pub mod channel;
pub mod config;
pub mod error;
pub mod frames;
pub mod metrics;
pub mod report;
pub mod reservoir;
pub mod seed;
pub mod sounding;
pub mod surface;
pub mod sweep;

pub use error::{Error, Result};
