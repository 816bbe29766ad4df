//! Coded OFDM with joint channel estimation and decoding.
//!
//! The transmitter encodes `K` information bits with a terminated
//! convolutional code, interleaves, maps groups of `L` bits onto a Gray-coded
//! constellation and inserts QPSK pilots. The channel is a correlated complex
//! Gaussian frequency response plus white noise.
//!
//! Three receivers are provided:
//!
//! * [`receiver::run_bpmf_receiver`]: BP for the discrete part (code,
//!   modulation) and mean field for the channel, run by the generic loopy
//!   schedule of `bpmf-core`.
//! * [`receiver::run_bp_gauss_baseline`]: BP everywhere with the channel
//!   messages collapsed to Gaussians by moment matching.
//! * [`receiver::run_perfect_csi`]: BP decoding with the true channel.
//!
//! [`sweep::run_sweep`] drives Monte-Carlo BER curves.

pub mod channel;
pub mod code;
pub mod constellation;
pub mod receiver;
pub mod scenario;
pub mod sweep;
pub mod transmit;

use thiserror::Error;

pub use constellation::{Constellation, Modulation};
pub use receiver::{ReceiverKind, TrialRecord};
pub use scenario::{OfdmScenario, ScenarioConfig};
pub use sweep::{run_sweep, BerPoint, SweepConfig};

#[derive(Debug, Clone, Error)]
pub enum OfdmError {
    #[error("invalid scenario: {0}")]
    Config(String),
    #[error("scenario parse error: {0}")]
    Parse(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Core(#[from] bpmf_core::Error),
}
