//! Monte-Carlo BER sweep.
//!
//! Trial `t` draws its information bits, channel and unit-variance noise from
//! a ChaCha stream selected by `(master seed, t)`. The same draw is reused at
//! every SNR point and for every receiver (common random numbers), so BER
//! differences between points and receivers are not masked by independent
//! sampling noise. Results are reduced in trial order, which makes the output
//! independent of the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::receiver::{run_receiver, ReceiverKind, TrialRecord};
use crate::scenario::OfdmScenario;
use crate::transmit::{transmit, ChannelDraw};
use crate::OfdmError;

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub receivers: Vec<ReceiverKind>,
    pub ebn0_db: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub jobs: usize,
}

impl SweepConfig {
    /// Grid, trial count and seed from the scenario file; all receivers.
    pub fn from_scenario(sc: &OfdmScenario) -> Self {
        SweepConfig {
            receivers: ReceiverKind::ALL.to_vec(),
            ebn0_db: sc.config.ebn0_db.clone(),
            trials: sc.default_trials(),
            seed: sc.config.seed,
            jobs: 1,
        }
    }
}

/// Aggregated result for one (SNR, receiver) pair.
#[derive(Clone, Debug, PartialEq)]
pub struct BerPoint {
    pub snr_db: f64,
    pub receiver: ReceiverKind,
    pub trials: usize,
    pub bits: usize,
    pub bit_errors: usize,
    pub outer_iterations: usize,
    pub converged: usize,
}

impl BerPoint {
    pub fn ber(&self) -> f64 {
        self.bit_errors as f64 / self.bits as f64
    }

    pub fn mean_outer_iters(&self) -> f64 {
        self.outer_iterations as f64 / self.trials as f64
    }
}

/// Generator for trial `t`.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// All receivers at all SNR points for one trial, indexed `[snr][receiver]`.
pub fn run_trial(sc: &OfdmScenario, cfg: &SweepConfig, trial: usize) -> Result<Vec<Vec<TrialRecord>>, OfdmError> {
    let mut rng = trial_rng(cfg.seed, trial);
    let info: Vec<u8> = (0..sc.k).map(|_| rng.gen_range(0..2)).collect();
    let frame = transmit(sc, &info)?;
    let draw = ChannelDraw::sample(sc, &mut rng);
    cfg.ebn0_db
        .iter()
        .map(|&db| {
            let gamma = sc.gamma(db);
            let y = draw.observe(&frame.x, gamma);
            cfg.receivers
                .iter()
                .map(|&r| Ok(TrialRecord::new(&info, run_receiver(r, sc, &y, &draw.h, gamma)?)))
                .collect()
        })
        .collect()
}

pub fn run_sweep(sc: &OfdmScenario, cfg: &SweepConfig) -> Result<Vec<BerPoint>, OfdmError> {
    if cfg.trials == 0 || cfg.receivers.is_empty() || cfg.ebn0_db.is_empty() {
        return Err(OfdmError::Config("sweep needs at least one trial, receiver and SNR point".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.max(1))
        .build()
        .map_err(|e| OfdmError::Config(format!("thread pool: {e}")))?;
    let per_trial: Vec<Vec<Vec<TrialRecord>>> = pool.install(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| run_trial(sc, cfg, t))
            .collect::<Result<_, _>>()
    })?;
    let mut points = Vec::with_capacity(cfg.ebn0_db.len() * cfg.receivers.len());
    for (i, &db) in cfg.ebn0_db.iter().enumerate() {
        for (j, &r) in cfg.receivers.iter().enumerate() {
            let mut p = BerPoint {
                snr_db: db,
                receiver: r,
                trials: cfg.trials,
                bits: cfg.trials * sc.k,
                bit_errors: 0,
                outer_iterations: 0,
                converged: 0,
            };
            for rec in per_trial.iter().map(|t| &t[i][j]) {
                p.bit_errors += rec.bit_errors;
                p.outer_iterations += rec.outer_iterations;
                p.converged += usize::from(rec.converged);
            }
            points.push(p);
        }
    }
    Ok(points)
}

pub const CSV_HEADER: &str = "snr_db,receiver,trials,bit_errors,ber,mean_outer_iters";

/// CSV with fixed column order and round-trip float formatting.
pub fn to_csv(points: &[BerPoint]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for p in points {
        out.push_str(&format!(
            "{},{},{},{},{:.16e},{:.16e}\n",
            p.snr_db,
            p.receiver,
            p.trials,
            p.bit_errors,
            p.ber(),
            p.mean_outer_iters()
        ));
    }
    out
}
