//! Scenario files and the derived system parameters.

use bpmf_core::gaussian_mf::ComplexGaussian;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelProfile, ChannelSampler};
use crate::code::ConvCode;
use crate::constellation::{Constellation, Modulation};
use crate::OfdmError;

/// Outer-loop settings shared by the iterative receivers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReceiverSettings {
    pub max_outer: usize,
    pub rel_free_energy_tol: Option<f64>,
    pub message_delta_tol: f64,
    pub inner_sweeps: usize,
    pub damping: f64,
    /// Sweep budget of the single BP decode with known channel.
    pub perfect_csi_sweeps: usize,
}

impl Default for ReceiverSettings {
    fn default() -> Self {
        ReceiverSettings {
            max_outer: 30,
            rel_free_energy_tol: None,
            message_delta_tol: 1e-6,
            inner_sweeps: 5,
            damping: 0.0,
            perfect_csi_sweeps: 50,
        }
    }
}

/// Contents of a scenario JSON file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    /// Total subcarriers `M + N`.
    pub carriers: usize,
    /// Pilot count `M`; pilots are spread evenly over the band.
    pub pilots: usize,
    pub modulation: Modulation,
    /// Octal generator polynomials, e.g. `["133", "171"]`.
    pub generators: Vec<String>,
    #[serde(default)]
    pub channel: ChannelProfile,
    /// Eb/N0 grid in dB.
    pub ebn0_db: Vec<f64>,
    /// Minimum number of information bits simulated per SNR point.
    pub info_bits_per_point: usize,
    /// Seeds the interleaver, the pilot symbols and the default master seed.
    pub seed: u64,
    #[serde(default)]
    pub receiver: ReceiverSettings,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, OfdmError> {
        serde_json::from_str(text).map_err(|e| OfdmError::Parse(format!("line {} column {}: {e}", e.line(), e.column())))
    }
}

/// Fully derived OFDM system.
#[derive(Clone, Debug)]
pub struct OfdmScenario {
    pub config: ScenarioConfig,
    pub constellation: Constellation,
    pub code: ConvCode,
    /// Pilot subcarrier indices `P`, ascending.
    pub pilot_idx: Vec<usize>,
    /// Data subcarrier indices `D`, ascending.
    pub data_idx: Vec<usize>,
    pub pilot_symbols: Vec<Complex64>,
    /// `interleaved[i] = coded[perm[i]]` over all `L N` bit positions.
    pub perm: Vec<usize>,
    /// Information bits `K` per OFDM symbol.
    pub k: usize,
    /// Code bits including the tail, `(K + memory) n`.
    pub coded_len: usize,
    /// Zero bits appended after the codeword to fill `L N` positions.
    pub pad: usize,
    pub prior: ComplexGaussian,
    pub sampler: ChannelSampler,
}

impl OfdmScenario {
    pub fn new(config: ScenarioConfig) -> Result<Self, OfdmError> {
        let total = config.carriers;
        let m = config.pilots;
        if m == 0 || m >= total {
            return Err(OfdmError::Config(format!("need 0 < pilots < carriers, got {m} of {total}")));
        }
        if config.info_bits_per_point == 0 {
            return Err(OfdmError::Config("info_bits_per_point must be positive".into()));
        }
        if config.ebn0_db.iter().any(|x| !x.is_finite()) {
            return Err(OfdmError::Config("SNR grid contains a non-finite value".into()));
        }
        let r = &config.receiver;
        if r.max_outer == 0 || r.inner_sweeps == 0 || r.perfect_csi_sweeps == 0 || !(0.0..1.0).contains(&r.damping) {
            return Err(OfdmError::Config("receiver settings out of range".into()));
        }
        config.channel.validate()?;
        let constellation = Constellation::new(config.modulation);
        let code = ConvCode::from_octal(&config.generators)?;
        let pilot_idx: Vec<usize> = (0..m).map(|j| ((2 * j + 1) * total) / (2 * m)).collect();
        let data_idx: Vec<usize> = (0..total).filter(|k| pilot_idx.binary_search(k).is_err()).collect();
        let bits = constellation.bits_per_symbol() * data_idx.len();
        let n = code.outputs();
        let k = (bits / n)
            .checked_sub(code.memory())
            .filter(|&k| k > 0)
            .ok_or_else(|| OfdmError::Config(format!("{bits} coded bits cannot hold the code tail")))?;
        let coded_len = code.coded_len(k);
        let pad = bits - coded_len;

        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let qpsk = Constellation::new(Modulation::Qpsk);
        let pilot_symbols = (0..m).map(|_| qpsk.points()[rng.gen_range(0..4)]).collect();
        let mut perm: Vec<usize> = (0..bits).collect();
        perm.shuffle(&mut rng);

        let prior = config.channel.prior(total)?;
        let sampler = ChannelSampler::new(&prior)?;
        Ok(OfdmScenario {
            config,
            constellation,
            code,
            pilot_idx,
            data_idx,
            pilot_symbols,
            perm,
            k,
            coded_len,
            pad,
            prior,
            sampler,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, OfdmError> {
        Self::new(ScenarioConfig::from_json(text)?)
    }

    pub fn carriers(&self) -> usize {
        self.config.carriers
    }

    /// Code rate `K / (L N)` including tail and padding overhead.
    pub fn rate(&self) -> f64 {
        self.k as f64 / self.perm.len() as f64
    }

    /// Noise precision for a given Eb/N0: data symbols have unit energy and
    /// carry `K / N` information bits each, so `gamma = (Eb/N0) K / N`.
    pub fn gamma(&self, ebn0_db: f64) -> f64 {
        10f64.powf(ebn0_db / 10.0) * self.k as f64 / self.data_idx.len() as f64
    }

    /// OFDM symbols needed to reach `info_bits_per_point`.
    pub fn default_trials(&self) -> usize {
        self.config.info_bits_per_point.div_ceil(self.k)
    }

    pub fn interleave(&self, bits: &[u8]) -> Vec<u8> {
        self.perm.iter().map(|&p| bits[p]).collect()
    }

    pub fn deinterleave(&self, bits: &[u8]) -> Vec<u8> {
        let mut out = vec![0; bits.len()];
        for (i, &p) in self.perm.iter().enumerate() {
            out[p] = bits[i];
        }
        out
    }
}
