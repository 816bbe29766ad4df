//! Frequency-domain channel prior and channel realizations.

use bpmf_core::gaussian_mf::{CMatrix, CVector, ComplexGaussian};
use nalgebra::Cholesky;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::OfdmError;

/// Exponential power-delay profile.
///
/// The correlation between subcarriers `k` and `l` is
/// `1 / (1 + j 2 pi (k - l) df tau_rms)`. With `tau_rms = 1 us` (close to the
/// ETU rms delay spread) the 50% coherence bandwidth `1 / (5 tau_rms)` is
/// 200 kHz. A small diagonal loading keeps the prior precision well
/// conditioned.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelProfile {
    pub tau_rms_us: f64,
    pub subcarrier_spacing_khz: f64,
    #[serde(default = "default_loading")]
    pub diagonal_loading: f64,
}

fn default_loading() -> f64 {
    1e-4
}

impl Default for ChannelProfile {
    fn default() -> Self {
        ChannelProfile {
            tau_rms_us: 1.0,
            subcarrier_spacing_khz: 15.0,
            diagonal_loading: default_loading(),
        }
    }
}

impl ChannelProfile {
    pub fn validate(&self) -> Result<(), OfdmError> {
        let ok = |x: f64| x.is_finite() && x >= 0.0;
        if !(ok(self.tau_rms_us) && self.subcarrier_spacing_khz > 0.0 && ok(self.diagonal_loading)) {
            return Err(OfdmError::Config("channel profile needs tau_rms >= 0, spacing > 0, loading >= 0".into()));
        }
        Ok(())
    }

    /// Coherence bandwidth estimate `1 / (5 tau_rms)` in kHz.
    pub fn coherence_bandwidth_khz(&self) -> f64 {
        1e3 / (5.0 * self.tau_rms_us)
    }

    /// Prior covariance over `n` subcarriers (unit average power per carrier).
    pub fn covariance(&self, n: usize) -> CMatrix {
        let x = 2.0 * std::f64::consts::PI * self.subcarrier_spacing_khz * 1e3 * self.tau_rms_us * 1e-6;
        CMatrix::from_fn(n, n, |k, l| {
            let d = k as f64 - l as f64;
            let r = Complex64::new(1.0, x * d).inv();
            if k == l {
                r + self.diagonal_loading
            } else {
                r
            }
        })
    }

    /// Zero-mean prior `CN(0, R)`.
    pub fn prior(&self, n: usize) -> Result<ComplexGaussian, OfdmError> {
        Ok(ComplexGaussian::from_covariance(
            CVector::zeros(n),
            self.covariance(n),
        )?)
    }
}

/// Draws from `CN(mu, R)` given the lower Cholesky factor of `R`.
#[derive(Clone, Debug)]
pub struct ChannelSampler {
    mean: CVector,
    lower: CMatrix,
}

impl ChannelSampler {
    pub fn new(prior: &ComplexGaussian) -> Result<Self, OfdmError> {
        let chol = Cholesky::new(prior.covariance().clone())
            .ok_or_else(|| OfdmError::Config("channel covariance is not positive definite".into()))?;
        Ok(ChannelSampler {
            mean: prior.mean().clone(),
            lower: chol.l(),
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Complex64> {
        let z = CVector::from_iterator(self.mean.len(), (0..self.mean.len()).map(|_| unit_cn(rng)));
        (&self.lower * z + &self.mean).iter().copied().collect()
    }
}

/// One draw of `CN(0, 1)`.
pub fn unit_cn<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}
