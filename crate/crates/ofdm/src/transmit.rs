//! Transmitter and channel application.

use num_complex::Complex64;
use rand::Rng;

use crate::channel::unit_cn;
use crate::scenario::OfdmScenario;
use crate::OfdmError;

/// Everything the transmitter produced for one OFDM symbol.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub info: Vec<u8>,
    /// Codeword followed by the zero padding, before interleaving.
    pub coded: Vec<u8>,
    pub interleaved: Vec<u8>,
    /// Symbol index per data carrier, in the order of `data_idx`.
    pub symbols: Vec<usize>,
    /// Transmitted value on every subcarrier.
    pub x: Vec<Complex64>,
}

/// Encode, interleave, map and insert pilots.
pub fn transmit(sc: &OfdmScenario, info: &[u8]) -> Result<Frame, OfdmError> {
    if info.len() != sc.k {
        return Err(OfdmError::LengthMismatch {
            expected: sc.k,
            got: info.len(),
        });
    }
    let mut coded = sc.code.encode(info);
    coded.resize(sc.coded_len + sc.pad, 0);
    let interleaved = sc.interleave(&coded);
    let l = sc.constellation.bits_per_symbol();
    let symbols: Vec<usize> = interleaved.chunks(l).map(|b| sc.constellation.index_of(b)).collect();
    let mut x = vec![Complex64::new(0.0, 0.0); sc.carriers()];
    for (&p, &s) in sc.pilot_idx.iter().zip(&sc.pilot_symbols) {
        x[p] = s;
    }
    for (&d, &s) in sc.data_idx.iter().zip(&symbols) {
        x[d] = sc.constellation.points()[s];
    }
    Ok(Frame {
        info: info.to_vec(),
        coded,
        interleaved,
        symbols,
        x,
    })
}

/// Channel draw with unit-variance noise, so one draw can be reused across
/// noise levels.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelDraw {
    pub h: Vec<Complex64>,
    pub w: Vec<Complex64>,
}

impl ChannelDraw {
    pub fn sample<R: Rng + ?Sized>(sc: &OfdmScenario, rng: &mut R) -> Self {
        let h = sc.sampler.sample(rng);
        let w = (0..sc.carriers()).map(|_| unit_cn(rng)).collect();
        ChannelDraw { h, w }
    }

    /// `y = h * x + w / sqrt(gamma)`; an infinite `gamma` switches the noise off.
    pub fn observe(&self, x: &[Complex64], gamma: f64) -> Vec<Complex64> {
        let sigma = if gamma.is_infinite() { 0.0 } else { gamma.sqrt().recip() };
        self.h
            .iter()
            .zip(x)
            .zip(&self.w)
            .map(|((h, x), w)| h * x + w * sigma)
            .collect()
    }
}

/// Draws a channel and noise and returns `(y, h)`.
pub fn apply_channel<R: Rng + ?Sized>(
    sc: &OfdmScenario,
    x: &[Complex64],
    gamma: f64,
    rng: &mut R,
) -> (Vec<Complex64>, Vec<Complex64>) {
    let draw = ChannelDraw::sample(sc, rng);
    (draw.observe(x, gamma), draw.h)
}
