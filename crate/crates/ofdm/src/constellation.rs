//! Unit-energy Gray-mapped constellations.
//!
//! Symbol index `s` carries the bits of its binary representation, most
//! significant bit first; `points[s]` is the Gray-mapped signal point.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Supported data modulations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Modulation {
    #[serde(rename = "qpsk")]
    Qpsk,
    #[serde(rename = "16qam")]
    Qam16,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constellation {
    points: Vec<Complex64>,
    bits: usize,
}

/// Gray-coded 4-PAM level for two bits: 00 -> -3, 01 -> -1, 11 -> 1, 10 -> 3.
fn pam4(b0: usize, b1: usize) -> f64 {
    match (b0, b1) {
        (0, 0) => -3.0,
        (0, 1) => -1.0,
        (1, 1) => 1.0,
        _ => 3.0,
    }
}

impl Constellation {
    pub fn new(modulation: Modulation) -> Self {
        match modulation {
            Modulation::Qpsk => {
                let a = std::f64::consts::FRAC_1_SQRT_2;
                let sign = |b: usize| if b == 0 { a } else { -a };
                let points = (0..4).map(|s| Complex64::new(sign(s >> 1), sign(s & 1))).collect();
                Constellation { points, bits: 2 }
            }
            Modulation::Qam16 => {
                let scale = 1.0 / 10f64.sqrt();
                let points = (0..16)
                    .map(|s| {
                        let re = pam4((s >> 3) & 1, (s >> 2) & 1);
                        let im = pam4((s >> 1) & 1, s & 1);
                        Complex64::new(re, im) * scale
                    })
                    .collect();
                Constellation { points, bits: 4 }
            }
        }
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    /// Bits per symbol `L`.
    pub fn bits_per_symbol(&self) -> usize {
        self.bits
    }

    pub fn size(&self) -> usize {
        self.points.len()
    }

    /// Bit `j` (0 = most significant) of symbol index `s`.
    pub fn bit(&self, s: usize, j: usize) -> u8 {
        ((s >> (self.bits - 1 - j)) & 1) as u8
    }

    /// Symbol index carrying the given `L` bits.
    pub fn index_of(&self, bits: &[u8]) -> usize {
        debug_assert_eq!(bits.len(), self.bits);
        bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
    }

    /// Index of the nearest point (hard decision).
    pub fn nearest(&self, z: Complex64) -> usize {
        let mut best = 0;
        for (s, p) in self.points.iter().enumerate() {
            if (z - p).norm_sqr() < (z - self.points[best]).norm_sqr() {
                best = s;
            }
        }
        best
    }
}
