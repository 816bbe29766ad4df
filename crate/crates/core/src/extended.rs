//! Extended real numbers for free energies that may be `+inf`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign};

/// A real number or `+inf`. Free energies are bounded below, so `-inf` never
/// arises; a KL divergence against a factor with a zero where the belief has
/// mass evaluates to [`Extended::PosInfinity`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Extended {
    Finite(f64),
    PosInfinity,
}

impl Extended {
    pub const ZERO: Extended = Extended::Finite(0.0);

    pub fn is_finite(&self) -> bool {
        matches!(self, Extended::Finite(_))
    }

    /// The finite value, if any.
    pub fn finite(&self) -> Option<f64> {
        match self {
            Extended::Finite(x) => Some(*x),
            Extended::PosInfinity => None,
        }
    }

    /// Lossy conversion to `f64` (`+inf` maps to `f64::INFINITY`).
    pub fn to_f64(self) -> f64 {
        match self {
            Extended::Finite(x) => x,
            Extended::PosInfinity => f64::INFINITY,
        }
    }

    /// Builds an extended value from an `f64`; `+inf` becomes
    /// [`Extended::PosInfinity`]. Panics on NaN or `-inf`.
    pub fn from_f64(x: f64) -> Self {
        assert!(!x.is_nan(), "NaN is not an extended real");
        assert!(x != f64::NEG_INFINITY, "-inf is not representable");
        if x == f64::INFINITY {
            Extended::PosInfinity
        } else {
            Extended::Finite(x)
        }
    }
}

impl Add for Extended {
    type Output = Extended;
    fn add(self, rhs: Extended) -> Extended {
        match (self, rhs) {
            (Extended::Finite(a), Extended::Finite(b)) => Extended::Finite(a + b),
            _ => Extended::PosInfinity,
        }
    }
}

impl AddAssign for Extended {
    fn add_assign(&mut self, rhs: Extended) {
        *self = *self + rhs;
    }
}

impl Add<f64> for Extended {
    type Output = Extended;
    fn add(self, rhs: f64) -> Extended {
        self + Extended::from_f64(rhs)
    }
}

impl PartialOrd for Extended {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.to_f64().partial_cmp(&other.to_f64())
    }
}

impl fmt::Display for Extended {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extended::Finite(x) => {
                if let Some(p) = f.precision() {
                    write!(f, "{:.*e}", p, x)
                } else {
                    write!(f, "{x}")
                }
            }
            Extended::PosInfinity => write!(f, "inf"),
        }
    }
}
