use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::Float;

/// Which of the two floating-point formats a value lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Precision {
    Working,
    Lower,
}

/// Real floating-point scalar usable by every kernel in the crate.
///
/// Implemented for `f64` (working precision) and `f32` (lower precision).
pub trait Real:
    Float
    + Debug
    + Display
    + Default
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Send
    + Sync
    + 'static
{
    const PRECISION: Precision;

    /// Unit roundoff `u` (half the machine epsilon).
    fn unit_roundoff() -> f64;

    fn from_f64(x: f64) -> Self;

    fn to_f64(self) -> f64;

    fn lit(x: f64) -> Self {
        Self::from_f64(x)
    }
}

impl Real for f64 {
    const PRECISION: Precision = Precision::Working;

    fn unit_roundoff() -> f64 {
        f64::EPSILON / 2.0
    }

    fn from_f64(x: f64) -> Self {
        x
    }

    fn to_f64(self) -> f64 {
        self
    }
}

impl Real for f32 {
    const PRECISION: Precision = Precision::Lower;

    fn unit_roundoff() -> f64 {
        f32::EPSILON as f64 / 2.0
    }

    fn from_f64(x: f64) -> Self {
        x as f32
    }

    fn to_f64(self) -> f64 {
        self as f64
    }
}

/// Unit roundoffs of the two formats a mixed-precision run uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionConfig {
    pub u_working: f64,
    pub u_lower: f64,
}

impl PrecisionConfig {
    pub fn new(u_working: f64, u_lower: f64) -> Option<Self> {
        (u_working > 0.0 && u_lower > u_working).then_some(Self { u_working, u_lower })
    }
}

impl Default for PrecisionConfig {
    /// binary64 / binary32.
    fn default() -> Self {
        Self {
            u_working: f64::unit_roundoff(),
            u_lower: f32::unit_roundoff(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_pair_is_binary64_binary32() {
        let p = PrecisionConfig::default();
        assert_eq!(p.u_working, 2f64.powi(-53));
        assert_eq!(p.u_lower, 2f64.powi(-24));
        assert!(PrecisionConfig::new(1e-8, 1e-16).is_none());
    }
}
