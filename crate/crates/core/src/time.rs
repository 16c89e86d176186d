//! Integer simulation clock.
//!
//! All scheduling happens on a microsecond grid so that event timestamps such
//! as `5.180` come out exact instead of accumulating floating-point drift.

use core::fmt;
use core::ops::{Add, AddAssign, Mul, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Micros(pub u64);

impl Micros {
    pub const ZERO: Micros = Micros(0);

    /// Converts seconds to microseconds. Returns `None` for negative or
    /// non-finite input and for values that are not within 1 ns of the
    /// microsecond grid.
    pub fn from_secs(secs: f64) -> Option<Micros> {
        if !secs.is_finite() || secs < 0.0 {
            return None;
        }
        let us = secs * 1e6;
        let rounded = libm::round(us);
        if (us - rounded).abs() > 1e-3 {
            return None;
        }
        Some(Micros(rounded as u64))
    }

    pub fn as_secs(self) -> f64 {
        self.0 as f64 * 1e-6
    }
}

impl Add for Micros {
    type Output = Micros;
    fn add(self, rhs: Micros) -> Micros {
        Micros(self.0 + rhs.0)
    }
}

impl AddAssign for Micros {
    fn add_assign(&mut self, rhs: Micros) {
        self.0 += rhs.0;
    }
}

impl Sub for Micros {
    type Output = Micros;
    fn sub(self, rhs: Micros) -> Micros {
        Micros(self.0 - rhs.0)
    }
}

impl Mul<u64> for Micros {
    type Output = Micros;
    fn mul(self, rhs: u64) -> Micros {
        Micros(self.0 * rhs)
    }
}

impl fmt::Display for Micros {
    /// Seconds with six decimals, e.g. `5.180000`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:06}", self.0 / 1_000_000, self.0 % 1_000_000)
    }
}
