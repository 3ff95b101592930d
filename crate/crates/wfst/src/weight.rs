use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign};

/// A cost in the tropical semiring: `⊕ = min`, `⊗ = +`, zero is `+∞`,
/// one is `0`.
///
/// Values are negative log probabilities. NaN is never a valid weight.
#[derive(Clone, Copy, PartialEq)]
pub struct Weight(f64);

impl Weight {
    pub const ZERO: Weight = Weight(f64::INFINITY);
    pub const ONE: Weight = Weight(0.0);

    /// Panics on NaN and on `-∞`.
    pub fn new(value: f64) -> Self {
        Self::try_new(value).unwrap_or_else(|| panic!("invalid tropical weight {value}"))
    }

    pub fn try_new(value: f64) -> Option<Self> {
        if value.is_nan() || value == f64::NEG_INFINITY {
            None
        } else {
            Some(Weight(value))
        }
    }

    /// Weight of an event with probability `p` (`-ln p`).
    pub fn from_prob(p: f64) -> Self {
        Weight::new(-p.ln())
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == f64::INFINITY
    }

    #[inline]
    pub fn plus(self, other: Weight) -> Weight {
        if other.0 < self.0 {
            other
        } else {
            self
        }
    }

    #[inline]
    pub fn times(self, other: Weight) -> Weight {
        Weight(self.0 + other.0)
    }

    pub fn approx_eq(self, other: Weight, tol: f64) -> bool {
        if self.is_zero() || other.is_zero() {
            return self.is_zero() && other.is_zero();
        }
        (self.0 - other.0).abs() <= tol
    }
}

impl Default for Weight {
    fn default() -> Self {
        Weight::ONE
    }
}

impl Add for Weight {
    type Output = Weight;
    fn add(self, rhs: Weight) -> Weight {
        self.times(rhs)
    }
}

impl AddAssign for Weight {
    fn add_assign(&mut self, rhs: Weight) {
        *self = self.times(rhs);
    }
}

impl Eq for Weight {}

impl PartialOrd for Weight {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Weight {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl fmt::Debug for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            write!(f, "Weight(∞)")
        } else {
            write!(f, "Weight({})", self.0)
        }
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            write!(f, "Infinity")
        } else {
            fmt::Display::fmt(&self.0, f)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn semiring_identities() {
        let w = Weight::new(1.5);
        assert_eq!(w.plus(Weight::ZERO), w);
        assert_eq!(w.times(Weight::ONE), w);
        assert!(w.times(Weight::ZERO).is_zero());
        assert_eq!(Weight::new(1.0).plus(Weight::new(2.0)), Weight::new(1.0));
    }

    #[test]
    fn rejects_nan() {
        assert!(Weight::try_new(f64::NAN).is_none());
        assert!(Weight::try_new(f64::NEG_INFINITY).is_none());
        assert!(Weight::try_new(f64::INFINITY).unwrap().is_zero());
    }

    #[test]
    fn from_prob() {
        assert!(Weight::from_prob(1.0).approx_eq(Weight::ONE, 0.0));
        assert!(Weight::from_prob(0.25).approx_eq(Weight::new(4f64.ln()), 1e-15));
        assert!(Weight::from_prob(0.0).is_zero());
    }
}
