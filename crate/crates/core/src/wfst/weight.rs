//! Tropical semiring weights: `(min, +, +inf, 0)` over negative log probabilities.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul};

/// A cost in the tropical semiring.
///
/// `plus` is `min`, `times` is `+`, the additive identity is `+inf` and the
/// multiplicative identity is `0`. NaN is rejected at construction.
#[derive(Clone, Copy, PartialEq, Default)]
pub struct Weight(f64);

impl Weight {
    pub const ZERO: Weight = Weight(f64::INFINITY);
    pub const ONE: Weight = Weight(0.0);

    #[inline]
    pub fn new(value: f64) -> Self {
        assert!(!value.is_nan(), "tropical weight must not be NaN");
        assert!(value != f64::NEG_INFINITY, "tropical weight must not be -inf");
        Weight(value)
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
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
        if self.is_zero() || other.is_zero() {
            Weight::ZERO
        } else {
            Weight(self.0 + other.0)
        }
    }

    /// Left residual in the tropical semiring: the `c` with `self ⊗ c = other`.
    #[inline]
    pub fn divide(other: Weight, by: Weight) -> Weight {
        if other.is_zero() {
            Weight::ZERO
        } else {
            Weight(other.0 - by.0)
        }
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == f64::INFINITY
    }

    #[inline]
    pub fn is_one(self) -> bool {
        self.0 == 0.0
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    pub fn approx_eq(self, other: Weight, delta: f64) -> bool {
        if self.is_zero() || other.is_zero() {
            return self.is_zero() == other.is_zero();
        }
        (self.0 - other.0).abs() <= delta
    }

    /// Quantized key used when comparing weights for state merging.
    pub(crate) fn quantize(self, delta: f64) -> i64 {
        if self.is_zero() {
            i64::MAX
        } else {
            (self.0 / delta).round() as i64
        }
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

impl From<f64> for Weight {
    fn from(v: f64) -> Self {
        Weight::new(v)
    }
}

impl Add for Weight {
    type Output = Weight;
    fn add(self, rhs: Weight) -> Weight {
        self.plus(rhs)
    }
}

impl Mul for Weight {
    type Output = Weight;
    fn mul(self, rhs: Weight) -> Weight {
        self.times(rhs)
    }
}

impl fmt::Debug for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            write!(f, "Weight(inf)")
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
            let s = format!("{:.6}", self.0);
            if s == "-0.000000" {
                f.write_str("0.000000")
            } else {
                f.write_str(&s)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identities() {
        let x = Weight::new(2.5);
        assert_eq!(x * Weight::ONE, x);
        assert_eq!(x + Weight::ZERO, x);
        assert_eq!(x * Weight::ZERO, Weight::ZERO);
        assert_eq!(Weight::new(1.0) + Weight::new(3.0), Weight::new(1.0));
        assert_eq!(Weight::new(1.0) * Weight::new(3.0), Weight::new(4.0));
    }

    #[test]
    #[should_panic]
    fn nan_rejected() {
        Weight::new(f64::NAN);
    }

    #[test]
    fn display_six_digits() {
        assert_eq!(Weight::new(1.0 / 3.0).to_string(), "0.333333");
        assert_eq!(Weight::new(-1e-9).to_string(), "0.000000");
        assert_eq!(Weight::new(-16.0).to_string(), "-16.000000");
    }

    proptest! {
        #[test]
        fn semiring_laws(a in -1e6f64..1e6, b in -1e6f64..1e6, c in -1e6f64..1e6) {
            let (a, b, c) = (Weight::new(a), Weight::new(b), Weight::new(c));
            prop_assert_eq!(a + b, b + a);
            prop_assert_eq!((a + b) + c, a + (b + c));
            prop_assert!(((a * b) * c).approx_eq(a * (b * c), 1e-6));
            prop_assert_eq!(a * b, b * a);
            prop_assert!((a * (b + c)).approx_eq((a * b) + (a * c), 1e-9));
            prop_assert_eq!(a * Weight::ONE, a);
            prop_assert_eq!(a + Weight::ZERO, a);
            prop_assert_eq!(a + a, a);
        }
    }
}
