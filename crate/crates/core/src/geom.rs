use std::cmp::Ordering;
use std::fmt;

use crate::error::{KpzError, Result};

/// A point (x, t) of the space-time plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceTimePoint {
    pub x: f64,
    pub t: f64,
}

impl SpaceTimePoint {
    pub fn new(x: f64, t: f64) -> Self {
        debug_assert!(x.is_finite() && t.is_finite());
        Self { x, t }
    }

    /// Both points in strict time order, as required by kernel evaluation.
    pub fn require_before(&self, later: &SpaceTimePoint) -> Result<()> {
        if self.t < later.t {
            Ok(())
        } else {
            Err(KpzError::TimeOrder {
                from_t: self.t,
                to_t: later.t,
            })
        }
    }
}

impl fmt::Display for SpaceTimePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.t)
    }
}

/// Sign tag distinguishing the two one-sided limits of a direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sign {
    Minus,
    Plus,
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sign::Minus => write!(f, "-"),
            Sign::Plus => write!(f, "+"),
        }
    }
}

/// A color: a real direction with a sign tag, totally ordered so that
/// (eta, -) < (eta, +) and otherwise by eta.
///
/// Colors act as dictionary keys, so eta is compared bit-exactly
/// (`f64::total_cmp`), never with a tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedDirection {
    pub eta: f64,
    pub sign: Sign,
}

impl SignedDirection {
    pub fn new(eta: f64, sign: Sign) -> Self {
        debug_assert!(eta.is_finite());
        Self { eta, sign }
    }

    /// The (eta, -) color, the default when the sign tag is irrelevant.
    pub fn minus(eta: f64) -> Self {
        Self::new(eta, Sign::Minus)
    }

    pub fn plus(eta: f64) -> Self {
        Self::new(eta, Sign::Plus)
    }
}

impl Eq for SignedDirection {}

impl PartialOrd for SignedDirection {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SignedDirection {
    fn cmp(&self, other: &Self) -> Ordering {
        self.eta
            .total_cmp(&other.eta)
            .then_with(|| self.sign.cmp(&other.sign))
    }
}

impl fmt::Display for SignedDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.eta, self.sign)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn color_order_is_total() {
        let a = SignedDirection::minus(0.0);
        let b = SignedDirection::plus(0.0);
        let c = SignedDirection::minus(0.5);
        assert!(a < b);
        assert!(b < c);
        assert!(a < c);
        assert_eq!(a, SignedDirection::minus(0.0));
    }

    #[test]
    fn negative_zero_distinct_key() {
        // total_cmp distinguishes -0.0 < 0.0; set semantics stay exact.
        let neg = SignedDirection::minus(-0.0);
        let pos = SignedDirection::minus(0.0);
        assert!(neg < pos);
    }

    #[test]
    fn time_order_check() {
        let p = SpaceTimePoint::new(0.0, 0.0);
        let q = SpaceTimePoint::new(1.0, 1.0);
        assert!(p.require_before(&q).is_ok());
        assert!(q.require_before(&p).is_err());
        assert!(p.require_before(&p).is_err());
    }
}
