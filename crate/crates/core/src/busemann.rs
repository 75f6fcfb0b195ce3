//! Busemann field abstraction W^xi(p;q): the additive two-point field of the
//! eternal solution with asymptotic spatial slope 2*xi, with the closed-form
//! parabolic implementation and executable property checks.

use crate::error::Result;
use crate::geom::{SignedDirection, SpaceTimePoint};

/// One evaluation of a Busemann field. Exact backends are always stabilized;
/// estimated backends flag whether the far-point difference has settled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BusemannSample {
    pub value: f64,
    pub stabilized: bool,
}

impl BusemannSample {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            stabilized: true,
        }
    }
}

/// Two-point field indexed by colors. Defined for all p, q with no time-order
/// restriction. Implementations are immutable and safe to query concurrently.
pub trait BusemannField: Sync {
    fn eval(
        &self,
        xi: SignedDirection,
        p: SpaceTimePoint,
        q: SpaceTimePoint,
    ) -> Result<BusemannSample>;

    /// Declared tolerance for scaled-value comparisons (0 for exact backends).
    fn tolerance(&self) -> f64;

    /// Coefficients (c0, c1, c2) such that W^xi(p;q) <= c0 + c1*|eta| + c2*eta^2
    /// for every color with |eta| = eta_abs, either sign. Used to certify
    /// color truncation budgets; must be exact or conservative.
    fn envelope_coefficients(&self, p: SpaceTimePoint, q: SpaceTimePoint) -> (f64, f64, f64);

    /// Upper bound on W^xi(p;q) over both signs of xi with |eta| = eta_abs.
    fn upper_envelope(&self, p: SpaceTimePoint, q: SpaceTimePoint, eta_abs: f64) -> f64 {
        let (c0, c1, c2) = self.envelope_coefficients(p, q);
        c0 + c1 * eta_abs + c2 * eta_abs * eta_abs
    }

    fn descriptor(&self) -> String;
}

/// Closed-form field of the parabolic backend:
/// W^xi(p;q) = 2 eta (q.x - p.x) + eta^2 (q.t - p.t).
///
/// All five structural properties (continuity, additivity, monotonicity,
/// eternal solution, asymptotic slope) hold exactly; the test suite asserts
/// each.
#[derive(Debug, Clone, Copy, Default)]
pub struct ParabolicBusemann;

impl ParabolicBusemann {
    pub fn value(xi: SignedDirection, p: SpaceTimePoint, q: SpaceTimePoint) -> f64 {
        let eta = xi.eta;
        2.0 * eta * (q.x - p.x) + eta * eta * (q.t - p.t)
    }
}

impl BusemannField for ParabolicBusemann {
    fn eval(
        &self,
        xi: SignedDirection,
        p: SpaceTimePoint,
        q: SpaceTimePoint,
    ) -> Result<BusemannSample> {
        Ok(BusemannSample::exact(Self::value(xi, p, q)))
    }

    fn tolerance(&self) -> f64 {
        0.0
    }

    fn envelope_coefficients(&self, p: SpaceTimePoint, q: SpaceTimePoint) -> (f64, f64, f64) {
        (0.0, 2.0 * (q.x - p.x).abs(), q.t - p.t)
    }

    fn descriptor(&self) -> String {
        "busemann=parabolic".to_string()
    }
}

/// Residual of the additivity identity |W(p;q) + W(q;r) - W(p;r)|.
pub fn check_additivity(
    field: &dyn BusemannField,
    xi: SignedDirection,
    p: SpaceTimePoint,
    q: SpaceTimePoint,
    r: SpaceTimePoint,
) -> Result<f64> {
    let a = field.eval(xi, p, q)?.value;
    let b = field.eval(xi, q, r)?.value;
    let c = field.eval(xi, p, r)?.value;
    Ok((a + b - c).abs())
}

/// Monotonicity along a horizontal line: for xi1 < xi2 and x < y,
/// W^{xi1}(x,t;y,t) <= W^{xi2}(x,t;y,t) + tolerance.
pub fn check_monotonicity(
    field: &dyn BusemannField,
    xi1: SignedDirection,
    xi2: SignedDirection,
    x: f64,
    y: f64,
    t: f64,
) -> Result<bool> {
    assert!(xi1 < xi2, "colors must be strictly ordered");
    assert!(x < y, "spatial points must be ordered");
    let p = SpaceTimePoint::new(x, t);
    let q = SpaceTimePoint::new(y, t);
    let w1 = field.eval(xi1, p, q)?.value;
    let w2 = field.eval(xi2, p, q)?.value;
    Ok(w1 <= w2 + field.tolerance())
}

/// Slope estimate W^xi(0,t;x_max,t) / x_max; contracts to 2*eta as x_max grows
/// (exact at any x_max on the parabolic backend).
pub fn check_slope(
    field: &dyn BusemannField,
    xi: SignedDirection,
    t: f64,
    x_max: f64,
) -> Result<f64> {
    assert!(x_max != 0.0);
    let p = SpaceTimePoint::new(0.0, t);
    let q = SpaceTimePoint::new(x_max, t);
    Ok(field.eval(xi, p, q)?.value / x_max)
}
