//! The landscape abstraction: a four-point field L(y,s;x,t) with max-plus
//! composition, plus the deterministic parabolic backend that serves as the
//! closed-form oracle for everything downstream.

use crate::error::{KpzError, Result};
use crate::geom::SpaceTimePoint;

/// Rectangular space-time region a backend is willing to evaluate on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceTimeBox {
    pub x_min: f64,
    pub x_max: f64,
    pub t_min: f64,
    pub t_max: f64,
}

impl SpaceTimeBox {
    pub fn contains(&self, p: &SpaceTimePoint) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.t >= self.t_min && p.t <= self.t_max
    }
}

/// An evaluable four-point field obeying the reverse triangle inequality.
///
/// Kernels are immutable after construction; evaluation takes `&self` and
/// uses per-query scratch only, so concurrent read-only use is safe.
pub trait LandscapeKernel: Sync {
    /// Kernel value L(from; to). Requires `from.t < to.t` and both points
    /// inside the declared box (evaluation outside the box is an error,
    /// never an extrapolation).
    fn eval(&self, from: SpaceTimePoint, to: SpaceTimePoint) -> Result<f64>;

    /// Backend name and parameters, in manifest `key=value` form.
    fn descriptor(&self) -> String;

    /// Declared slack tolerance for composition checks: 0 for exact
    /// backends, a discretization scale for stochastic ones.
    fn tolerance(&self) -> f64;

    /// Declared evaluation domain; `None` means the whole plane.
    fn domain(&self) -> Option<SpaceTimeBox> {
        None
    }

    /// Search radius R such that any y with |y - center_x| > R satisfies
    /// eval(y,s; center_x,t) + height_budget < eval(center_x,s; center_x,t),
    /// so variational suprema may be restricted to [center_x-R, center_x+R].
    ///
    /// `cell` is one grid cell of the caller, added to the margin.
    fn truncation_radius(
        &self,
        center_x: f64,
        s: f64,
        t: f64,
        height_budget: f64,
        cell: f64,
    ) -> Result<f64>;
}

/// Slack of the reverse triangle inequality:
/// eval(from,to) - eval(from,mid) - eval(mid,to).
///
/// Nonnegative (up to backend tolerance); zero exactly when `mid` lies on a
/// geodesic from `from` to `to`.
pub fn composition_slack(
    kernel: &dyn LandscapeKernel,
    from: SpaceTimePoint,
    mid: SpaceTimePoint,
    to: SpaceTimePoint,
) -> Result<f64> {
    from.require_before(&mid)?;
    mid.require_before(&to)?;
    Ok(kernel.eval(from, to)? - kernel.eval(from, mid)? - kernel.eval(mid, to)?)
}

/// Multiplicative safety margin applied on top of the exact radius.
pub const RADIUS_MARGIN: f64 = 1.1;

/// The exact deterministic backend L0(y,s;x,t) = -(x-y)^2 / (t-s).
///
/// Its slack vanishes exactly when the midpoint lies on the straight segment
/// between the endpoints, so geodesics are straight lines.
#[derive(Debug, Clone, Copy, Default)]
pub struct ParabolicBackend;

impl LandscapeKernel for ParabolicBackend {
    fn eval(&self, from: SpaceTimePoint, to: SpaceTimePoint) -> Result<f64> {
        from.require_before(&to)?;
        let dx = to.x - from.x;
        Ok(-(dx * dx) / (to.t - from.t))
    }

    fn descriptor(&self) -> String {
        "backend=parabolic".to_string()
    }

    fn tolerance(&self) -> f64 {
        0.0
    }

    fn truncation_radius(
        &self,
        _center_x: f64,
        s: f64,
        t: f64,
        height_budget: f64,
        cell: f64,
    ) -> Result<f64> {
        if !(s < t) {
            return Err(KpzError::TimeOrder { from_t: s, to_t: t });
        }
        if !height_budget.is_finite() {
            return Err(KpzError::Invalid("height budget must be finite".into()));
        }
        // Solve (y - c)^2 / (t - s) > B: any |y - c| > sqrt(B (t-s)) loses.
        let exact = (height_budget.max(0.0) * (t - s)).sqrt();
        Ok(exact * RADIUS_MARGIN + cell)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, t: f64) -> SpaceTimePoint {
        SpaceTimePoint::new(x, t)
    }

    #[test]
    fn parabolic_eval_closed_form() {
        let k = ParabolicBackend;
        assert_eq!(k.eval(p(0.0, 0.0), p(0.0, 1.0)).unwrap(), 0.0);
        assert_eq!(k.eval(p(0.0, 0.0), p(2.0, 1.0)).unwrap(), -4.0);
        assert_eq!(k.eval(p(1.0, 0.0), p(3.0, 2.0)).unwrap(), -2.0);
    }

    #[test]
    fn eval_rejects_bad_time_order() {
        let k = ParabolicBackend;
        assert!(matches!(
            k.eval(p(0.0, 1.0), p(0.0, 0.0)),
            Err(KpzError::TimeOrder { .. })
        ));
        assert!(k.eval(p(0.0, 1.0), p(0.0, 1.0)).is_err());
    }

    #[test]
    fn slack_on_geodesic_is_zero() {
        let k = ParabolicBackend;
        let s = composition_slack(&k, p(0.0, 0.0), p(1.0, 1.0), p(2.0, 2.0)).unwrap();
        assert_eq!(s, 0.0);
    }

    #[test]
    fn slack_off_geodesic_positive() {
        let k = ParabolicBackend;
        let s = composition_slack(&k, p(0.0, 0.0), p(0.0, 1.0), p(2.0, 2.0)).unwrap();
        assert_eq!(s, 2.0);
    }

    #[test]
    fn translation_invariance() {
        let k = ParabolicBackend;
        let a = k.eval(p(0.3, -1.0), p(1.7, 0.5)).unwrap();
        let b = k.eval(p(0.3 + 5.0, -1.0 + 2.0), p(1.7 + 5.0, 0.5 + 2.0)).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn truncation_radius_parabolic() {
        let k = ParabolicBackend;
        let cell = 0.01;
        let r = k.truncation_radius(0.0, 0.0, 1.0, 4.0, cell).unwrap();
        // sqrt(4 * 1) * 1.1 + cell
        assert!((r - (2.0 * RADIUS_MARGIN + cell)).abs() < 1e-12);
        // budget 0 -> margin only
        let r0 = k.truncation_radius(0.0, 0.0, 1.0, 0.0, cell).unwrap();
        assert_eq!(r0, cell);
        // certified: anything beyond R loses against the vertex
        let b = 4.0;
        let y = r + 1e-9;
        let lhs = k.eval(p(y, 0.0), p(0.0, 1.0)).unwrap() + b;
        let rhs = k.eval(p(0.0, 0.0), p(0.0, 1.0)).unwrap();
        assert!(lhs < rhs);
    }
}
