//! Competition interfaces: the difference function d of a split profile, the
//! interface bracket tau+/-, two-color eternal solutions with their exact
//! interface line, and the crossing law for ordered color pairs.

use crate::busemann::BusemannField;
use crate::error::{KpzError, Result};
use crate::eternal::{refine_scan, scan_radius, GridSpec, SliceField};
use crate::geom::{SignedDirection, SpaceTimePoint};
use crate::landscape::LandscapeKernel;

const BISECT_ITERS: usize = 80;

/// Where an interface trajectory came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InterfaceProvenance {
    TwoColor,
    Competition { x0: f64, s: f64 },
}

/// A sampled interface between an ordered color pair.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceTrajectory {
    pub xi1: SignedDirection,
    pub xi2: SignedDirection,
    pub constants: (f64, f64),
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
    pub provenance: InterfaceProvenance,
}

impl InterfaceTrajectory {
    /// Interface position at a sampled time.
    pub fn at(&self, t: f64) -> Option<f64> {
        self.times
            .iter()
            .position(|&u| u == t)
            .map(|i| self.positions[i])
    }
}

/// One-sided supremum of initial(z) + L(z, s; x, t) over z >= x0 (right) or
/// z <= x0 (left). The constrained end is a legitimate argmax; the far end
/// widens once before failing.
fn half_line_sup(
    initial: &dyn SliceField,
    kernel: &dyn LandscapeKernel,
    x0: f64,
    s: f64,
    x: f64,
    t: f64,
    right: bool,
    spec: &GridSpec,
) -> Result<f64> {
    let target = SpaceTimePoint::new(x, t);
    let objective = move |z: f64| -> Result<f64> {
        Ok(initial.eval(z)? + kernel.eval(SpaceTimePoint::new(z, s), target)?)
    };
    let mut radius = scan_radius(initial.slope_bound(), t - s, spec.spacing);
    let mut widened = false;
    loop {
        let (lo, hi) = if right {
            (x0, x.max(x0) + radius)
        } else {
            (x.min(x0) - radius, x0)
        };
        let scan = refine_scan(&objective, lo, hi, spec, false)?;
        let far = if right { scan.on_hi } else { scan.on_lo };
        if !far {
            return Ok(scan.value);
        }
        if widened {
            return Err(KpzError::RadiusInsufficient { x, t });
        }
        widened = true;
        radius *= 2.0;
    }
}

/// The competition difference d(x, t): right-of-split supremum minus
/// left-of-split supremum, each grid-certified.
pub fn d_eval(
    initial: &dyn SliceField,
    kernel: &dyn LandscapeKernel,
    x0: f64,
    s: f64,
    x: f64,
    t: f64,
    spec: &GridSpec,
) -> Result<f64> {
    SpaceTimePoint::new(x, s).require_before(&SpaceTimePoint::new(x, t))?;
    let right = half_line_sup(initial, kernel, x0, s, x, t, true, spec)?;
    let left = half_line_sup(initial, kernel, x0, s, x, t, false, spec)?;
    Ok(right - left)
}

/// The interface bracket at time t of the competition started at (x0, s):
/// tau- = inf{x : d >= 0}, tau+ = sup{x : d <= 0}, found by monotone
/// bisection over a sweep centered at x0.
pub fn tau_pm(
    initial: &dyn SliceField,
    kernel: &dyn LandscapeKernel,
    x0: f64,
    s: f64,
    t: f64,
    sweep_radius: f64,
    spec: &GridSpec,
) -> Result<(f64, f64)> {
    if t < s {
        return Err(KpzError::TimeOrder { from_t: s, to_t: t });
    }
    if t == s {
        return Ok((x0, x0));
    }
    let d = |x: f64| d_eval(initial, kernel, x0, s, x, t, spec);
    let (lo, hi) = (x0 - sweep_radius, x0 + sweep_radius);
    if d(lo)? >= 0.0 || d(hi)? <= 0.0 {
        return Err(KpzError::SweepTooNarrow {
            what: "competition difference d".into(),
            lo,
            hi,
        });
    }
    // tau-: first x with d >= 0.
    let (mut a, mut b) = (lo, hi);
    for _ in 0..BISECT_ITERS {
        let mid = 0.5 * (a + b);
        if d(mid)? >= 0.0 {
            b = mid;
        } else {
            a = mid;
        }
    }
    let tau_minus = b;
    // tau+: last x with d <= 0.
    let (mut a, mut b) = (lo, hi);
    for _ in 0..BISECT_ITERS {
        let mid = 0.5 * (a + b);
        if d(mid)? > 0.0 {
            b = mid;
        } else {
            a = mid;
        }
    }
    let tau_plus = a;
    Ok((tau_minus.min(tau_plus), tau_minus.max(tau_plus)))
}

/// The two-color interface at time t: the largest x at which the xi1 term
/// still matches the xi2 term, located by bracketing the nondecreasing
/// difference. On the parabolic backend this equals
/// x = -(eta1 + eta2) t / 2 + (c1 - c2) / (2 (eta2 - eta1)).
pub fn tau_two_colors(
    field: &dyn BusemannField,
    xi1: SignedDirection,
    xi2: SignedDirection,
    c1: f64,
    c2: f64,
    t: f64,
    sweep_radius: f64,
) -> Result<f64> {
    if xi1 >= xi2 {
        return Err(KpzError::Invalid("colors must satisfy xi1 < xi2".into()));
    }
    let origin = SpaceTimePoint::new(0.0, 0.0);
    // diff(x) = (xi2 term) - (xi1 term), nondecreasing in x.
    let diff = |x: f64| -> Result<f64> {
        let q = SpaceTimePoint::new(x, t);
        let w1 = field.eval(xi1, origin, q)?.value;
        let w2 = field.eval(xi2, origin, q)?.value;
        Ok((w2 + c2) - (w1 + c1))
    };
    let (lo, hi) = (-sweep_radius, sweep_radius);
    if diff(lo)? > 0.0 || diff(hi)? < 0.0 {
        return Err(KpzError::SweepTooNarrow {
            what: "two-color difference".into(),
            lo,
            hi,
        });
    }
    // largest x with diff <= 0
    let (mut a, mut b) = (lo, hi);
    for _ in 0..BISECT_ITERS {
        let mid = 0.5 * (a + b);
        if diff(mid)? > 0.0 {
            b = mid;
        } else {
            a = mid;
        }
    }
    Ok(a)
}

/// A two-color eternal solution: the max of two Busemann-plus-constant terms.
pub struct TwoColorSolution<'a> {
    pub field: &'a dyn BusemannField,
    pub xi1: SignedDirection,
    pub xi2: SignedDirection,
    pub c1: f64,
    pub c2: f64,
}

impl TwoColorSolution<'_> {
    pub fn eval(&self, x: f64, t: f64) -> Result<f64> {
        let q = SpaceTimePoint::new(x, t);
        let origin = SpaceTimePoint::new(0.0, 0.0);
        let v1 = self.field.eval(self.xi1, origin, q)?.value + self.c1;
        let v2 = self.field.eval(self.xi2, origin, q)?.value + self.c2;
        Ok(v1.max(v2))
    }

    /// Which term attains the max: -1 for xi1, +1 for xi2, 0 on a tie.
    pub fn argmax_side(&self, x: f64, t: f64) -> Result<i8> {
        let q = SpaceTimePoint::new(x, t);
        let origin = SpaceTimePoint::new(0.0, 0.0);
        let v1 = self.field.eval(self.xi1, origin, q)?.value + self.c1;
        let v2 = self.field.eval(self.xi2, origin, q)?.value + self.c2;
        Ok(if v1 > v2 {
            -1
        } else if v2 > v1 {
            1
        } else {
            0
        })
    }

    /// Sample the interface over the given times.
    pub fn interface(&self, times: &[f64], sweep_radius: f64) -> Result<InterfaceTrajectory> {
        let mut positions = Vec::with_capacity(times.len());
        for &t in times {
            positions.push(tau_two_colors(
                self.field,
                self.xi1,
                self.xi2,
                self.c1,
                self.c2,
                t,
                sweep_radius,
            )?);
        }
        Ok(InterfaceTrajectory {
            xi1: self.xi1,
            xi2: self.xi2,
            constants: (self.c1, self.c2),
            times: times.to_vec(),
            positions,
            provenance: InterfaceProvenance::TwoColor,
        })
    }

    /// The two-piece representation: off the interface, the attaining side
    /// must match sign(x - tau(t)). Returns the number of grid violations.
    pub fn representation_check(
        &self,
        times: &[f64],
        xs: &[f64],
        sweep_radius: f64,
        tol: f64,
    ) -> Result<usize> {
        let mut violations = 0;
        for &t in times {
            let tau = tau_two_colors(
                self.field, self.xi1, self.xi2, self.c1, self.c2, t, sweep_radius,
            )?;
            for &x in xs {
                if (x - tau).abs() <= tol {
                    continue;
                }
                let side = self.argmax_side(x, t)?;
                let expect = if x > tau { 1 } else { -1 };
                if side != expect {
                    violations += 1;
                }
            }
        }
        Ok(violations)
    }
}

/// Outcome of the crossing law check for tau12 vs tau13 meeting at t_meet.
#[derive(Debug, Clone, Copy)]
pub struct CrossingReport {
    pub ordered_before: bool,
    pub ordered_after: bool,
    /// Largest sampled time below t_meet up to which the order is strict.
    pub strict_below: Option<f64>,
}

impl CrossingReport {
    pub fn pass(&self) -> bool {
        self.ordered_before && self.ordered_after
    }
}

/// Crossing law for xi1 < xi2 < xi3: before the meeting time the 1|2
/// interface runs weakly left of the 1|3 interface, after it weakly right,
/// and strictly left sufficiently far in the past.
pub fn crossing_check(
    tau12: &InterfaceTrajectory,
    tau13: &InterfaceTrajectory,
    t_meet: f64,
    tol: f64,
) -> Result<CrossingReport> {
    if tau12.times != tau13.times {
        return Err(KpzError::Invalid(
            "crossing check requires shared sample times".into(),
        ));
    }
    let mut ordered_before = true;
    let mut ordered_after = true;
    let mut strict_below: Option<f64> = None;
    for (i, &t) in tau12.times.iter().enumerate() {
        let (a, b) = (tau12.positions[i], tau13.positions[i]);
        if t <= t_meet && a > b + tol {
            ordered_before = false;
        }
        if t >= t_meet && a < b - tol {
            ordered_after = false;
        }
        if t < t_meet && a < b - tol {
            strict_below = Some(strict_below.map_or(t, |s: f64| s.max(t)));
        }
    }
    Ok(CrossingReport {
        ordered_before,
        ordered_after,
        strict_below,
    })
}
