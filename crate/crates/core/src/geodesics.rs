//! Backward geodesic tracking: the leftmost/rightmost argmax recursion down a
//! time partition, color assignment by empirical geodesic slope, and
//! coalescence detection.

use crate::busemann::BusemannField;
use crate::error::{KpzError, Result};
use crate::eternal::{refine_scan, scan_radius, EternalSolutionField, GridSpec};
use crate::geom::{SignedDirection, SpaceTimePoint};
use crate::landscape::LandscapeKernel;

/// Which maximizer the recursion follows at ties.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Leftmost,
    Rightmost,
}

/// A space-time height field usable as a geodesic source.
pub trait HeightField: Sync {
    fn eval(&self, x: f64, t: f64) -> Result<f64>;
    /// Spatial Lipschitz bound, uniform over the times being tracked.
    fn slope_bound(&self) -> f64;
}

impl HeightField for EternalSolutionField<'_> {
    fn eval(&self, x: f64, t: f64) -> Result<f64> {
        EternalSolutionField::eval(self, x, t)
    }

    fn slope_bound(&self) -> f64 {
        2.0 * self.phi.max_abs_eta()
    }
}

/// The single-color field W^xi(base; .), whose geodesics are the xi
/// characteristics.
pub struct BusemannRay<'a> {
    pub field: &'a dyn BusemannField,
    pub xi: SignedDirection,
    pub base: SpaceTimePoint,
}

impl HeightField for BusemannRay<'_> {
    fn eval(&self, x: f64, t: f64) -> Result<f64> {
        Ok(self
            .field
            .eval(self.xi, self.base, SpaceTimePoint::new(x, t))?
            .value)
    }

    fn slope_bound(&self) -> f64 {
        2.0 * self.xi.eta.abs()
    }
}

/// A backward geodesic through a decreasing time partition.
#[derive(Debug, Clone, PartialEq)]
pub struct BackwardGeodesic {
    pub root: SpaceTimePoint,
    pub side: Side,
    /// Partition times, strictly decreasing from root.t inclusive.
    pub times: Vec<f64>,
    /// g(times[i]); positions[0] = root.x.
    pub positions: Vec<f64>,
}

impl BackwardGeodesic {
    pub fn depth(&self) -> usize {
        self.times.len()
    }

    /// Empirical direction (g(s_deep) - root.x) / (root.t - s_deep).
    pub fn slope(&self) -> f64 {
        let last = self.times.len() - 1;
        (self.positions[last] - self.root.x) / (self.root.t - self.times[last])
    }
}

/// Follow the argmax recursion backward: at each partition time, maximize
/// y -> source(y, s) + L(y, s; previous point). Boundary argmaxes widen the
/// radius once before failing.
pub fn track_backward(
    source: &dyn HeightField,
    kernel: &dyn LandscapeKernel,
    root: SpaceTimePoint,
    partition: &[f64],
    side: Side,
    spec: &GridSpec,
) -> Result<BackwardGeodesic> {
    if partition.is_empty() {
        return Err(KpzError::Invalid("empty geodesic partition".into()));
    }
    let mut prev_t = root.t;
    for &s in partition {
        if !(s < prev_t) {
            return Err(KpzError::Invalid(format!(
                "partition not strictly decreasing below root time at s={s}"
            )));
        }
        prev_t = s;
    }

    let m = source.slope_bound();
    let prefer_right = side == Side::Rightmost;
    let mut times = vec![root.t];
    let mut positions = vec![root.x];
    let mut prev = root;
    for &s in partition {
        let target = prev;
        let objective = move |y: f64| -> Result<f64> {
            Ok(source.eval(y, s)? + kernel.eval(SpaceTimePoint::new(y, s), target)?)
        };
        let mut radius = scan_radius(m, prev.t - s, spec.spacing);
        let mut widened = false;
        let g = loop {
            let scan = refine_scan(&objective, prev.x - radius, prev.x + radius, spec,
                prefer_right)?;
            if !scan.on_lo && !scan.on_hi {
                break scan.argmax;
            }
            if widened {
                return Err(KpzError::RadiusInsufficient { x: prev.x, t: s });
            }
            widened = true;
            radius *= 2.0;
        };
        times.push(s);
        positions.push(g);
        prev = SpaceTimePoint::new(g, s);
    }

    Ok(BackwardGeodesic {
        root,
        side,
        times,
        positions,
    })
}

/// Max residual of the geodesic increment identity along the path:
/// |[source(later) - source(earlier)] - L(earlier; later)| over consecutive
/// partition points.
pub fn increment_residual(
    source: &dyn HeightField,
    kernel: &dyn LandscapeKernel,
    g: &BackwardGeodesic,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for i in 1..g.times.len() {
        let earlier = SpaceTimePoint::new(g.positions[i], g.times[i]);
        let later = SpaceTimePoint::new(g.positions[i - 1], g.times[i - 1]);
        let db = source.eval(later.x, later.t)? - source.eval(earlier.x, earlier.t)?;
        let l = kernel.eval(earlier, later)?;
        worst = worst.max((db - l).abs());
    }
    Ok(worst)
}

/// Geometric lookback partition below t: first_step, then doubling, `depth`
/// levels.
pub fn geometric_partition(t: f64, first_step: f64, depth: usize) -> Vec<f64> {
    (0..depth)
        .map(|k| t - first_step * (1u64 << k) as f64)
        .collect()
}

/// The color of a point: track the leftmost backward geodesic of b and match
/// its empirical slope (halved: directions enter positions as xi, heights as
/// 2 xi) against the reference color list. Matching tolerance is half the
/// minimal gap between reference directions; a failed or ambiguous match
/// deepens the partition once before reporting ambiguity.
pub fn assign_color(
    b: &EternalSolutionField<'_>,
    kernel: &dyn LandscapeKernel,
    point: SpaceTimePoint,
    reference: &[SignedDirection],
    spec: &GridSpec,
) -> Result<SignedDirection> {
    if reference.is_empty() {
        return Err(KpzError::Invalid("empty reference color list".into()));
    }
    let mut min_gap = f64::INFINITY;
    let mut sorted: Vec<f64> = reference.iter().map(|xi| xi.eta).collect();
    sorted.sort_by(f64::total_cmp);
    for w in sorted.windows(2) {
        min_gap = min_gap.min(w[1] - w[0]);
    }
    let tol = if min_gap.is_finite() {
        min_gap / 2.0
    } else {
        f64::INFINITY
    };

    for depth in [5usize, 8] {
        let partition = geometric_partition(point.t, 1.0, depth);
        let g = track_backward(b, kernel, point, &partition, Side::Leftmost, spec)?;
        let slope = g.slope();
        let matches: Vec<&SignedDirection> = reference
            .iter()
            .filter(|xi| (xi.eta - slope).abs() < tol)
            .collect();
        if matches.len() == 1 {
            return Ok(*matches[0]);
        }
        if depth == 8 {
            return Err(KpzError::AmbiguousColor {
                x: point.x,
                t: point.t,
                candidates: matches.iter().map(|xi| xi.eta).collect(),
            });
        }
    }
    unreachable!()
}

/// First (largest) partition time from which two geodesics agree all the way
/// down; requires identical partitions. Agreement is exact grid equality
/// sustained to the deepest level.
pub fn coalescence_detect(g1: &BackwardGeodesic, g2: &BackwardGeodesic) -> Result<Option<f64>> {
    if g1.times != g2.times {
        return Err(KpzError::Invalid(
            "coalescence requires identical partitions".into(),
        ));
    }
    let n = g1.times.len();
    if g1.positions[n - 1] != g2.positions[n - 1] {
        return Ok(None);
    }
    let mut first = n - 1;
    while first > 0 && g1.positions[first - 1] == g2.positions[first - 1] {
        first -= 1;
    }
    Ok(Some(g1.times[first]))
}
