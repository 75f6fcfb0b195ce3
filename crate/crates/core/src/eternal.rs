//! Eternal solutions built from weight functions: the budgeted variational
//! supremum over colors, the Hopf-Lax evolution engine, semigroup checks,
//! constant extraction from a colored slice, and growth diagnostics.

use rayon::prelude::*;

use crate::busemann::BusemannField;
use crate::error::{KpzError, Result};
use crate::geom::{SignedDirection, SpaceTimePoint};
use crate::landscape::{LandscapeKernel, RADIUS_MARGIN};
use crate::weight::{finiteness_gate, WeightFunction};

/// Default color grid spacing when a parametric tail is discretized.
pub const DEFAULT_TAIL_SPACING: f64 = 0.05;

/// Spatial solver parameters for the variational evolution.
#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    /// Coarse scan spacing over the certified radius.
    pub spacing: f64,
    /// Nested refinement rounds around the coarse argmax; each round rescans
    /// 64 subintervals of the previous bracket, shrinking the step 32-fold.
    pub refine_rounds: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            spacing: 0.05,
            refine_rounds: 3,
        }
    }
}

/// Result of one variational supremum over colors.
#[derive(Debug, Clone, Copy)]
pub struct WStarResult {
    pub value: f64,
    pub argmax: Option<SignedDirection>,
    /// All contributing Busemann samples were stabilized.
    pub stabilized: bool,
    /// Color budget the supremum was restricted to.
    pub budget: f64,
}

/// Certified color budget T: colors with |eta| > T cannot attain the
/// supremum at (x, t). Finite supports return their own extent; power tails
/// return a T at which the quadratic envelope is dominated and provably
/// decreasing beyond.
pub fn color_truncation_bound(
    field: &dyn BusemannField,
    x: f64,
    t: f64,
    phi: &WeightFunction,
) -> Result<f64> {
    let Some(tail) = &phi.tail else {
        return Ok(phi.max_abs_eta());
    };
    let alpha = tail.alpha.ok_or(KpzError::UndecidableTail)?;
    let amp = tail.amplitude;
    if !(alpha > 2.0 && amp > 0.0) {
        return Err(KpzError::CertificateFailure(format!(
            "tail alpha={alpha}, A={amp} admits no finite color budget"
        )));
    }
    let q = SpaceTimePoint::new(x, t);
    let (c0, c1, c2) = field.envelope_coefficients(phi.anchor, q);
    let c2p = c2.max(0.0);
    // Attained lower bound for the sup from a small initial window.
    let t0 = phi.max_abs_eta().max(1.0);
    let mut best = f64::NEG_INFINITY;
    for (xi, v) in phi.materialize(t0, DEFAULT_TAIL_SPACING)? {
        best = best.max(field.eval(xi, phi.anchor, q)?.value + v);
    }
    let mut budget = t0;
    for _ in 0..64 {
        // Envelope-minus-tail decreasing on [T, inf):
        // f'(eta) <= c1 + 2 c2+ eta - A a T^(a-2) eta < 0 for all eta >= T.
        let decreasing = amp * alpha * budget.powf(alpha - 2.0) > 2.0 * c2p + c1 / budget;
        let f_at_t =
            c0 + c1 * budget + c2 * budget * budget - amp * budget.powf(alpha);
        if decreasing && f_at_t < best {
            return Ok(budget);
        }
        budget *= 2.0;
    }
    Err(KpzError::CertificateFailure(
        "color budget search did not converge".into(),
    ))
}

/// Budget-restricted variational supremum, no finiteness gate. Empty
/// candidate sets return the -inf sentinel.
pub fn w_star_unchecked(
    phi: &WeightFunction,
    field: &dyn BusemannField,
    x: f64,
    t: f64,
    budget: f64,
) -> Result<WStarResult> {
    let q = SpaceTimePoint::new(x, t);
    let mut out = WStarResult {
        value: f64::NEG_INFINITY,
        argmax: None,
        stabilized: true,
        budget,
    };
    let mut fold = |xi: SignedDirection, v: f64| -> Result<()> {
        let sample = field.eval(xi, phi.anchor, q)?;
        out.stabilized &= sample.stabilized;
        let candidate = sample.value + v;
        if candidate > out.value {
            out.value = candidate;
            out.argmax = Some(xi);
        }
        Ok(())
    };
    if phi.tail.is_none() {
        // finite support: no discretization pass needed
        for (xi, v) in phi.atoms() {
            if xi.eta.abs() <= budget {
                fold(*xi, *v)?;
            }
        }
    } else {
        for (xi, v) in phi.materialize(budget, DEFAULT_TAIL_SPACING)? {
            fold(xi, v)?;
        }
    }
    Ok(out)
}

/// The eternal solution value sup over colors of [W^xi(anchor; x,t) + phi(xi)],
/// gated for finiteness and restricted to a certified color budget.
pub fn w_star(
    phi: &WeightFunction,
    field: &dyn BusemannField,
    x: f64,
    t: f64,
    budget: Option<f64>,
) -> Result<WStarResult> {
    let gate = finiteness_gate(phi, t, field)?;
    if !gate.accepted {
        return Err(KpzError::GateRejected(gate.diagnostic));
    }
    let budget = match budget {
        Some(b) => b,
        None => color_truncation_bound(field, x, t, phi)?,
    };
    w_star_unchecked(phi, field, x, t, budget)
}

/// An eternal solution paired with its Busemann field.
pub struct EternalSolutionField<'a> {
    pub phi: WeightFunction,
    pub field: &'a dyn BusemannField,
}

impl<'a> EternalSolutionField<'a> {
    /// Gate phi up front; rejected weights never become fields.
    pub fn new(phi: WeightFunction, field: &'a dyn BusemannField) -> Result<Self> {
        let gate = finiteness_gate(&phi, phi.anchor.t, field)?;
        if !gate.accepted {
            return Err(KpzError::GateRejected(gate.diagnostic));
        }
        Ok(Self { phi, field })
    }

    pub fn sample(&self, x: f64, t: f64) -> Result<WStarResult> {
        // Already gated at construction; go straight to the supremum.
        let budget = color_truncation_bound(self.field, x, t, &self.phi)?;
        w_star_unchecked(&self.phi, self.field, x, t, budget)
    }

    pub fn eval(&self, x: f64, t: f64) -> Result<f64> {
        Ok(self.sample(x, t)?.value)
    }

    /// Increment db(p; q) = b(q) - b(p), the representative-free comparison.
    pub fn increment(&self, p: SpaceTimePoint, q: SpaceTimePoint) -> Result<f64> {
        Ok(self.eval(q.x, q.t)? - self.eval(p.x, p.t)?)
    }

    /// Fixed-time restriction usable as evolution input.
    pub fn slice(&self, t: f64) -> Result<EternalSlice<'_, 'a>> {
        let budget = color_truncation_bound(self.field, self.phi.anchor.x, t, &self.phi)?;
        Ok(EternalSlice {
            field: self,
            t,
            slope: 2.0 * budget,
        })
    }
}

/// A spatial function at a fixed time, with a declared Lipschitz bound used
/// to certify variational truncation radii.
pub trait SliceField: Sync {
    fn eval(&self, y: f64) -> Result<f64>;
    fn slope_bound(&self) -> f64;
}

/// Slice of an eternal solution at time t.
pub struct EternalSlice<'b, 'a> {
    field: &'b EternalSolutionField<'a>,
    t: f64,
    slope: f64,
}

impl SliceField for EternalSlice<'_, '_> {
    fn eval(&self, y: f64) -> Result<f64> {
        self.field.eval(y, self.t)
    }

    fn slope_bound(&self) -> f64 {
        self.slope
    }
}

/// Closure-backed slice.
pub struct FnSlice<F> {
    f: F,
    slope: f64,
}

impl<F: Fn(f64) -> Result<f64> + Sync> FnSlice<F> {
    pub fn new(f: F, slope_bound: f64) -> Self {
        Self {
            f,
            slope: slope_bound,
        }
    }
}

impl<F: Fn(f64) -> Result<f64> + Sync> SliceField for FnSlice<F> {
    fn eval(&self, y: f64) -> Result<f64> {
        (self.f)(y)
    }

    fn slope_bound(&self) -> f64 {
        self.slope
    }
}

/// Result of one variational evolution step.
#[derive(Debug, Clone, Copy)]
pub struct EvolveResult {
    pub value: f64,
    pub argmax: f64,
    /// The coarse argmax was strictly inside the scanned radius.
    pub interior: bool,
}

/// Outcome of one interval scan.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ScanResult {
    pub value: f64,
    pub argmax: f64,
    pub on_lo: bool,
    pub on_hi: bool,
}

/// Near-equal refined peaks are treated as exact ties and resolved by side.
const TIE_EPS_REL: f64 = 1e-9;

/// Maximize an objective on [lo, hi]: coarse parallel scan at the spec
/// spacing, then nested 64-cell rescans around every near-maximal local peak.
/// Peaks whose refined values tie within tolerance are resolved to the
/// leftmost (or rightmost, if `prefer_right`) — the grid realization of the
/// L/R maximizer dichotomy.
pub(crate) fn refine_scan(
    objective: &(dyn Fn(f64) -> Result<f64> + Sync),
    lo: f64,
    hi: f64,
    spec: &GridSpec,
    prefer_right: bool,
) -> Result<ScanResult> {
    debug_assert!(hi > lo);
    let n = ((hi - lo) / spec.spacing).ceil().max(2.0) as usize;
    let step = (hi - lo) / n as f64;
    let ys: Vec<f64> = (0..=n).map(|i| lo + i as f64 * step).collect();
    let values: Vec<f64> = ys
        .par_iter()
        .map(|&y| objective(y))
        .collect::<Result<Vec<_>>>()?;

    let vmax = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    // A peak equal to the true max can sit below vmax by one grid step of
    // slope; bound the slope empirically from the sampled values.
    let max_diff = values
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .fold(0.0, f64::max);
    let delta = 2.0 * max_diff + TIE_EPS_REL * (1.0 + vmax.abs());

    let mut candidates: Vec<usize> = (0..=n)
        .filter(|&i| {
            values[i] >= vmax - delta
                && (i == 0 || values[i] >= values[i - 1])
                && (i == n || values[i] >= values[i + 1])
        })
        .collect();
    if candidates.len() > 64 {
        // keep the side-preferred extremes plus the best values
        let mut by_value = candidates.clone();
        by_value.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
        by_value.truncate(62);
        by_value.push(*candidates.first().unwrap());
        by_value.push(*candidates.last().unwrap());
        by_value.sort_unstable();
        by_value.dedup();
        candidates = by_value;
    }

    let refined: Vec<(f64, f64, usize)> = candidates
        .par_iter()
        .map(|&i| {
            let mut best_y = ys[i];
            let mut best_v = values[i];
            let mut width = step;
            for _ in 0..spec.refine_rounds {
                let a = (best_y - width).max(lo);
                let b = (best_y + width).min(hi);
                let fine = (b - a) / 64.0;
                for k in 0..=64 {
                    let y = a + k as f64 * fine;
                    let v = objective(y)?;
                    if v > best_v {
                        best_v = v;
                        best_y = y;
                    }
                }
                width = fine;
            }
            Ok((best_y, best_v, i))
        })
        .collect::<Result<Vec<_>>>()?;

    let best_v = refined.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    let tie = TIE_EPS_REL * (1.0 + best_v.abs());
    let pick = refined
        .iter()
        .filter(|r| r.1 >= best_v - tie)
        .reduce(|a, b| {
            let better = if prefer_right { b.0 > a.0 } else { b.0 < a.0 };
            if better {
                b
            } else {
                a
            }
        })
        .expect("non-empty scan");

    Ok(ScanResult {
        value: pick.1,
        argmax: pick.0,
        on_lo: pick.2 == 0,
        on_hi: pick.2 == n,
    })
}

/// Certified scan radius for a slope-bounded initial condition: beyond
/// |y - x| > m (t - s) the kernel deficit beats any slope-m gain.
pub(crate) fn scan_radius(m: f64, dt: f64, spacing: f64) -> f64 {
    (m * dt * RADIUS_MARGIN).max(4.0 * spacing) + spacing
}

/// Hopf-Lax evolution: max over y of [initial(y) + L(y,s; x,t)], scanned on a
/// certified radius and refined by nested rescans. A boundary argmax widens
/// the radius once (x2) before failing.
pub fn evolve(
    initial: &dyn SliceField,
    kernel: &dyn LandscapeKernel,
    s: f64,
    t: f64,
    x: f64,
    spec: &GridSpec,
) -> Result<EvolveResult> {
    SpaceTimePoint::new(x, s).require_before(&SpaceTimePoint::new(x, t))?;
    let target = SpaceTimePoint::new(x, t);
    let objective = move |y: f64| -> Result<f64> {
        Ok(initial.eval(y)? + kernel.eval(SpaceTimePoint::new(y, s), target)?)
    };

    let mut radius = scan_radius(initial.slope_bound(), t - s, spec.spacing);
    let mut widened = false;
    loop {
        let scan = refine_scan(&objective, x - radius, x + radius, spec, false)?;
        if !scan.on_lo && !scan.on_hi {
            return Ok(EvolveResult {
                value: scan.value,
                argmax: scan.argmax,
                interior: true,
            });
        }
        if widened {
            return Err(KpzError::RadiusInsufficient { x, t });
        }
        widened = true;
        radius *= 2.0;
    }
}

/// Max deviation between the evolved Busemann slice and the field's own
/// values: sup_z [W^xi(x0,s; z,s) + L(z,s; x,t)] vs W^xi(x0,s; x,t).
pub fn check_eternal(
    field: &dyn BusemannField,
    kernel: &dyn LandscapeKernel,
    xi: SignedDirection,
    x0: f64,
    s: f64,
    t: f64,
    x_grid: &[f64],
    spec: &GridSpec,
) -> Result<f64> {
    let root = SpaceTimePoint::new(x0, s);
    let slice = FnSlice::new(
        |y| Ok(field.eval(xi, root, SpaceTimePoint::new(y, s))?.value),
        2.0 * xi.eta.abs(),
    );
    let mut worst: f64 = 0.0;
    for &x in x_grid {
        let evolved = evolve(&slice, kernel, s, t, x, spec)?.value;
        let direct = field.eval(xi, root, SpaceTimePoint::new(x, t))?.value;
        worst = worst.max((evolved - direct).abs());
    }
    Ok(worst)
}

/// Compare two-step evolution s -> r -> t against the direct variational
/// value at t; returns the max absolute deviation over the grid.
pub fn semigroup_check(
    phi: &WeightFunction,
    field: &dyn BusemannField,
    kernel: &dyn LandscapeKernel,
    s: f64,
    r: f64,
    t: f64,
    x_grid: &[f64],
    spec: &GridSpec,
) -> Result<f64> {
    let gate = finiteness_gate(phi, s, field)?;
    if !gate.accepted {
        return Err(KpzError::GateRejected(gate.diagnostic));
    }
    let slope = 2.0 * color_truncation_bound(field, phi.anchor.x, s, phi)?;
    let at_s = FnSlice::new(|y| Ok(w_star(phi, field, y, s, None)?.value), slope);
    let at_r = FnSlice::new(
        |y| Ok(evolve(&at_s, kernel, s, r, y, spec)?.value),
        slope,
    );
    let mut worst: f64 = 0.0;
    for &x in x_grid {
        let twice = evolve(&at_r, kernel, r, t, x, spec)?.value;
        let direct = w_star(phi, field, x, t, None)?.value;
        worst = worst.max((twice - direct).abs());
    }
    Ok(worst)
}

/// A finite visible color sequence on a time slice: colors strictly
/// increasing, `borders[k]` the left endpoint of `colors[k + 1]`'s interval.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceColoring {
    pub t: f64,
    pub colors: Vec<SignedDirection>,
    pub borders: Vec<f64>,
}

impl SliceColoring {
    pub fn validate(&self) -> Result<()> {
        if self.colors.is_empty() {
            return Err(KpzError::DegenerateSlice("no visible colors".into()));
        }
        if self.borders.len() + 1 != self.colors.len() {
            return Err(KpzError::DegenerateSlice(format!(
                "{} colors need {} borders, got {}",
                self.colors.len(),
                self.colors.len() - 1,
                self.borders.len()
            )));
        }
        if self.colors.windows(2).any(|w| w[0] >= w[1]) {
            return Err(KpzError::DegenerateSlice(
                "colors not strictly increasing".into(),
            ));
        }
        if self.borders.windows(2).any(|w| w[0] >= w[1]) {
            return Err(KpzError::DegenerateSlice(
                "borders not strictly increasing".into(),
            ));
        }
        Ok(())
    }

    /// Index of the color whose left-closed interval [a, b) contains x = 0.
    pub fn anchor_index(&self) -> usize {
        self.borders.partition_point(|&b| b <= 0.0)
    }
}

/// Recover the constants of an eternal solution from a colored slice by
/// telescoping Busemann increments across borders, anchored so the color
/// containing x = 0 gets constant 0.
///
/// The returned weights are anchored at (0, slice time); the round trip
/// through the variational supremum reproduces b(., t) - b(0, t).
pub fn extract_constants(
    coloring: &SliceColoring,
    field: &dyn BusemannField,
) -> Result<WeightFunction> {
    coloring.validate()?;
    let s = coloring.t;
    let pt = |x: f64| SpaceTimePoint::new(x, s);
    let zero = pt(0.0);
    let colors = &coloring.colors;
    let borders = &coloring.borders;
    let i0 = coloring.anchor_index();

    let mut out = WeightFunction::new().with_anchor(zero);
    out.insert(colors[i0], 0.0);

    // Rightward: telescoped increments of each color across its interval.
    let mut acc = 0.0;
    for k in (i0 + 1)..colors.len() {
        let from = if k - 1 == i0 { zero } else { pt(borders[k - 2]) };
        acc += field.eval(colors[k - 1], from, pt(borders[k - 1]))?.value;
        let c = acc - field.eval(colors[k], zero, pt(borders[k - 1]))?.value;
        out.insert(colors[k], c);
    }

    // Leftward, mirrored.
    let mut acc = 0.0;
    for k in (0..i0).rev() {
        if k + 1 == i0 {
            acc += field.eval(colors[i0], zero, pt(borders[k]))?.value;
        } else {
            acc -= field
                .eval(colors[k + 1], pt(borders[k]), pt(borders[k + 1]))?
                .value;
        }
        let c = acc - field.eval(colors[k], zero, pt(borders[k]))?.value;
        out.insert(colors[k], c);
    }
    Ok(out)
}

/// Move a weight function to a new anchor without changing the solution it
/// represents: c'(xi) = c(xi) + W^xi(old anchor; new anchor), so that
/// sup_xi [W^xi(new; q) + c'(xi)] = sup_xi [W^xi(old; q) + c(xi)] for all q.
pub fn rebase_constants(
    phi: &WeightFunction,
    field: &dyn BusemannField,
    new_anchor: SpaceTimePoint,
) -> Result<WeightFunction> {
    let mut out = WeightFunction::new().with_anchor(new_anchor);
    if let Some(tail) = &phi.tail {
        out = out.with_tail(tail.clone());
    }
    for (xi, c) in phi.atoms() {
        let shift = field.eval(*xi, phi.anchor, new_anchor)?.value;
        out.insert(*xi, c + shift);
    }
    Ok(out)
}

/// Fit the spatial growth exponent of the eternal solution built from the
/// power tail phi(xi) = -|eta|^alpha; the exponent contracts to a/(a-1).
pub fn growth_rate_probe(
    field: &dyn BusemannField,
    alpha: f64,
    t: f64,
    x_sweep: &[f64],
) -> Result<f64> {
    if !(alpha > 2.0) {
        return Err(KpzError::GateRejected(format!(
            "growth probe needs alpha > 2, got {alpha}"
        )));
    }
    let phi =
        WeightFunction::new().with_tail(crate::weight::TailDescriptor::power(alpha, 1.0));
    let mut pts = Vec::new();
    for &x in x_sweep {
        if x <= 0.0 {
            return Err(KpzError::Invalid("growth sweep must be positive".into()));
        }
        let budget = color_truncation_bound(field, x, t, &phi)?;
        let v = w_star_unchecked(&phi, field, x, t, budget)?.value;
        if v <= 0.0 {
            return Err(KpzError::Invalid(format!(
                "non-positive height {v} at x={x}; widen the sweep"
            )));
        }
        pts.push((x.ln(), v.ln()));
    }
    if pts.len() < 2 {
        return Err(KpzError::Invalid("growth sweep needs >= 2 points".into()));
    }
    // Least-squares slope of log height vs log x.
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let num: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let den: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(num / den)
}

/// Max over the sweep of b(x, t) - a x^2, required to be attained strictly
/// inside the sweep (decreasing toward both ends).
pub fn quadratic_envelope_check(
    b: &EternalSolutionField<'_>,
    t: f64,
    a: f64,
    x_sweep: &[f64],
) -> Result<f64> {
    assert!(a > 0.0);
    if x_sweep.len() < 3 {
        return Err(KpzError::Invalid("envelope sweep needs >= 3 points".into()));
    }
    let mut best = f64::NEG_INFINITY;
    let mut best_i = 0;
    for (i, &x) in x_sweep.iter().enumerate() {
        let v = b.eval(x, t)? - a * x * x;
        if v > best {
            best = v;
            best_i = i;
        }
    }
    if best_i == 0 || best_i == x_sweep.len() - 1 {
        return Err(KpzError::CertificateFailure(format!(
            "envelope maximum on sweep boundary at x={}",
            x_sweep[best_i]
        )));
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::busemann::ParabolicBusemann;
    use crate::geom::Sign;
    use crate::landscape::ParabolicBackend;
    use crate::weight::TailDescriptor;

    const F: ParabolicBusemann = ParabolicBusemann;
    const K: ParabolicBackend = ParabolicBackend;

    fn flat3() -> WeightFunction {
        WeightFunction::flat([-1.0, 0.0, 1.0])
    }

    #[test]
    fn w_star_three_colors() {
        let r = w_star(&flat3(), &F, 0.0, 1.0, None).unwrap();
        assert_eq!(r.value, 1.0);
        let r = w_star(&flat3(), &F, 1.0, 0.0, None).unwrap();
        assert_eq!(r.value, 2.0);
        assert_eq!(r.argmax, Some(SignedDirection::minus(1.0)));
    }

    #[test]
    fn w_star_singleton_exact() {
        let phi = WeightFunction::from_pairs([(SignedDirection::minus(0.5), -3.0)]);
        let r = w_star(&phi, &F, 2.0, 4.0, None).unwrap();
        assert_eq!(r.value, 2.0 * 0.5 * 2.0 + 0.25 * 4.0 - 3.0);
    }

    #[test]
    fn w_star_empty_is_neg_inf() {
        let r = w_star(&WeightFunction::new(), &F, 0.0, 1.0, None).unwrap();
        assert_eq!(r.value, f64::NEG_INFINITY);
        assert!(r.argmax.is_none());
    }

    #[test]
    fn w_star_refuses_rejected_weight() {
        let phi = WeightFunction::new().with_tail(TailDescriptor::power(2.0, 1.0));
        assert!(matches!(
            w_star(&phi, &F, 0.0, 1.0, None),
            Err(KpzError::GateRejected(_))
        ));
    }

    #[test]
    fn truncation_bound_finite_support() {
        assert_eq!(color_truncation_bound(&F, 3.0, 2.0, &flat3()).unwrap(), 1.0);
        assert_eq!(
            color_truncation_bound(&F, 0.0, 1.0, &WeightFunction::new()).unwrap(),
            0.0
        );
    }

    #[test]
    fn truncation_bound_cubic_tail_certified() {
        let phi = WeightFunction::new().with_tail(TailDescriptor::power(3.0, 1.0));
        let t_bound = color_truncation_bound(&F, 0.0, 1.0, &phi).unwrap();
        let best = w_star_unchecked(&phi, &F, 0.0, 1.0, t_bound).unwrap().value;
        // sampled colors beyond the budget stay below the attained sup
        for eta in [t_bound + 0.1, 2.0 * t_bound, 10.0 * t_bound] {
            for sgn in [-1.0, 1.0] {
                let xi = SignedDirection::minus(sgn * eta);
                let v = F
                    .eval(xi, SpaceTimePoint::new(0.0, 0.0), SpaceTimePoint::new(0.0, 1.0))
                    .unwrap()
                    .value
                    - eta.powi(3);
                assert!(v < best);
            }
        }
    }

    #[test]
    fn truncation_bound_rejected_tail_errors() {
        let phi = WeightFunction::new().with_tail(TailDescriptor::power(2.0, 1.0));
        assert!(matches!(
            color_truncation_bound(&F, 0.0, 1.0, &phi),
            Err(KpzError::CertificateFailure(_))
        ));
    }

    #[test]
    fn divergence_probe_past_blowup_time() {
        // Rejected quadratic family: past t = A the sup grows without bound.
        let phi = WeightFunction::new().with_tail(TailDescriptor::power(2.0, 1.0));
        let v = w_star_unchecked(&phi, &F, 0.0, 2.0, 2000.0).unwrap().value;
        assert!(v > 1.0e6);
    }

    #[test]
    fn evolve_flat_field() {
        let slice = FnSlice::new(|_| Ok(0.0), 0.0);
        let r = evolve(&slice, &K, 0.0, 1.0, 0.7, &GridSpec::default()).unwrap();
        assert!(r.value.abs() < 1e-12);
        assert!((r.argmax - 0.7).abs() < 1e-6);
    }

    #[test]
    fn evolve_linear_initial_data() {
        // initial 2 eta y + eta^2 s evolves to 2 eta x + eta^2 t exactly
        let (eta, s, t, x) = (0.8, -1.0, 1.5, 0.3);
        let slice = FnSlice::new(move |y| Ok(2.0 * eta * y + eta * eta * s), 2.0 * eta);
        let r = evolve(&slice, &K, s, t, x, &GridSpec::default()).unwrap();
        let exact = 2.0 * eta * x + eta * eta * t;
        assert!((r.value - exact).abs() < 1e-9, "value {} vs {}", r.value, exact);
        assert!((r.argmax - (x + eta * (t - s))).abs() < 1e-4);
    }

    #[test]
    fn evolve_spacing_refines_quadratically() {
        let (eta, s, t, x) = (0.6, 0.0, 1.0, 0.0);
        let slice = FnSlice::new(move |y| Ok(2.0 * eta * y + eta * eta * s), 2.0 * eta);
        let exact = 2.0 * eta * x + eta * eta * t;
        let coarse = GridSpec { spacing: 0.2, refine_rounds: 0 };
        let refined = GridSpec { spacing: 0.2, refine_rounds: 1 };
        let e1 = (evolve(&slice, &K, s, t, x, &coarse).unwrap().value - exact).abs();
        let e2 = (evolve(&slice, &K, s, t, x, &refined).unwrap().value - exact).abs();
        assert!(e2 <= e1);
        assert!(e1 < 0.05);
        // one 32-fold step refinement: smooth maximum error drops ~1000x
        assert!(e2 < e1 / 100.0 + 1e-12);
    }

    #[test]
    fn evolve_radius_insufficient_fails() {
        // Declared slope 1 but actual slope 10: argmax escapes twice.
        let slice = FnSlice::new(|y| Ok(10.0 * y), 1.0);
        assert!(matches!(
            evolve(&slice, &K, 0.0, 1.0, 0.0, &GridSpec::default()),
            Err(KpzError::RadiusInsufficient { .. })
        ));
    }

    #[test]
    fn check_eternal_parabolic() {
        let xs = [-1.0, -0.25, 0.0, 0.5, 1.0];
        let dev = check_eternal(&F, &K, SignedDirection::minus(1.0), 0.0, 0.0, 1.0, &xs,
            &GridSpec::default())
        .unwrap();
        assert!(dev < 1e-9, "deviation {dev}");
        let dev0 = check_eternal(&F, &K, SignedDirection::minus(0.0), 0.0, 0.0, 2.0, &xs,
            &GridSpec::default())
        .unwrap();
        assert!(dev0 < 1e-12);
    }

    #[test]
    fn semigroup_three_colors() {
        let xs = [-0.7, 0.0, 0.4, 1.1];
        let dev = semigroup_check(&flat3(), &F, &K, -1.0, 0.0, 1.0, &xs,
            &GridSpec::default())
        .unwrap();
        assert!(dev < 1e-8, "deviation {dev}");
    }

    #[test]
    fn exchange_identity() {
        let phi = WeightFunction::from_pairs([
            (SignedDirection::minus(-1.0), 0.3),
            (SignedDirection::minus(0.2), -0.1),
            (SignedDirection::minus(1.0), 0.5),
        ]);
        let (s, t) = (-0.5, 1.0);
        let slope = 2.0;
        let at_s = FnSlice::new(|y| Ok(w_star(&phi, &F, y, s, None)?.value), slope);
        for x in [-1.2, 0.0, 0.8] {
            let evolved = evolve(&at_s, &K, s, t, x, &GridSpec::default())
                .unwrap()
                .value;
            let direct = w_star(&phi, &F, x, t, None).unwrap().value;
            assert!((evolved - direct).abs() < 1e-8);
        }
    }

    #[test]
    fn extract_constants_single_color() {
        let coloring = SliceColoring {
            t: 0.0,
            colors: vec![SignedDirection::minus(0.7)],
            borders: vec![],
        };
        let c = extract_constants(&coloring, &F).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.get(&SignedDirection::minus(0.7)), Some(0.0));
    }

    #[test]
    fn extract_constants_three_colors() {
        // Flat weights on {-1, 0, 1} at slice t = -1: color split at +/- 1/2.
        let coloring = SliceColoring {
            t: -1.0,
            colors: vec![
                SignedDirection::minus(-1.0),
                SignedDirection::minus(0.0),
                SignedDirection::minus(1.0),
            ],
            borders: vec![-0.5, 0.5],
        };
        let c = extract_constants(&coloring, &F).unwrap();
        assert_eq!(c.get(&SignedDirection::minus(-1.0)), Some(-1.0));
        assert_eq!(c.get(&SignedDirection::minus(0.0)), Some(0.0));
        assert_eq!(c.get(&SignedDirection::minus(1.0)), Some(-1.0));
        // cross-check: phi(xi) + W^xi(0,0; 0,-1) = -xi^2 shape
        assert_eq!(c.anchor, SpaceTimePoint::new(0.0, -1.0));
    }

    #[test]
    fn extraction_round_trip() {
        // Recover b(., s) - b(0, s) from the slice coloring of W * phi.
        let s = -1.0;
        let coloring = SliceColoring {
            t: s,
            colors: vec![
                SignedDirection::minus(-1.0),
                SignedDirection::minus(0.0),
                SignedDirection::minus(1.0),
            ],
            borders: vec![-0.5, 0.5],
        };
        let c = extract_constants(&coloring, &F).unwrap();
        let b0 = w_star(&flat3(), &F, 0.0, s, None).unwrap().value;
        for x in [-2.0, -0.5, -0.2, 0.0, 0.49, 0.51, 1.7] {
            let lhs = w_star(&c, &F, x, s, None).unwrap().value;
            let rhs = w_star(&flat3(), &F, x, s, None).unwrap().value - b0;
            assert!((lhs - rhs).abs() < 1e-12, "x={x}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn extract_constants_empty_slice_errors() {
        let coloring = SliceColoring {
            t: 0.0,
            colors: vec![],
            borders: vec![],
        };
        assert!(matches!(
            extract_constants(&coloring, &F),
            Err(KpzError::DegenerateSlice(_))
        ));
    }

    #[test]
    fn anchor_index_left_closed() {
        let coloring = SliceColoring {
            t: 0.0,
            colors: vec![
                SignedDirection::minus(-1.0),
                SignedDirection::minus(0.0),
                SignedDirection::minus(1.0),
            ],
            borders: vec![-0.5, 0.5],
        };
        assert_eq!(coloring.anchor_index(), 1);
        // a border exactly at 0 belongs to the color on its right
        let at_zero = SliceColoring {
            borders: vec![0.0, 0.5],
            ..coloring
        };
        assert_eq!(at_zero.anchor_index(), 1);
    }

    #[test]
    fn growth_exponent_matches_alpha() {
        let xs: Vec<f64> = (1..=8).map(|i| 10.0 + 5.0 * i as f64).collect();
        let e3 = growth_rate_probe(&F, 3.0, 0.0, &xs).unwrap();
        assert!((e3 - 1.5).abs() < 0.02, "alpha=3 exponent {e3}");
        let e4 = growth_rate_probe(&F, 4.0, 0.0, &xs).unwrap();
        assert!((e4 - 4.0 / 3.0).abs() < 0.02, "alpha=4 exponent {e4}");
        // alpha = 3 closed form at one point
        let phi = WeightFunction::new().with_tail(TailDescriptor::power(3.0, 1.0));
        let x = 20.0;
        let budget = color_truncation_bound(&F, x, 0.0, &phi).unwrap();
        let v = w_star_unchecked(&phi, &F, x, 0.0, budget).unwrap().value;
        let exact = (2.0 * x).powf(1.5) * 2.0 / (3.0 * 3.0_f64.sqrt());
        assert!((v - exact).abs() / exact < 1e-3, "{v} vs {exact}");
    }

    #[test]
    fn quadratic_envelope_interior() {
        let b = EternalSolutionField::new(flat3(), &F).unwrap();
        let xs: Vec<f64> = (-40..=40).map(|i| i as f64 * 0.1).collect();
        let sup = quadratic_envelope_check(&b, 0.5, 1.0, &xs).unwrap();
        // max over xi of max_x [2 xi x + xi^2 t - x^2] = max(t + 1, 0) at xi = +/-1
        assert!((sup - 1.5).abs() < 1e-2, "sup {sup}");
        // too-narrow sweep puts the max on the boundary
        let narrow = [0.4, 0.5, 0.6];
        assert!(matches!(
            quadratic_envelope_check(&b, 0.5, 1.0, &narrow),
            Err(KpzError::CertificateFailure(_))
        ));
    }

    #[test]
    fn eternal_field_increment() {
        let b = EternalSolutionField::new(flat3(), &F).unwrap();
        let p = SpaceTimePoint::new(0.0, 1.0);
        let q = SpaceTimePoint::new(1.0, 1.0);
        let inc = b.increment(p, q).unwrap();
        assert_eq!(inc, 3.0 - 1.0);
        assert_eq!(b.sample(0.0, 1.0).unwrap().argmax, Some(SignedDirection::minus(-1.0)));
    }

    #[test]
    fn eternal_field_rejects_bad_weight() {
        let phi = WeightFunction::new().with_tail(TailDescriptor::power(1.5, 2.0));
        assert!(EternalSolutionField::new(phi, &F).is_err());
    }

    #[test]
    fn slice_field_slope() {
        let b = EternalSolutionField::new(flat3(), &F).unwrap();
        let sl = b.slice(0.0).unwrap();
        assert_eq!(sl.slope_bound(), 2.0);
        assert_eq!(sl.eval(1.0).unwrap(), 2.0);
        let _ = Sign::Plus;
    }
}
