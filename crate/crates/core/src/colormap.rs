//! Space-time coloring of an eternal solution: per-cell color assignment on a
//! window grid, run-length slices, border trajectories, extinction records,
//! the shock tree of color merges, and reconstruction of the weight function
//! from the colored picture alone.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::busemann::BusemannField;
use crate::error::{KpzError, Result};
use crate::eternal::{
    extract_constants, w_star_unchecked, EternalSolutionField, GridSpec, SliceColoring,
};
use crate::geodesics::{assign_color, geometric_partition, track_backward, Side};
use crate::geom::{SignedDirection, SpaceTimePoint};
use crate::interfaces::tau_two_colors;
use crate::landscape::LandscapeKernel;
use crate::weight::WeightFunction;

/// Window and resolution of a color grid.
#[derive(Debug, Clone, Copy)]
pub struct ColorGridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub dx: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub dt: f64,
    /// Largest tolerated fraction of ambiguous cells before the build fails.
    pub max_ambiguous_fraction: f64,
}

impl ColorGridSpec {
    pub fn new(x_min: f64, x_max: f64, dx: f64, t_min: f64, t_max: f64, dt: f64) -> Self {
        Self {
            x_min,
            x_max,
            dx,
            t_min,
            t_max,
            dt,
            max_ambiguous_fraction: 0.01,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.dx > 0.0 && self.dt > 0.0) {
            return Err(KpzError::Invalid("grid steps must be positive".into()));
        }
        if !(self.x_min < self.x_max && self.t_min < self.t_max) {
            return Err(KpzError::Invalid("empty color grid window".into()));
        }
        if !(0.0..=1.0).contains(&self.max_ambiguous_fraction) {
            return Err(KpzError::Invalid(
                "ambiguous fraction must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// A maximal constant-color interval of one time slice. Interior borders use
/// the half-open convention (a, b]: a cell sitting exactly on a border belongs
/// to the left color. `a`/`b` are `None` where the run is cut by the window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Run {
    pub color: SignedDirection,
    /// x of the first and last cell of the run.
    pub first_cell: f64,
    pub last_cell: f64,
    pub cells: usize,
    /// Left border (shared with the previous run), `None` at the window edge.
    pub a: Option<f64>,
    /// Right border (shared with the next run), `None` at the window edge.
    pub b: Option<f64>,
}

impl Run {
    /// Midpoint of the run: border midpoint when interior, cell midpoint
    /// against a window edge.
    pub fn midpoint(&self) -> f64 {
        match (self.a, self.b) {
            (Some(a), Some(b)) => 0.5 * (a + b),
            _ => 0.5 * (self.first_cell + self.last_cell),
        }
    }
}

/// Run-length encoding of one time slice.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceRuns {
    pub t: f64,
    pub runs: Vec<Run>,
}

impl SliceRuns {
    pub fn colors(&self) -> Vec<SignedDirection> {
        self.runs.iter().map(|r| r.color).collect()
    }

    pub fn run_of(&self, xi: SignedDirection) -> Option<&Run> {
        self.runs.iter().find(|r| r.color == xi)
    }

    fn run_index(&self, xi: SignedDirection) -> Option<usize> {
        self.runs.iter().position(|r| r.color == xi)
    }
}

/// The colored window: cell colors (`None` = ambiguous), their run-length
/// slices, and the realized ambiguity fraction.
#[derive(Debug, Clone)]
pub struct ColorGrid {
    pub spec: ColorGridSpec,
    pub xs: Vec<f64>,
    pub times: Vec<f64>,
    /// `cells[time index][x index]`.
    pub cells: Vec<Vec<Option<SignedDirection>>>,
    pub slices: Vec<SliceRuns>,
    pub ambiguous_fraction: f64,
}

fn axis(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|k| lo + k as f64 * step).collect()
}

/// Color every cell of the window by backward-geodesic slope matching, then
/// run-length encode each slice.
///
/// Fails when the ambiguous-cell fraction exceeds the allowance, and when a
/// color visible at a later slice is missing from an earlier one (colors only
/// die going forward); runs cut by the window edge are exempt from the
/// nestedness check, since they may genuinely enter or leave laterally.
pub fn build_color_grid(
    b: &EternalSolutionField<'_>,
    kernel: &dyn LandscapeKernel,
    spec: &ColorGridSpec,
    reference: &[SignedDirection],
    scan: &GridSpec,
) -> Result<ColorGrid> {
    spec.validate()?;
    let xs = axis(spec.x_min, spec.x_max, spec.dx);
    let times = axis(spec.t_min, spec.t_max, spec.dt);
    let nx = xs.len();

    let raw: Vec<Result<Option<SignedDirection>>> = (0..times.len() * nx)
        .into_par_iter()
        .map(|idx| {
            let p = SpaceTimePoint::new(xs[idx % nx], times[idx / nx]);
            match assign_color(b, kernel, p, reference, scan) {
                Ok(c) => Ok(Some(c)),
                Err(KpzError::AmbiguousColor { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect();

    let mut cells: Vec<Vec<Option<SignedDirection>>> = Vec::with_capacity(times.len());
    let mut ambiguous = 0usize;
    for (idx, r) in raw.into_iter().enumerate() {
        if idx % nx == 0 {
            cells.push(Vec::with_capacity(nx));
        }
        let c = r?;
        if c.is_none() {
            ambiguous += 1;
        }
        cells.last_mut().unwrap().push(c);
    }
    let ambiguous_fraction = ambiguous as f64 / (times.len() * nx) as f64;
    if ambiguous_fraction > spec.max_ambiguous_fraction {
        return Err(KpzError::AmbiguityOverflow {
            frac: ambiguous_fraction,
            allowed: spec.max_ambiguous_fraction,
        });
    }

    let mut slices = Vec::with_capacity(times.len());
    for (ti, row) in cells.iter().enumerate() {
        slices.push(encode_runs(times[ti], &xs, row)?);
    }

    // Backward nestedness: every color of a later slice must be present one
    // slice earlier, unless its later run touches the window edge.
    for w in slices.windows(2) {
        let earlier: BTreeSet<SignedDirection> = w[0].colors().into_iter().collect();
        for run in &w[1].runs {
            let lateral = run.a.is_none() || run.b.is_none();
            if !earlier.contains(&run.color) && !lateral {
                return Err(KpzError::CertificateFailure(format!(
                    "color {} interior at t = {} but absent at t = {}",
                    run.color, w[1].t, w[0].t
                )));
            }
        }
    }

    Ok(ColorGrid {
        spec: *spec,
        xs,
        times,
        cells,
        slices,
        ambiguous_fraction,
    })
}

fn encode_runs(t: f64, xs: &[f64], row: &[Option<SignedDirection>]) -> Result<SliceRuns> {
    // Ambiguous cells carry no information: they extend the surrounding run
    // when the colors on both sides agree, and fall on the border otherwise.
    let mut runs: Vec<Run> = Vec::new();
    for (i, cell) in row.iter().enumerate() {
        let Some(c) = cell else { continue };
        match runs.last_mut() {
            Some(last) if last.color == *c => {
                last.last_cell = xs[i];
                last.cells += 1;
            }
            _ => {
                if let Some(prev) = runs.last() {
                    if prev.color > *c {
                        return Err(KpzError::CertificateFailure(format!(
                            "colors out of order at t = {t}: {} left of {}",
                            prev.color, c
                        )));
                    }
                }
                runs.push(Run {
                    color: *c,
                    first_cell: xs[i],
                    last_cell: xs[i],
                    cells: 1,
                    a: None,
                    b: None,
                });
            }
        }
    }
    for k in 1..runs.len() {
        let border = 0.5 * (runs[k - 1].last_cell + runs[k].first_cell);
        runs[k - 1].b = Some(border);
        runs[k].a = Some(border);
    }
    Ok(SliceRuns { t, runs })
}

/// One color's measured borders over the slices where it is present.
#[derive(Debug, Clone)]
pub struct BorderTrajectory {
    pub color: SignedDirection,
    pub times: Vec<f64>,
    pub a: Vec<Option<f64>>,
    pub b: Vec<Option<f64>>,
}

impl BorderTrajectory {
    /// Largest jump of either border between consecutive present slices; a
    /// border that keeps hitting the window edge contributes nothing.
    pub fn max_jump(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for side in [&self.a, &self.b] {
            for w in side.windows(2) {
                if let (Some(u), Some(v)) = (w[0], w[1]) {
                    worst = worst.max((v - u).abs());
                }
            }
        }
        worst
    }
}

/// Where and when a color dies. For a color still present at the top slice
/// the time fields are `+inf` and the spatial fields are NaN.
#[derive(Debug, Clone)]
pub struct ExtinctionRecord {
    pub color: SignedDirection,
    /// Last grid time at which the color is present.
    pub t_last: f64,
    /// Extinction time estimated by intersecting the linearly extrapolated
    /// borders; always in [t_last, t_last + dt].
    pub t_est: f64,
    /// Midpoint of the final non-empty run.
    pub x_ext: f64,
    /// Border-intersection estimate of the extinction abscissa.
    pub x_est: f64,
    /// Colors adjacent to the final run, when both flanks are in-window.
    pub flank: Option<(SignedDirection, SignedDirection)>,
}

impl ExtinctionRecord {
    pub fn survives(&self) -> bool {
        self.t_est.is_infinite()
    }
}

impl ColorGrid {
    pub fn color_set(&self, slice: usize) -> BTreeSet<SignedDirection> {
        self.slices[slice].colors().into_iter().collect()
    }

    /// All colors observed anywhere in the window.
    pub fn all_colors(&self) -> BTreeSet<SignedDirection> {
        self.slices
            .iter()
            .flat_map(|s| s.colors())
            .collect()
    }

    /// True when the visible run count never increases with time.
    pub fn merge_only(&self) -> bool {
        self.slices.windows(2).all(|w| w[1].runs.len() <= w[0].runs.len())
    }

    /// One slice as a border-indexed coloring (interior borders only; a slice
    /// whose interior runs are cut by the window cannot be converted).
    pub fn slice_coloring(&self, slice: usize) -> Result<SliceColoring> {
        let s = &self.slices[slice];
        let colors = s.colors();
        let borders: Vec<f64> = s.runs[..s.runs.len().saturating_sub(1)]
            .iter()
            .map(|r| r.b.ok_or_else(|| KpzError::DegenerateSlice("run cut by window".into())))
            .collect::<Result<_>>()?;
        let out = SliceColoring {
            t: s.t,
            colors,
            borders,
        };
        out.validate()?;
        Ok(out)
    }

    pub fn borders(&self, xi: SignedDirection) -> BorderTrajectory {
        let mut out = BorderTrajectory {
            color: xi,
            times: Vec::new(),
            a: Vec::new(),
            b: Vec::new(),
        };
        for s in &self.slices {
            if let Some(run) = s.run_of(xi) {
                out.times.push(s.t);
                out.a.push(run.a);
                out.b.push(run.b);
            }
        }
        out
    }

    /// Extinction record of a color, with the extinction point refined by
    /// extrapolating the last two measured borders to their intersection.
    pub fn extinction(&self, xi: SignedDirection) -> Result<ExtinctionRecord> {
        let last = self
            .slices
            .iter()
            .rposition(|s| s.run_of(xi).is_some())
            .ok_or_else(|| KpzError::Invalid(format!("color {xi} never appears in window")))?;
        if last == self.slices.len() - 1 {
            return Ok(ExtinctionRecord {
                color: xi,
                t_last: f64::INFINITY,
                t_est: f64::INFINITY,
                x_ext: f64::NAN,
                x_est: f64::NAN,
                flank: None,
            });
        }
        let s = &self.slices[last];
        let idx = s.run_index(xi).unwrap();
        let run = &s.runs[idx];
        let flank = if idx > 0 && idx + 1 < s.runs.len() {
            Some((s.runs[idx - 1].color, s.runs[idx + 1].color))
        } else {
            None
        };
        let t_last = s.t;
        let dt = self.spec.dt;
        let x_ext = run.midpoint();

        // Linear border extrapolation from the last two alive slices.
        let refined = (|| {
            let prev = self.slices[..last]
                .last()
                .and_then(|p| p.run_of(xi))?;
            let (a1, b1, a2, b2) = (prev.a?, prev.b?, run.a?, run.b?);
            let sa = (a2 - a1) / dt;
            let sb = (b2 - b1) / dt;
            let closing = sa - sb;
            if closing <= 1e-12 {
                return None;
            }
            let u = ((b2 - a2) / closing).clamp(0.0, dt);
            Some((t_last + u, a2 + sa * u))
        })();
        let (t_est, x_est) = refined.unwrap_or((t_last + 0.5 * dt, x_ext));

        Ok(ExtinctionRecord {
            color: xi,
            t_last,
            t_est,
            x_ext,
            x_est,
            flank,
        })
    }
}

/// A merge point of the shock tree: the death of `color`, after which its two
/// flanking colors share a border.
#[derive(Debug, Clone)]
pub struct ShockNode {
    pub color: SignedDirection,
    pub t: f64,
    pub x: f64,
    pub flank: (SignedDirection, SignedDirection),
}

/// One persistent two-color border, alive on [t_lo, t_hi] and attached to the
/// merge nodes below and above it (`None` where the window cuts it off).
#[derive(Debug, Clone)]
pub struct ShockEdge {
    pub left: SignedDirection,
    pub right: SignedDirection,
    pub t_lo: f64,
    pub t_hi: f64,
    pub lower_node: Option<usize>,
    pub upper_node: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct ShockTree {
    pub nodes: Vec<ShockNode>,
    pub edges: Vec<ShockEdge>,
}

impl ShockTree {
    /// Borders still alive at the window top.
    pub fn open_leaves(&self) -> usize {
        self.edges.iter().filter(|e| e.upper_node.is_none()).count()
    }

    /// Number of edge endpoints attached to a node; 3 for a clean binary
    /// merge fully inside the window.
    pub fn degree(&self, node: usize) -> usize {
        self.edges
            .iter()
            .filter(|e| e.lower_node == Some(node) || e.upper_node == Some(node))
            .count()
    }
}

/// Assemble the shock tree: nodes are in-window extinctions, edges the
/// distinct adjacent color pairs, attached by matching extinction estimates
/// against the time span each border is observed.
pub fn shock_tree(grid: &ColorGrid) -> Result<ShockTree> {
    let mut nodes = Vec::new();
    for xi in grid.all_colors() {
        let rec = grid.extinction(xi)?;
        if rec.survives() {
            continue;
        }
        let Some(flank) = rec.flank else { continue };
        nodes.push(ShockNode {
            color: rec.color,
            t: rec.t_est,
            x: rec.x_est,
            flank,
        });
    }
    nodes.sort_by(|u, v| u.t.total_cmp(&v.t));

    let mut spans: BTreeMap<(SignedDirection, SignedDirection), (f64, f64)> = BTreeMap::new();
    for s in &grid.slices {
        for w in s.runs.windows(2) {
            let key = (w[0].color, w[1].color);
            let span = spans.entry(key).or_insert((s.t, s.t));
            span.0 = span.0.min(s.t);
            span.1 = span.1.max(s.t);
        }
    }

    let dt = grid.spec.dt;
    let eps = 1e-9 * (1.0 + dt);
    let mut edges = Vec::new();
    for ((left, right), (t_lo, t_hi)) in spans {
        let upper_node = nodes.iter().position(|n| {
            (n.color == left || n.color == right) && n.t > t_hi && n.t <= t_hi + dt + eps
        });
        let lower_node = nodes.iter().position(|n| {
            n.flank == (left, right) && t_lo - n.t >= -eps && t_lo - n.t <= dt + eps
        });
        edges.push(ShockEdge {
            left,
            right,
            t_lo,
            t_hi,
            lower_node,
            upper_node,
        });
    }
    Ok(ShockTree { nodes, edges })
}

/// Compare each measured border of `xi` against the closed-form two-color
/// interface computed from origin-anchored constants; returns the worst
/// deviation over all slices where the flanking pair is in-window.
pub fn border_interface_check(
    grid: &ColorGrid,
    field: &dyn BusemannField,
    constants: &WeightFunction,
    xi: SignedDirection,
    sweep_radius: f64,
) -> Result<f64> {
    if constants.anchor != SpaceTimePoint::new(0.0, 0.0) {
        return Err(KpzError::Invalid(
            "interface check requires origin-anchored constants".into(),
        ));
    }
    let c_of = |c: SignedDirection| {
        constants
            .get(&c)
            .ok_or_else(|| KpzError::Invalid(format!("no constant for color {c}")))
    };
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    for s in &grid.slices {
        let Some(idx) = s.run_index(xi) else { continue };
        let run = &s.runs[idx];
        if let (Some(a), true) = (run.a, idx > 0) {
            let lo = s.runs[idx - 1].color;
            let tau = tau_two_colors(field, lo, xi, c_of(lo)?, c_of(xi)?, s.t, sweep_radius)?;
            worst = worst.max((a - tau).abs());
            checked += 1;
        }
        if let (Some(b), true) = (run.b, idx + 1 < s.runs.len()) {
            let hi = s.runs[idx + 1].color;
            let tau = tau_two_colors(field, xi, hi, c_of(xi)?, c_of(hi)?, s.t, sweep_radius)?;
            worst = worst.max((b - tau).abs());
            checked += 1;
        }
    }
    if checked == 0 {
        return Err(KpzError::DegenerateSlice(format!(
            "color {xi} has no interior border to check"
        )));
    }
    Ok(worst)
}

/// Outcome of probing the three geodesics around an extinction point.
#[derive(Debug, Clone, Copy)]
pub struct TripleProbeReport {
    /// Probe skipped: the record lacks a flank or an interior final run.
    pub skipped: bool,
    /// Positions strictly ordered left < middle < right at every depth.
    pub ordered: bool,
    /// Both gaps nondecreasing going backward.
    pub gaps_widening: bool,
    pub depth: usize,
}

impl TripleProbeReport {
    pub fn pass(&self) -> bool {
        self.skipped || (self.ordered && self.gaps_widening)
    }
}

/// Launch leftmost backward geodesics from just below an extinction point:
/// one inside each flanking color and one inside the dying color. They must
/// stay strictly ordered with widening gaps.
pub fn triple_geodesic_probe(
    b: &EternalSolutionField<'_>,
    kernel: &dyn LandscapeKernel,
    grid: &ColorGrid,
    record: &ExtinctionRecord,
    scan: &GridSpec,
) -> Result<TripleProbeReport> {
    let skipped = TripleProbeReport {
        skipped: true,
        ordered: false,
        gaps_widening: false,
        depth: 0,
    };
    if record.flank.is_none() || !record.t_last.is_finite() {
        return Ok(skipped);
    }
    let slice = grid
        .slices
        .iter()
        .find(|s| s.t == record.t_last)
        .and_then(|s| s.run_of(record.color));
    let Some(run) = slice else { return Ok(skipped) };
    let (Some(a), Some(bb)) = (run.a, run.b) else {
        return Ok(skipped);
    };

    let t0 = record.t_last;
    let roots = [a - grid.spec.dx, 0.5 * (a + bb), bb + grid.spec.dx];
    let partition = geometric_partition(t0, 1.0, 4);
    let mut tracks = Vec::with_capacity(3);
    for &x in &roots {
        tracks.push(track_backward(
            b,
            kernel,
            SpaceTimePoint::new(x, t0),
            &partition,
            Side::Leftmost,
            scan,
        )?);
    }

    let depth = tracks[0].times.len();
    let mut ordered = true;
    let mut gaps_widening = true;
    let mut prev_gaps = (roots[1] - roots[0], roots[2] - roots[1]);
    for i in 1..depth {
        let (l, m, r) = (
            tracks[0].positions[i],
            tracks[1].positions[i],
            tracks[2].positions[i],
        );
        ordered &= l < m && m < r;
        let gaps = (m - l, r - m);
        gaps_widening &= gaps.0 >= prev_gaps.0 - 1e-9 && gaps.1 >= prev_gaps.1 - 1e-9;
        prev_gaps = gaps;
    }
    Ok(TripleProbeReport {
        skipped: false,
        ordered,
        gaps_widening,
        depth,
    })
}

/// Reconstruct a weight function from the colored picture alone: constants of
/// the colors surviving to the top slice come from border telescoping there,
/// and each dead color's constant is read off at its extinction point, in
/// order of decreasing extinction time. The result is anchored at
/// (0, top slice time) and reproduces the original weights up to one shared
/// additive constant.
pub fn synthesize_weights(
    grid: &ColorGrid,
    field: &dyn BusemannField,
) -> Result<WeightFunction> {
    let top = grid.slices.len() - 1;
    let coloring = grid.slice_coloring(top)?;
    let mut phi = extract_constants(&coloring, field)?;
    let anchor = phi.anchor;

    let mut records: Vec<ExtinctionRecord> = Vec::new();
    for xi in grid.all_colors() {
        let rec = grid.extinction(xi)?;
        if !rec.survives() {
            records.push(rec);
        }
    }
    records.sort_by(|u, v| v.t_est.total_cmp(&u.t_est));
    for w in records.windows(2) {
        if w[0].t_last == w[1].t_last {
            return Err(KpzError::UnresolvedExtinctionOrder(vec![
                w[0].color.eta,
                w[1].color.eta,
            ]));
        }
    }

    for rec in &records {
        let p = SpaceTimePoint::new(rec.x_est, rec.t_est);
        let height = w_star_unchecked(&phi, field, p.x, p.t, phi.max_abs_eta())?.value;
        let c = field.eval(rec.color, p, anchor)?.value + height;
        phi.insert(rec.color, c);
    }
    Ok(phi)
}

/// Outcome of the increments-determine-the-map comparison.
#[derive(Debug, Clone, Copy)]
pub struct MapCheckReport {
    pub increments_equal: bool,
    pub maps_equal: bool,
    /// Maps differ only by a consistent relabeling of colors.
    pub aliased: bool,
    pub max_increment_dev: f64,
}

impl MapCheckReport {
    /// The biconditional: equal increments exactly when the colorings agree
    /// (a pure relabeling counts as agreement and is reported, not failed).
    pub fn pass(&self) -> bool {
        self.increments_equal == (self.maps_equal || self.aliased)
    }
}

/// Check that two solutions have equal increments exactly when their color
/// maps coincide. Increments are compared on the given point pairs; maps
/// cell-for-cell on identically shaped grids, with ambiguous cells ignored.
pub fn increments_determine_map_check(
    b1: &EternalSolutionField<'_>,
    b2: &EternalSolutionField<'_>,
    g1: &ColorGrid,
    g2: &ColorGrid,
    pairs: &[(SpaceTimePoint, SpaceTimePoint)],
    tol: f64,
) -> Result<MapCheckReport> {
    if g1.xs != g2.xs || g1.times != g2.times {
        return Err(KpzError::Invalid("color grids are not congruent".into()));
    }
    if pairs.is_empty() {
        return Err(KpzError::Invalid("no increment pairs supplied".into()));
    }

    let mut max_dev: f64 = 0.0;
    for (p, q) in pairs {
        let d1 = b1.increment(*p, *q)?;
        let d2 = b2.increment(*p, *q)?;
        max_dev = max_dev.max((d1 - d2).abs());
    }
    let increments_equal = max_dev <= tol;

    let mut maps_equal = true;
    let mut forward: BTreeMap<SignedDirection, SignedDirection> = BTreeMap::new();
    let mut backward: BTreeMap<SignedDirection, SignedDirection> = BTreeMap::new();
    let mut relabel_ok = true;
    for (row1, row2) in g1.cells.iter().zip(&g2.cells) {
        for (c1, c2) in row1.iter().zip(row2) {
            let (Some(c1), Some(c2)) = (c1, c2) else {
                continue;
            };
            maps_equal &= c1 == c2;
            relabel_ok &= *forward.entry(*c1).or_insert(*c2) == *c2
                && *backward.entry(*c2).or_insert(*c1) == *c1;
        }
    }
    let aliased = !maps_equal && relabel_ok;

    Ok(MapCheckReport {
        increments_equal,
        maps_equal,
        aliased,
        max_increment_dev: max_dev,
    })
}
