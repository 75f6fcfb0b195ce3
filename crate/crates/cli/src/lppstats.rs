//! Statistical machinery for the stochastic backend: windowed Busemann
//! tables with one shared far target per color (cheap per-cell queries),
//! argmax color grids, exact lattice identity replicas, geodesic coalescence
//! rates, and border-vs-interface deviation measurements.

use std::collections::BTreeMap;

use kpzfp_core::busemann::{BusemannField, BusemannSample};
use kpzfp_core::colormap::{ColorGrid, ColorGridSpec, Run, SliceRuns};
use kpzfp_core::error::KpzError;
use kpzfp_core::interfaces::tau_two_colors;
use kpzfp_core::lpp::{
    derive_seed, geodesic_trace, last_passage, sample_weights, BackwardTable, LatticeBounds,
    ScalingMap,
};
use kpzfp_core::weight::WeightFunction;
use kpzfp_core::{SignedDirection, SpaceTimePoint};

use crate::error::Result;

fn axis(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|k| lo + k as f64 * step).collect()
}

/// Busemann field over a fixed window backed by one precomputed backward
/// table per color (shared far target along that color's characteristic).
/// Queries cost two table lookups; the tables own their values, so the
/// weight box can be dropped after construction.
pub struct TableBusemann {
    map: ScalingMap,
    tables: BTreeMap<SignedDirection, BackwardTable>,
    pub horizon: i64,
}

impl TableBusemann {
    /// Build tables covering the spatial window [x_lo, x_hi] x [t_lo, t_hi]
    /// plus the origin, with far targets `horizon` lattice steps beyond it.
    pub fn build(
        seed: u64,
        n: u32,
        colors: &[SignedDirection],
        x_lo: f64,
        x_hi: f64,
        t_lo: f64,
        t_hi: f64,
        horizon: i64,
    ) -> Result<Self> {
        let map = ScalingMap::new(n);
        let mut i_lo = i64::MAX;
        let mut i_hi = i64::MIN;
        let mut j_lo = i64::MAX;
        let mut j_hi = i64::MIN;
        for &x in &[x_lo, x_hi, 0.0] {
            for &t in &[t_lo, t_hi, 0.0] {
                let (i, j) = map.to_lattice(SpaceTimePoint::new(x, t));
                i_lo = i_lo.min(i);
                i_hi = i_hi.max(i);
                j_lo = j_lo.min(j);
                j_hi = j_hi.max(j);
            }
        }
        let lo = (i_lo - 2, j_lo - 2);
        let base = (i_hi + 2, j_hi + 2);
        let mut targets = Vec::with_capacity(colors.len());
        let mut bounds = LatticeBounds::new(lo.0, base.0, lo.1, base.1);
        for &xi in colors {
            let (di, dj) = map.characteristic(map.rho(xi.eta));
            let v = (
                base.0 + (di * horizon as f64).round() as i64,
                base.1 + (dj * horizon as f64).round() as i64,
            );
            bounds.i_max = bounds.i_max.max(v.0);
            bounds.j_max = bounds.j_max.max(v.1);
            targets.push((xi, v));
        }
        let lattice = sample_weights(seed, bounds)?;
        let mut tables = BTreeMap::new();
        for (xi, v) in targets {
            tables.insert(xi, BackwardTable::build(&lattice, lo, v)?);
        }
        Ok(Self {
            map,
            tables,
            horizon,
        })
    }
}

impl BusemannField for TableBusemann {
    fn eval(
        &self,
        xi: SignedDirection,
        p: SpaceTimePoint,
        q: SpaceTimePoint,
    ) -> kpzfp_core::Result<BusemannSample> {
        let table = self
            .tables
            .get(&xi)
            .ok_or_else(|| KpzError::Invalid(format!("no table for color {xi}")))?;
        let pl = self.map.to_lattice(p);
        let ql = self.map.to_lattice(q);
        let diff = table.get(pl)? - table.get(ql)?;
        let drift = 2.0 * ((ql.0 - pl.0) + (ql.1 - pl.1)) as f64;
        Ok(BusemannSample {
            value: (diff - drift) / self.map.height_scale(),
            stabilized: true,
        })
    }

    fn tolerance(&self) -> f64 {
        32.0 / self.map.height_scale()
    }

    fn envelope_coefficients(&self, p: SpaceTimePoint, q: SpaceTimePoint) -> (f64, f64, f64) {
        (
            16.0 * self.tolerance(),
            2.0 * (q.x - p.x).abs() + 1.0,
            (q.t - p.t).abs() + 1.0,
        )
    }

    fn descriptor(&self) -> String {
        format!(
            "busemann=lpp-table n={} horizon={} colors={}",
            self.map.n,
            self.horizon,
            self.tables.len()
        )
    }
}

/// Argmax color grid over a window on the stochastic backend: each cell takes
/// the color maximizing W^xi(anchor; cell) + phi(xi) from the shared tables.
/// Exact ties and cells breaking left-to-right color order are marked
/// ambiguous; the result reuses the deterministic grid structure.
pub fn lpp_color_grid(
    field: &TableBusemann,
    phi: &WeightFunction,
    spec: &ColorGridSpec,
) -> Result<ColorGrid> {
    let xs = axis(spec.x_min, spec.x_max, spec.dx);
    let times = axis(spec.t_min, spec.t_max, spec.dt);
    let anchor = phi.anchor;
    let atoms: Vec<(SignedDirection, f64)> = phi.atoms().map(|(x, v)| (*x, *v)).collect();

    let mut cells: Vec<Vec<Option<SignedDirection>>> = Vec::with_capacity(times.len());
    let mut ambiguous = 0usize;
    for &t in &times {
        let mut row = Vec::with_capacity(xs.len());
        let mut prev: Option<SignedDirection> = None;
        for &x in &xs {
            let q = SpaceTimePoint::new(x, t);
            let mut best: Option<(SignedDirection, f64)> = None;
            let mut tie = false;
            for &(xi, c) in &atoms {
                let v = field.eval(xi, anchor, q)?.value + c;
                match best {
                    None => best = Some((xi, v)),
                    Some((_, bv)) if v > bv => {
                        best = Some((xi, v));
                        tie = false;
                    }
                    Some((_, bv)) if v == bv => tie = true,
                    _ => {}
                }
            }
            let mut cell = best.map(|(xi, _)| xi).filter(|_| !tie);
            // enforce the left-to-right color order; off-order cells carry
            // no usable information and count as ambiguous
            if let (Some(c), Some(p)) = (cell, prev) {
                if c < p {
                    cell = None;
                }
            }
            if let Some(c) = cell {
                prev = Some(c);
            } else {
                ambiguous += 1;
            }
            row.push(cell);
        }
        cells.push(row);
    }
    let ambiguous_fraction = ambiguous as f64 / (times.len() * xs.len()) as f64;

    let mut slices = Vec::with_capacity(times.len());
    for (ti, row) in cells.iter().enumerate() {
        slices.push(encode_runs(times[ti], &xs, row));
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

fn encode_runs(t: f64, xs: &[f64], row: &[Option<SignedDirection>]) -> SliceRuns {
    let mut runs: Vec<Run> = Vec::new();
    for (i, cell) in row.iter().enumerate() {
        let Some(c) = cell else { continue };
        match runs.last_mut() {
            Some(last) if last.color == *c => {
                last.last_cell = xs[i];
                last.cells += 1;
            }
            _ => runs.push(Run {
                color: *c,
                first_cell: xs[i],
                last_cell: xs[i],
                cells: 1,
                a: None,
                b: None,
            }),
        }
    }
    for k in 1..runs.len() {
        let border = 0.5 * (runs[k - 1].last_cell + runs[k].first_cell);
        runs[k - 1].b = Some(border);
        runs[k].a = Some(border);
    }
    SliceRuns { t, runs }
}

/// Later-slice colors missing from the previous slice (window-cut runs
/// exempt): the backward-nestedness violation count.
pub fn nestedness_violations(grid: &ColorGrid) -> usize {
    let mut violations = 0;
    for w in grid.slices.windows(2) {
        let earlier: std::collections::BTreeSet<SignedDirection> =
            w[0].colors().into_iter().collect();
        for run in &w[1].runs {
            let lateral = run.a.is_none() || run.b.is_none();
            if !earlier.contains(&run.color) && !lateral {
                violations += 1;
            }
        }
    }
    violations
}

/// Exact lattice identity rates over independent replicas: Busemann
/// additivity with a shared far target, DP superadditivity through sampled
/// midpoints, and increment monotonicity as the far target rotates through
/// the directions of increasing density.
#[derive(Debug, Clone, Copy)]
pub struct IdentityReport {
    pub replicas: usize,
    pub additivity_exact: usize,
    pub superadditivity_exact: usize,
    pub monotone_exact: usize,
}

impl IdentityReport {
    pub fn all_exact(&self) -> bool {
        self.additivity_exact == self.replicas
            && self.superadditivity_exact == self.replicas
            && self.monotone_exact == self.replicas
    }
}

pub fn lattice_identity_replicas(seed: u64, replicas: usize, size: i64) -> Result<IdentityReport> {
    assert!(size >= 24, "identity box too small");
    let mut report = IdentityReport {
        replicas,
        additivity_exact: 0,
        superadditivity_exact: 0,
        monotone_exact: 0,
    };
    let tol = 1e-9;
    for rep in 0..replicas {
        let lattice = sample_weights(
            derive_seed(seed, rep as u64),
            LatticeBounds::new(0, size, 0, size),
        )?;

        // additivity through a shared far target: telescoping differences
        let v = (size, size);
        let table = BackwardTable::build(&lattice, (0, 0), v)?;
        let (p, q, r) = ((0, 0), (3, 1), (7, 6));
        let d_pq = table.get(p)? - table.get(q)?;
        let d_qr = table.get(q)? - table.get(r)?;
        let d_pr = table.get(p)? - table.get(r)?;
        if (d_pq + d_qr - d_pr).abs() <= tol {
            report.additivity_exact += 1;
        }

        // superadditivity with the endpoint-weight correction, all mids exact
        let g = last_passage(&lattice, (0, 0), v)?;
        let mut super_ok = true;
        for mid in [(size / 4, size / 2), (size / 2, size / 2), (size - 3, 2)] {
            let lhs = last_passage(&lattice, (0, 0), mid)?
                + last_passage(&lattice, mid, v)?
                - lattice.weight(mid.0, mid.1)?;
            super_ok &= g >= lhs - tol;
        }
        if super_ok {
            report.superadditivity_exact += 1;
        }

        // crossing monotonicity: the e1-edge difference G(p;v) - G(p+e1;v)
        // is nondecreasing as the far target steps by (-e1, +e2)
        let k_max = 8i64;
        let mut last = f64::NEG_INFINITY;
        let mut mono_ok = true;
        for k in 0..=k_max {
            let vk = (size - k, size - k_max + k);
            let t = BackwardTable::build(&lattice, (0, 0), vk)?;
            let b = t.get((0, 0))? - t.get((1, 0))?;
            mono_ok &= b >= last - tol;
            last = b;
        }
        if mono_ok {
            report.monotone_exact += 1;
        }
    }
    Ok(report)
}

/// Fraction of replicas in which the leftmost geodesics from two roots one
/// lattice unit off the diagonal, traced to a shared far target at
/// `2 * depth` lattice steps, first meet within `merge_by` steps of the roots.
pub fn coalescence_rate(seed: u64, replicas: usize, depth: i64, merge_by: i64) -> Result<f64> {
    let mut merged = 0usize;
    for rep in 0..replicas {
        let lattice = sample_weights(
            derive_seed(seed, rep as u64),
            LatticeBounds::new(0, depth, 0, depth),
        )?;
        let v = (depth, depth);
        let path1 = geodesic_trace(&lattice, (0, 1), v)?;
        let path2 = geodesic_trace(&lattice, (1, 0), v)?;
        let set1: std::collections::BTreeSet<(i64, i64)> = path1.into_iter().collect();
        let first = path2.into_iter().find(|site| set1.contains(site));
        if let Some((i, j)) = first {
            if i + j <= merge_by + 1 {
                merged += 1;
            }
        }
    }
    Ok(merged as f64 / replicas as f64)
}

/// Per-slice deviation between the measured two-color border (argmax flip on
/// the cell grid) and the bisected interface position, in cells.
#[derive(Debug, Clone, Copy)]
pub struct BorderDeviationReport {
    pub slices_checked: usize,
    pub within_two_cells: usize,
    pub max_dev_cells: f64,
}

impl BorderDeviationReport {
    pub fn rate(&self) -> f64 {
        if self.slices_checked == 0 {
            return 0.0;
        }
        self.within_two_cells as f64 / self.slices_checked as f64
    }
}

/// Measure the border deviation for the symmetric two-color pair
/// eta = -0.5, +0.5 with zero constants, over `replicas` windows.
pub fn border_interface_deviation(
    seed: u64,
    n: u32,
    replicas: usize,
    horizon: i64,
) -> Result<BorderDeviationReport> {
    let xi1 = SignedDirection::minus(-0.5);
    let xi2 = SignedDirection::minus(0.5);
    let dx = 0.125;
    let sweep = 2.0;
    let times = [-0.25, -0.15, -0.05, 0.05, 0.15, 0.25];
    let mut report = BorderDeviationReport {
        slices_checked: 0,
        within_two_cells: 0,
        max_dev_cells: 0.0,
    };
    for rep in 0..replicas {
        let field = TableBusemann::build(
            derive_seed(seed, rep as u64),
            n,
            &[xi1, xi2],
            -sweep - 4.0 * dx,
            sweep + 4.0 * dx,
            times[0],
            *times.last().unwrap(),
            horizon,
        )?;
        let origin = SpaceTimePoint::new(0.0, 0.0);
        for &t in &times {
            // measured border: just past the last cell where the xi1 term
            // still wins, matching the bisection's convention
            let mut last_low: Option<f64> = None;
            let mut low_everywhere = true;
            let steps = (2.0 * sweep / dx).round() as i64;
            for k in 0..=steps {
                let x = -sweep + k as f64 * dx;
                let q = SpaceTimePoint::new(x, t);
                let v1 = field.eval(xi1, origin, q)?.value;
                let v2 = field.eval(xi2, origin, q)?.value;
                if v2 <= v1 {
                    last_low = Some(x + 0.5 * dx);
                } else if k == steps {
                    low_everywhere = false;
                }
            }
            // skip slices whose border sits outside the sweep
            let Some(border) = last_low.filter(|_| !low_everywhere) else {
                continue;
            };
            let tau = match tau_two_colors(&field, xi1, xi2, 0.0, 0.0, t, sweep) {
                Ok(tau) => tau,
                Err(KpzError::SweepTooNarrow { .. }) => continue,
                Err(e) => return Err(e.into()),
            };
            let dev = (border - tau).abs() / dx;
            report.slices_checked += 1;
            report.max_dev_cells = report.max_dev_cells.max(dev);
            if dev <= 2.0 {
                report.within_two_cells += 1;
            }
        }
    }
    Ok(report)
}

/// Mean and standard deviation of the scaled point-to-point value at
/// (0,0) -> (0,1) over independent replicas.
pub fn scaled_value_stats(seed: u64, n: u32, replicas: usize) -> Result<(f64, f64)> {
    let map = ScalingMap::new(n);
    let target = map.to_lattice(SpaceTimePoint::new(0.0, 1.0));
    let center = 2.0 * ((target.0 + 1) + (target.1 + 1)) as f64;
    let mut samples = Vec::with_capacity(replicas);
    for rep in 0..replicas {
        let lattice = sample_weights(
            derive_seed(seed, rep as u64),
            LatticeBounds::new(0, target.0, 0, target.1),
        )?;
        let g = last_passage(&lattice, (0, 0), target)?;
        samples.push((g - center) / map.height_scale());
    }
    let mean = samples.iter().sum::<f64>() / replicas as f64;
    let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>()
        / (replicas - 1).max(1) as f64;
    Ok((mean, var.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_replicas_all_exact() {
        let r = lattice_identity_replicas(11, 10, 40).unwrap();
        assert!(r.all_exact(), "{r:?}");
    }

    #[test]
    fn coalescence_mostly_fast() {
        let rate = coalescence_rate(5, 30, 60, 30).unwrap();
        assert!(rate >= 0.8, "rate {rate}");
    }

    #[test]
    fn table_busemann_additivity_and_window_grid() {
        let colors = [
            SignedDirection::minus(-1.0),
            SignedDirection::minus(0.0),
            SignedDirection::minus(1.0),
        ];
        let field = TableBusemann::build(21, 24, &colors, -2.0, 2.0, -0.6, 0.2, 160).unwrap();
        let p = SpaceTimePoint::new(-0.5, -0.4);
        let q = SpaceTimePoint::new(0.25, -0.1);
        let r = SpaceTimePoint::new(1.0, 0.1);
        for &xi in &colors {
            let a = field.eval(xi, p, q).unwrap().value;
            let b = field.eval(xi, q, r).unwrap().value;
            let c = field.eval(xi, p, r).unwrap().value;
            assert!((a + b - c).abs() < 1e-9);
        }

        let phi = WeightFunction::flat([-1.0, 0.0, 1.0]);
        let spec = ColorGridSpec::new(-2.0, 2.0, 0.25, -0.6, 0.2, 0.2);
        let grid = lpp_color_grid(&field, &phi, &spec).unwrap();
        assert!(grid.ambiguous_fraction <= 0.05, "{}", grid.ambiguous_fraction);
        // runs are monotone by construction; slices are nonempty
        for s in &grid.slices {
            assert!(!s.runs.is_empty());
            for w in s.runs.windows(2) {
                assert!(w[0].color < w[1].color);
            }
        }
    }

    #[test]
    fn scaled_value_stats_finite() {
        let (mean, sd) = scaled_value_stats(7, 24, 20).unwrap();
        assert!(mean.is_finite() && sd > 0.0);
        // centered to the shape function: order-one fluctuation scale
        assert!(mean.abs() < 5.0 && sd < 5.0, "mean {mean}, sd {sd}");
    }
}

#[cfg(test)]
mod window_tests {
    use super::*;
    use kpzfp_core::colormap::ColorGridSpec;

    #[test]
    fn three_color_window_structure() {
        let colors = [
            SignedDirection::minus(-1.0),
            SignedDirection::minus(0.0),
            SignedDirection::minus(1.0),
        ];
        let spec = ColorGridSpec::new(-1.5, 1.5, 0.125, -1.5, 0.25, 0.25);
        let field = TableBusemann::build(
            1, 200, &colors, spec.x_min, spec.x_max, spec.t_min, spec.t_max, 2500,
        )
        .unwrap();
        let phi = WeightFunction::flat([-1.0, 0.0, 1.0]);
        let grid = lpp_color_grid(&field, &phi, &spec).unwrap();
        assert!(
            grid.ambiguous_fraction <= 0.01,
            "ambiguous {}",
            grid.ambiguous_fraction
        );
        assert_eq!(nestedness_violations(&grid), 0);
        // the middle color is visible early and dies inside the window
        assert_eq!(grid.slices[0].colors().len(), 3);
        let middle = SignedDirection::minus(0.0);
        let record = grid.extinction(middle).unwrap();
        assert!(!record.survives(), "middle survives to the top slice");
    }
}
