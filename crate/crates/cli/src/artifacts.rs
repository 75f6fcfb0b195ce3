//! The simulate pipeline: build the configured backend, color the window,
//! and export the six run artifacts (color raster, heights, Busemann table,
//! geodesics, interfaces, shock tree) plus the manifest.

use std::fmt::Write as _;
use std::path::PathBuf;

use kpzfp_core::colormap::{build_color_grid, shock_tree, ColorGrid, ShockTree};
use kpzfp_core::eternal::{extract_constants, rebase_constants, EternalSolutionField};
use kpzfp_core::geodesics::{geometric_partition, track_backward, Side};
use kpzfp_core::interfaces::tau_two_colors;
use kpzfp_core::{SignedDirection, SpaceTimePoint};

use crate::backend::BackendInstance;
use crate::config::RunConfig;
use crate::error::Result;
use crate::manifest::RunManifest;

pub const ARTIFACTS: [&str; 6] = [
    "colors.csv",
    "heights.csv",
    "busemann.csv",
    "geodesics.csv",
    "interfaces.csv",
    "shocks.txt",
];

pub struct SimulateOutcome {
    pub out_dir: PathBuf,
    /// (file name, sha256) for every artifact, manifest excluded.
    pub files: Vec<(String, String)>,
}

fn color_str(xi: SignedDirection) -> String {
    format!("{}{}", xi.eta, xi.sign)
}

pub fn default_out_dir(rc: &RunConfig) -> PathBuf {
    rc.out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("runs").join(&rc.name))
}

/// Run the full simulate pipeline and write all artifacts.
pub fn cmd_simulate(rc: &RunConfig) -> Result<SimulateOutcome> {
    let out = default_out_dir(rc);
    let backend = BackendInstance::build(rc)?;
    let field = backend.busemann();
    let kernel = backend.kernel();
    let b = EternalSolutionField::new(rc.phi.clone(), field.as_ref())?;
    let reference = rc.reference_colors();
    let grid = build_color_grid(&b, kernel.as_ref(), &rc.colorgrid, &reference, &rc.scan)?;

    let mut manifest = RunManifest::new(&rc.name, "simulate", &backend.descriptor(), &rc.raw);
    manifest.record_check(
        "colormap/ambiguity",
        grid.ambiguous_fraction <= rc.colorgrid.max_ambiguous_fraction,
        Some(grid.ambiguous_fraction),
        "fraction of ambiguous cells",
    );
    manifest.record_check("colormap/merge-only", grid.merge_only(), None, "");

    manifest.emit_file(&out.join("colors.csv"), colors_csv(&grid).as_bytes())?;
    manifest.emit_file(&out.join("heights.csv"), heights_csv(&b, &grid)?.as_bytes())?;
    manifest.emit_file(
        &out.join("busemann.csv"),
        busemann_csv(&b, &grid, &reference).as_bytes(),
    )?;
    manifest.emit_file(
        &out.join("geodesics.csv"),
        geodesics_csv(&b, kernel.as_ref(), rc, &grid)?.as_bytes(),
    )?;
    manifest.emit_file(
        &out.join("interfaces.csv"),
        interfaces_csv(&b, &grid)?.as_bytes(),
    )?;
    let tree = shock_tree(&grid)?;
    manifest.emit_file(
        &out.join("shocks.txt"),
        shocks_text(&grid, &tree).as_bytes(),
    )?;

    let files = manifest
        .files
        .iter()
        .map(|(p, h)| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                h.clone(),
            )
        })
        .collect();
    manifest.write(&out.join("manifest.txt"))?;
    Ok(SimulateOutcome {
        out_dir: out,
        files,
    })
}

/// Color raster, one row per unambiguous cell: t,x,eta,sign.
fn colors_csv(grid: &ColorGrid) -> String {
    let mut s = String::from("t,x,eta,sign\n");
    for (ti, row) in grid.cells.iter().enumerate() {
        for (xi_idx, cell) in row.iter().enumerate() {
            if let Some(c) = cell {
                writeln!(
                    s,
                    "{},{},{},{}",
                    grid.times[ti], grid.xs[xi_idx], c.eta, c.sign
                )
                .unwrap();
            }
        }
    }
    s
}

/// Height field over the window cells: x,t,value,argmax,color.
fn heights_csv(b: &EternalSolutionField<'_>, grid: &ColorGrid) -> Result<String> {
    let mut s = String::from("x,t,value,argmax,color\n");
    for (ti, row) in grid.cells.iter().enumerate() {
        for (xi_idx, cell) in row.iter().enumerate() {
            let (x, t) = (grid.xs[xi_idx], grid.times[ti]);
            let sample = b.sample(x, t)?;
            let argmax = sample.argmax.map(color_str).unwrap_or_default();
            let color = cell.map(color_str).unwrap_or_default();
            writeln!(s, "{x},{t},{},{argmax},{color}", sample.value).unwrap();
        }
    }
    Ok(s)
}

/// Busemann evaluations from a fixed base point at the window bottom:
/// xi,p_x,p_t,q_x,q_t,value,stabilized. Rows the backend cannot evaluate
/// (outside its box or horizon) are omitted.
fn busemann_csv(
    b: &EternalSolutionField<'_>,
    grid: &ColorGrid,
    reference: &[SignedDirection],
) -> String {
    let mut s = String::from("xi,p_x,p_t,q_x,q_t,value,stabilized\n");
    let p = SpaceTimePoint::new(0.0, grid.spec.t_min);
    let probes = [grid.spec.x_min, 0.0, grid.spec.x_max];
    for &xi in reference {
        for &t in &grid.times {
            for &x in &probes {
                let q = SpaceTimePoint::new(x, t);
                if let Ok(sample) = b.field.eval(xi, p, q) {
                    writeln!(
                        s,
                        "{},{},{},{},{},{},{}",
                        color_str(xi),
                        p.x,
                        p.t,
                        q.x,
                        q.t,
                        sample.value,
                        sample.stabilized
                    )
                    .unwrap();
                }
            }
        }
    }
    s
}

/// Leftmost backward geodesics from the bottom-slice run midpoints:
/// root_x,root_t,side,s,g.
fn geodesics_csv(
    b: &EternalSolutionField<'_>,
    kernel: &dyn kpzfp_core::landscape::LandscapeKernel,
    rc: &RunConfig,
    grid: &ColorGrid,
) -> Result<String> {
    let mut s = String::from("root_x,root_t,side,s,g\n");
    let bottom = &grid.slices[0];
    let partition = geometric_partition(bottom.t, grid.spec.dt, 3);
    for run in &bottom.runs {
        let root = SpaceTimePoint::new(run.midpoint(), bottom.t);
        let g = track_backward(b, kernel, root, &partition, Side::Leftmost, &rc.scan)?;
        for (i, &time) in g.times.iter().enumerate() {
            writeln!(
                s,
                "{},{},leftmost,{},{}",
                root.x, root.t, time, g.positions[i]
            )
            .unwrap();
        }
    }
    Ok(s)
}

/// Sweep radius generous enough for every in-window two-color interface.
fn interface_sweep(grid: &ColorGrid, max_eta: f64) -> f64 {
    let span = grid.spec.x_min.abs().max(grid.spec.x_max.abs());
    let t_reach = grid.spec.t_min.abs().max(grid.spec.t_max.abs()) + 1.0;
    span + max_eta * t_reach + 2.0
}

/// Two-color interfaces of each adjacent pair of the bottom slice, from
/// constants extracted there and rebased to the origin: xi1,xi2,t,tau.
/// Times at which a pair's interface cannot be bracketed are omitted.
fn interfaces_csv(b: &EternalSolutionField<'_>, grid: &ColorGrid) -> Result<String> {
    let mut s = String::from("xi1,xi2,t,tau\n");
    let coloring = grid.slice_coloring(0)?;
    let extracted = extract_constants(&coloring, b.field)?;
    let constants = rebase_constants(&extracted, b.field, SpaceTimePoint::new(0.0, 0.0))?;
    let max_eta = constants.max_abs_eta();
    let sweep = interface_sweep(grid, max_eta);
    for pair in coloring.colors.windows(2) {
        let (x1, x2) = (pair[0], pair[1]);
        let (c1, c2) = (
            constants.get(&x1).unwrap_or(0.0),
            constants.get(&x2).unwrap_or(0.0),
        );
        for &t in &grid.times {
            if let Ok(tau) = tau_two_colors(b.field, x1, x2, c1, c2, t, sweep) {
                writeln!(s, "{},{},{t},{tau}", color_str(x1), color_str(x2)).unwrap();
            }
        }
    }
    Ok(s)
}

/// JSON-like shock tree: nodes with positions and flanks, edges with their
/// time spans and sampled border polylines.
pub fn shocks_text(grid: &ColorGrid, tree: &ShockTree) -> String {
    let opt = |v: Option<usize>| v.map_or("null".to_string(), |k| k.to_string());
    let mut s = String::from("{\n  \"nodes\": [\n");
    for (i, n) in tree.nodes.iter().enumerate() {
        writeln!(
            s,
            "    {{\"color\": \"{}\", \"t\": {}, \"x\": {}, \"flank\": [\"{}\", \"{}\"]}}{}",
            color_str(n.color),
            n.t,
            n.x,
            color_str(n.flank.0),
            color_str(n.flank.1),
            if i + 1 < tree.nodes.len() { "," } else { "" }
        )
        .unwrap();
    }
    s.push_str("  ],\n  \"edges\": [\n");
    for (i, e) in tree.edges.iter().enumerate() {
        let polyline = border_polyline(grid, e.left, e.right)
            .into_iter()
            .map(|(t, x)| format!("[{t}, {x}]"))
            .collect::<Vec<_>>()
            .join(", ");
        writeln!(
            s,
            "    {{\"left\": \"{}\", \"right\": \"{}\", \"t_lo\": {}, \"t_hi\": {}, \
             \"lower_node\": {}, \"upper_node\": {}, \"polyline\": [{polyline}]}}{}",
            color_str(e.left),
            color_str(e.right),
            e.t_lo,
            e.t_hi,
            opt(e.lower_node),
            opt(e.upper_node),
            if i + 1 < tree.edges.len() { "," } else { "" }
        )
        .unwrap();
    }
    s.push_str("  ]\n}\n");
    s
}

/// Measured (t, border) samples of the shared border of an adjacent pair.
pub fn border_polyline(
    grid: &ColorGrid,
    left: SignedDirection,
    right: SignedDirection,
) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for slice in &grid.slices {
        for w in slice.runs.windows(2) {
            if w[0].color == left && w[1].color == right {
                if let Some(border) = w[0].b {
                    out.push((slice.t, border));
                }
            }
        }
    }
    out
}
