//! Plot export: turn a finished run directory into plot-ready CSVs —
//! a raster of colored cells, one border polyline per adjacent color pair
//! seen on at least two slices, and one marker per extinct color. Re-running
//! on the same directory reproduces identical files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};
use crate::manifest::write_atomic;

/// One parsed raster cell: (t, x, color label).
type Cell = (f64, f64, String);

fn parse_colors_csv(text: &str) -> Result<Vec<Cell>> {
    let mut cells = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 || line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 4 {
            return Err(CliError::Io(format!(
                "colors.csv line {}: expected 4 columns, got {}",
                lineno + 1,
                parts.len()
            )));
        }
        let t: f64 = parts[0]
            .parse()
            .map_err(|e| CliError::Io(format!("colors.csv line {}: {e}", lineno + 1)))?;
        let x: f64 = parts[1]
            .parse()
            .map_err(|e| CliError::Io(format!("colors.csv line {}: {e}", lineno + 1)))?;
        cells.push((t, x, format!("{}{}", parts[2], parts[3])));
    }
    Ok(cells)
}

/// Slices reassembled from the raster: time -> cells sorted by x.
fn slices_of(cells: &[Cell]) -> Vec<(f64, Vec<(f64, String)>)> {
    let mut by_t: BTreeMap<u64, (f64, Vec<(f64, String)>)> = BTreeMap::new();
    for (t, x, c) in cells {
        by_t
            .entry(t.to_bits())
            .or_insert_with(|| (*t, Vec::new()))
            .1
            .push((*x, c.clone()));
    }
    let mut out: Vec<(f64, Vec<(f64, String)>)> = by_t.into_values().collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (_, row) in &mut out {
        row.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    out
}

/// Export plot files for a finished run. Returns the written paths.
pub fn cmd_export_plots(run_dir: &Path) -> Result<Vec<PathBuf>> {
    let colors_path = run_dir.join("colors.csv");
    if !colors_path.is_file() {
        return Err(CliError::Io(format!(
            "no colors.csv in {}: not a finished run directory",
            run_dir.display()
        )));
    }
    let cells = parse_colors_csv(&std::fs::read_to_string(&colors_path)?)?;
    if cells.is_empty() {
        return Err(CliError::Io("colors.csv contains no cells".into()));
    }
    let slices = slices_of(&cells);
    let mut written = Vec::new();

    // raster: x,t,color
    let mut raster = String::from("x,t,color\n");
    for (t, row) in &slices {
        for (x, c) in row {
            writeln!(raster, "{x},{t},{c}").unwrap();
        }
    }
    let raster_path = run_dir.join("plot_raster.csv");
    write_atomic(&raster_path, raster.as_bytes())?;
    written.push(raster_path);

    // borders: midpoint between adjacent cells of different colors,
    // one polyline per pair observed on >= 2 slices
    let mut borders: BTreeMap<(String, String), Vec<(f64, f64)>> = BTreeMap::new();
    for (t, row) in &slices {
        for w in row.windows(2) {
            let ((x1, c1), (x2, c2)) = (&w[0], &w[1]);
            if c1 != c2 {
                borders
                    .entry((c1.clone(), c2.clone()))
                    .or_default()
                    .push((*t, 0.5 * (x1 + x2)));
            }
        }
    }
    for ((left, right), polyline) in &borders {
        let distinct_times = {
            let mut ts: Vec<u64> = polyline.iter().map(|(t, _)| t.to_bits()).collect();
            ts.dedup();
            ts.len()
        };
        if distinct_times < 2 {
            continue;
        }
        let mut s = String::from("t,x\n");
        for (t, x) in polyline {
            writeln!(s, "{t},{x}").unwrap();
        }
        let path = run_dir.join(format!("plot_border_{left}_{right}.csv"));
        write_atomic(&path, s.as_bytes())?;
        written.push(path);
    }

    // extinction markers: one row per color absent from the final slice,
    // placed at the midpoint of its last surviving run
    let final_colors: std::collections::BTreeSet<&String> =
        slices.last().unwrap().1.iter().map(|(_, c)| c).collect();
    let mut markers = String::from("color,t,x\n");
    let mut seen: std::collections::BTreeSet<String> = Default::default();
    for (t, row) in slices.iter().rev() {
        for w in row.chunk_by(|a, b| a.1 == b.1) {
            let color = &w[0].1;
            if final_colors.contains(color) || seen.contains(color) {
                continue;
            }
            seen.insert(color.clone());
            let mid = 0.5 * (w[0].0 + w[w.len() - 1].0);
            writeln!(markers, "{color},{t},{mid}").unwrap();
        }
    }
    let markers_path = run_dir.join("plot_extinctions.csv");
    write_atomic(&markers_path, markers.as_bytes())?;
    written.push(markers_path);

    Ok(written)
}
