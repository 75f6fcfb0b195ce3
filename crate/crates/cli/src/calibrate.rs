//! Calibration of the stochastic backend: re-derives the scaling-map
//! constants and the statistical rates from fresh replicas under the
//! configured seed, and records everything in a calibration report.

use kpzfp_core::lpp::{stationary_box, stationary_row_increments, ScalingMap};

use crate::artifacts::default_out_dir;
use crate::config::RunConfig;
use crate::error::Result;
use crate::lppstats::{
    border_interface_deviation, coalescence_rate, lattice_identity_replicas, scaled_value_stats,
};
use crate::manifest::RunManifest;

/// Reference mean of the limiting point-value fluctuation law.
pub const TW_GUE_MEAN: f64 = -1.771_086_8;

pub fn cmd_calibrate(rc: &RunConfig) -> Result<()> {
    let n = rc.lpp.n;
    let map = ScalingMap::new(n);
    let mut manifest = RunManifest::new(
        &rc.name,
        "calibrate",
        &format!("backend=lpp n={n} replicas={}", rc.replicas),
        &rc.raw,
    );

    manifest.record_constant("space_scale", map.space_scale());
    manifest.record_constant("height_scale", map.height_scale());
    manifest.record_constant("busemann_tolerance", 32.0 / map.height_scale());

    // point-value fluctuations against the limiting law
    let (mean, sd) = scaled_value_stats(rc.seed, n, rc.replicas)?;
    manifest.record_constant("point_value_mean", mean);
    manifest.record_constant("point_value_sd", sd);
    manifest.record_constant("tw_gue_mean_reference", TW_GUE_MEAN);
    manifest.record_constant("c_dl", mean - TW_GUE_MEAN);
    manifest.record_check(
        "calibrate/point-value",
        (mean - TW_GUE_MEAN).abs() < 1.0 && sd > 0.2 && sd < 3.0,
        Some(mean),
        "scaled point value near the limiting mean at this size",
    );

    // stationary boundary oracle: row increments are exponential with the
    // dual rate, so their mean pins the density dictionary
    let rho = 0.5;
    let stationary = stationary_box(rc.seed, rho, 400)?;
    let incs = stationary_row_increments(&stationary, 0)?;
    let inc_mean = incs.iter().sum::<f64>() / incs.len() as f64;
    let expected = 1.0 / (1.0 - rho);
    manifest.record_constant("stationary_increment_mean", inc_mean);
    manifest.record_constant("stationary_increment_expected", expected);
    manifest.record_check(
        "calibrate/stationary-oracle",
        (inc_mean - expected).abs() < 0.25,
        Some(inc_mean),
        "boundary increments match the dual-rate mean",
    );

    // exact lattice identities
    let identities = lattice_identity_replicas(rc.seed, rc.replicas, 60)?;
    manifest.record_constant(
        "identity_rate",
        (identities.additivity_exact.min(identities.superadditivity_exact))
            .min(identities.monotone_exact) as f64
            / identities.replicas as f64,
    );
    manifest.record_check(
        "calibrate/identities",
        identities.all_exact(),
        None,
        "additivity, superadditivity, and monotonicity exact per replica",
    );

    // geodesic coalescence
    let coalescence = coalescence_rate(rc.seed, rc.replicas, 50, 50)?;
    manifest.record_constant("coalescence_rate", coalescence);
    manifest.record_check(
        "calibrate/coalescence",
        coalescence >= 0.95,
        Some(coalescence),
        "adjacent-root geodesics merge within fifty steps",
    );

    // border vs interface deviation
    let border = border_interface_deviation(rc.seed, n, rc.replicas, rc.lpp.horizon)?;
    manifest.record_constant("border_within_two_cells_rate", border.rate());
    manifest.record_constant("border_max_deviation_cells", border.max_dev_cells);
    manifest.record_check(
        "calibrate/border-interface",
        border.rate() >= 0.9,
        Some(border.rate()),
        "measured border within two cells of the bisected interface",
    );

    for c in &manifest.checks {
        println!("{}", c.render());
    }
    for (k, v) in &manifest.constants {
        println!("constant: {k} = {v}");
    }
    let out = default_out_dir(rc);
    manifest.write(&out.join("calibration.txt"))?;
    Ok(())
}
