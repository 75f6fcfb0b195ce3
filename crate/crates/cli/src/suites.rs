//! The verification suite registry. Each suite appends named check lines;
//! any failed check turns the whole verify run into a verification failure.

use kpzfp_core::busemann::{
    check_additivity, check_monotonicity, check_slope, ParabolicBusemann,
};
use kpzfp_core::colormap::{border_interface_check, build_color_grid, ColorGridSpec};
use kpzfp_core::eternal::{
    check_eternal, extract_constants, growth_rate_probe, quadratic_envelope_check,
    rebase_constants, semigroup_check, EternalSolutionField,
};
use kpzfp_core::interfaces::{crossing_check, tau_two_colors, TwoColorSolution};
use kpzfp_core::landscape::ParabolicBackend;
use kpzfp_core::weight::{finiteness_gate, TailDescriptor, WeightFunction};
use kpzfp_core::{KpzError, SignedDirection, SpaceTimePoint};

use crate::backend::BackendInstance;
use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::lppstats::{
    border_interface_deviation, lattice_identity_replicas, lpp_color_grid, nestedness_violations,
    TableBusemann,
};
use crate::manifest::{CheckLine, RunManifest};

pub const SUITES: [&str; 9] = [
    "busemann-props",
    "semigroup",
    "interfaces",
    "crossing",
    "colormap",
    "extinction",
    "reconstruction",
    "growth",
    "finiteness",
];

const PARABOLIC_TOL: f64 = 1e-9;

fn check(out: &mut Vec<CheckLine>, name: &str, pass: bool, residual: Option<f64>, detail: &str) {
    out.push(CheckLine {
        name: name.to_string(),
        pass,
        residual,
        detail: detail.to_string(),
    });
}

/// Expand and validate the configured suite list against the registry.
pub fn select_suites(requested: &[String]) -> Result<Vec<&'static str>> {
    if requested.iter().any(|s| s == "all") {
        return Ok(SUITES.to_vec());
    }
    let mut out = Vec::new();
    for name in requested {
        match SUITES.iter().find(|s| *s == name) {
            Some(s) => out.push(*s),
            None => {
                return Err(CliError::Config(format!(
                    "unknown suite '{name}' (known: {})",
                    SUITES.join(", ")
                )))
            }
        }
    }
    Ok(out)
}

/// Run the selected suites, print one line per check, optionally write a
/// report, and fail (verification failure) if any check failed.
pub fn cmd_verify(rc: &RunConfig) -> Result<Vec<CheckLine>> {
    let selected = select_suites(&rc.suites)?;
    let backend = BackendInstance::build(rc)?;
    let mut checks = Vec::new();
    for suite in &selected {
        run_suite(suite, rc, &backend, &mut checks)?;
    }
    for c in &checks {
        println!("{}", c.render());
    }
    if let Some(out) = &rc.out_dir {
        let mut manifest = RunManifest::new(&rc.name, "verify", &backend.descriptor(), &rc.raw);
        manifest.checks = checks.clone();
        manifest.write(&out.join("verify_report.txt"))?;
    }
    let failed: Vec<&str> = checks
        .iter()
        .filter(|c| !c.pass)
        .map(|c| c.name.as_str())
        .collect();
    if failed.is_empty() {
        Ok(checks)
    } else {
        Err(CliError::Verify(format!(
            "{} of {} checks failed: {}",
            failed.len(),
            checks.len(),
            failed.join(", ")
        )))
    }
}

fn run_suite(
    suite: &str,
    rc: &RunConfig,
    backend: &BackendInstance,
    checks: &mut Vec<CheckLine>,
) -> Result<()> {
    match suite {
        "busemann-props" => suite_busemann_props(rc, backend, checks),
        "semigroup" => suite_semigroup(rc, checks),
        "interfaces" => suite_interfaces(rc, backend, checks),
        "crossing" => suite_crossing(checks),
        "colormap" => suite_colormap(rc, backend, checks),
        "extinction" => suite_extinction(rc, backend, checks),
        "reconstruction" => suite_reconstruction(rc, checks),
        "growth" => suite_growth(checks),
        "finiteness" => suite_finiteness(rc, checks),
        _ => unreachable!("suite names validated by select_suites"),
    }
}

fn parabolic_colors(rc: &RunConfig) -> Vec<SignedDirection> {
    let mut colors = rc.reference_colors();
    if colors.len() < 2 {
        colors = vec![
            SignedDirection::minus(-1.0),
            SignedDirection::minus(0.0),
            SignedDirection::minus(1.0),
        ];
    }
    colors
}

fn suite_busemann_props(
    rc: &RunConfig,
    backend: &BackendInstance,
    checks: &mut Vec<CheckLine>,
) -> Result<()> {
    match backend {
        BackendInstance::Parabolic => {
            let field = ParabolicBusemann;
            let colors = parabolic_colors(rc);
            let points = [
                SpaceTimePoint::new(-1.0, -2.0),
                SpaceTimePoint::new(0.5, -0.5),
                SpaceTimePoint::new(2.0, 1.0),
            ];
            let mut worst_add: f64 = 0.0;
            for &xi in &colors {
                worst_add =
                    worst_add.max(check_additivity(&field, xi, points[0], points[1], points[2])?);
            }
            check(
                checks,
                "busemann-props/additivity",
                worst_add <= PARABOLIC_TOL,
                Some(worst_add),
                "max telescoping residual over configured colors",
            );

            let mut mono_ok = true;
            for pair in colors.windows(2) {
                for &(x, y) in &[(-1.5_f64, 0.5_f64), (0.0, 2.0), (-2.0, -0.25)] {
                    mono_ok &= check_monotonicity(&field, pair[0], pair[1], x, y, 0.0)?;
                }
            }
            check(
                checks,
                "busemann-props/monotonicity",
                mono_ok,
                None,
                "increments ordered across adjacent color pairs",
            );

            let mut worst_slope: f64 = 0.0;
            for &xi in &colors {
                let slope = check_slope(&field, xi, 0.0, 4.0)?;
                worst_slope = worst_slope.max((slope - 2.0 * xi.eta).abs());
            }
            check(
                checks,
                "busemann-props/slope",
                worst_slope <= PARABOLIC_TOL,
                Some(worst_slope),
                "asymptotic slope matches 2 eta",
            );
        }
        BackendInstance::Lpp { .. } => {
            let report = lattice_identity_replicas(rc.seed, rc.replicas, 60)?;
            let rate = |k: usize| k as f64 / report.replicas as f64;
            check(
                checks,
                "busemann-props/lattice-additivity",
                report.additivity_exact == report.replicas,
                Some(rate(report.additivity_exact)),
                "shared-target telescoping, exact per replica",
            );
            check(
                checks,
                "busemann-props/lattice-superadditivity",
                report.superadditivity_exact == report.replicas,
                Some(rate(report.superadditivity_exact)),
                "passage times superadditive through midpoints",
            );
            check(
                checks,
                "busemann-props/lattice-monotonicity",
                report.monotone_exact == report.replicas,
                Some(rate(report.monotone_exact)),
                "edge increments monotone under target rotation",
            );
        }
    }
    Ok(())
}

fn suite_semigroup(rc: &RunConfig, checks: &mut Vec<CheckLine>) -> Result<()> {
    let field = ParabolicBusemann;
    let kernel = ParabolicBackend;
    let x_grid = [-2.0, -1.0, -0.3, 0.0, 0.7, 1.5];
    let colors = parabolic_colors(rc);
    let mut worst: f64 = 0.0;
    for &xi in &colors {
        worst = worst.max(check_eternal(
            &field, &kernel, xi, 0.0, -1.0, 0.5, &x_grid, &rc.scan,
        )?);
    }
    check(
        checks,
        "semigroup/eternal",
        worst <= PARABOLIC_TOL,
        Some(worst),
        "evolved Busemann slice matches direct values",
    );

    let phi = WeightFunction::from_pairs(colors.iter().map(|&c| (c, rc.phi.get(&c).unwrap_or(0.0))));
    let residual = semigroup_check(&phi, &field, &kernel, -1.0, -0.25, 0.5, &x_grid, &rc.scan)?;
    check(
        checks,
        "semigroup/two-step",
        residual <= PARABOLIC_TOL,
        Some(residual),
        "s->r->t evolution matches direct variational value",
    );
    Ok(())
}

fn suite_interfaces(
    rc: &RunConfig,
    backend: &BackendInstance,
    checks: &mut Vec<CheckLine>,
) -> Result<()> {
    match backend {
        BackendInstance::Parabolic => {
            let field = ParabolicBusemann;
            let colors = parabolic_colors(rc);
            let mut worst: f64 = 0.0;
            for pair in colors.windows(2) {
                let (x1, x2) = (pair[0], pair[1]);
                let (c1, c2) = (rc.phi.get(&x1).unwrap_or(0.0), rc.phi.get(&x2).unwrap_or(0.0));
                for &t in &[-2.0, -0.5, 0.0, 1.0, 3.0] {
                    let tau = tau_two_colors(&field, x1, x2, c1, c2, t, 40.0)?;
                    let oracle = -(x1.eta + x2.eta) * t / 2.0
                        + (c1 - c2) / (2.0 * (x2.eta - x1.eta));
                    worst = worst.max((tau - oracle).abs());
                }
            }
            check(
                checks,
                "interfaces/closed-form",
                worst <= PARABOLIC_TOL,
                Some(worst),
                "bisected interface matches the exact line",
            );

            let (x1, x2) = (colors[0], colors[colors.len() - 1]);
            let sol = TwoColorSolution {
                field: &field,
                xi1: x1,
                xi2: x2,
                c1: rc.phi.get(&x1).unwrap_or(0.0),
                c2: rc.phi.get(&x2).unwrap_or(0.0),
            };
            let times = [-2.0, -1.0, 0.0, 1.0, 2.0];
            let xs: Vec<f64> = (-12..=12).map(|i| i as f64 * 0.4).collect();
            let violations = sol.representation_check(&times, &xs, 40.0, 1e-6)?;
            check(
                checks,
                "interfaces/two-piece",
                violations == 0,
                Some(violations as f64),
                "attaining side matches sign(x - tau) off the interface",
            );
        }
        BackendInstance::Lpp { .. } => {
            let report =
                border_interface_deviation(rc.seed, rc.lpp.n, rc.replicas, rc.lpp.horizon)?;
            check(
                checks,
                "interfaces/border-deviation",
                report.rate() >= 0.9 && report.slices_checked > 0,
                Some(report.rate()),
                &format!(
                    "border within two cells of the bisected interface \
                     ({} slices, max {:.2} cells)",
                    report.slices_checked, report.max_dev_cells
                ),
            );
        }
    }
    Ok(())
}

fn suite_crossing(checks: &mut Vec<CheckLine>) -> Result<()> {
    let field = ParabolicBusemann;
    let xi = SignedDirection::minus;
    let times: Vec<f64> = (-8..=8).map(|i| i as f64 * 0.5).collect();
    let s12 = TwoColorSolution {
        field: &field,
        xi1: xi(-1.0),
        xi2: xi(0.0),
        c1: 0.0,
        c2: 0.0,
    };
    let s13 = TwoColorSolution {
        field: &field,
        xi1: xi(-1.0),
        xi2: xi(1.0),
        c1: 0.0,
        c2: 0.0,
    };
    let t12 = s12.interface(&times, 20.0)?;
    let t13 = s13.interface(&times, 20.0)?;
    // with zero constants tau12(t) = t/2 and tau13(t) = 0 meet at t = 0
    let report = crossing_check(&t12, &t13, 0.0, 1e-9)?;
    check(
        checks,
        "crossing/ordered",
        report.pass(),
        None,
        "interfaces weakly ordered on both sides of the meeting time",
    );
    check(
        checks,
        "crossing/strict-past",
        report.strict_below.is_some(),
        report.strict_below,
        "strict order holds in the past",
    );
    Ok(())
}

fn suite_colormap(
    rc: &RunConfig,
    backend: &BackendInstance,
    checks: &mut Vec<CheckLine>,
) -> Result<()> {
    match backend {
        BackendInstance::Parabolic => {
            let field = ParabolicBusemann;
            let kernel = ParabolicBackend;
            let b = EternalSolutionField::new(rc.phi.clone(), &field)?;
            let reference = rc.reference_colors();
            let grid = build_color_grid(&b, &kernel, &rc.colorgrid, &reference, &rc.scan)?;
            check(
                checks,
                "colormap/ambiguity",
                grid.ambiguous_fraction == 0.0,
                Some(grid.ambiguous_fraction),
                "deterministic backend colors every cell",
            );
            check(
                checks,
                "colormap/merge-only",
                grid.merge_only(),
                None,
                "later slices never introduce colors",
            );
            check(
                checks,
                "colormap/nested",
                nestedness_violations(&grid) == 0,
                Some(nestedness_violations(&grid) as f64),
                "interior colors nest backward in time",
            );

            // measured borders agree with the bisected interface constants
            let coloring = grid.slice_coloring(0)?;
            let extracted = extract_constants(&coloring, &field)?;
            let constants = rebase_constants(&extracted, &field, SpaceTimePoint::new(0.0, 0.0))?;
            let mut worst: f64 = 0.0;
            for &xi in &grid.slices[0].colors() {
                let dev = border_interface_check(&grid, &field, &constants, xi, 30.0)?;
                worst = worst.max(dev);
            }
            check(
                checks,
                "colormap/border-interface",
                worst <= grid.spec.dx,
                Some(worst),
                "measured borders within one cell of the interface lines",
            );
        }
        BackendInstance::Lpp { .. } => {
            let spec = lpp_window(rc);
            let field = TableBusemann::build(
                rc.seed,
                rc.lpp.n,
                &rc.reference_colors(),
                spec.x_min,
                spec.x_max,
                spec.t_min,
                spec.t_max,
                rc.lpp.horizon,
            )?;
            let grid = lpp_color_grid(&field, &rc.phi, &spec)?;
            check(
                checks,
                "colormap/ambiguity",
                grid.ambiguous_fraction <= spec.max_ambiguous_fraction,
                Some(grid.ambiguous_fraction),
                "ambiguous cells within the allowed fraction",
            );
            let nested = nestedness_violations(&grid);
            check(
                checks,
                "colormap/nested",
                nested == 0,
                Some(nested as f64),
                "interior colors nest backward in time",
            );
            let mut monotone = true;
            for s in &grid.slices {
                for w in s.runs.windows(2) {
                    monotone &= w[0].color < w[1].color;
                }
            }
            check(
                checks,
                "colormap/monotone-runs",
                monotone,
                None,
                "colors increase left to right on every slice",
            );
        }
    }
    Ok(())
}

/// The stochastic window: small enough for the table rectangle, deep enough
/// to watch interior colors die.
fn lpp_window(rc: &RunConfig) -> ColorGridSpec {
    let mut spec = ColorGridSpec::new(-1.5, 1.5, 0.125, -1.5, 0.25, 0.25);
    spec.max_ambiguous_fraction = rc.colorgrid.max_ambiguous_fraction;
    spec
}

fn suite_extinction(
    rc: &RunConfig,
    backend: &BackendInstance,
    checks: &mut Vec<CheckLine>,
) -> Result<()> {
    let grid = match backend {
        BackendInstance::Parabolic => {
            let field = ParabolicBusemann;
            let kernel = ParabolicBackend;
            let b = EternalSolutionField::new(rc.phi.clone(), &field)?;
            build_color_grid(&b, &kernel, &rc.colorgrid, &rc.reference_colors(), &rc.scan)?
        }
        BackendInstance::Lpp { .. } => {
            let spec = lpp_window(rc);
            let field = TableBusemann::build(
                rc.seed,
                rc.lpp.n,
                &rc.reference_colors(),
                spec.x_min,
                spec.x_max,
                spec.t_min,
                spec.t_max,
                rc.lpp.horizon,
            )?;
            lpp_color_grid(&field, &rc.phi, &spec)?
        }
    };

    let bottom = grid.slices[0].colors();
    if bottom.len() < 3 {
        check(
            checks,
            "extinction/interior",
            false,
            None,
            "need at least three colors on the bottom slice",
        );
        return Ok(());
    }
    let interior = &bottom[1..bottom.len() - 1];
    let mut all_extinct = true;
    let mut estimates = Vec::new();
    for &xi in interior {
        let record = grid.extinction(xi)?;
        all_extinct &= !record.survives();
        estimates.push((record.t_est, record.x_est));
    }
    check(
        checks,
        "extinction/interior",
        all_extinct,
        None,
        "every interior color dies inside the window",
    );

    let mut distinct = true;
    for i in 0..estimates.len() {
        for j in (i + 1)..estimates.len() {
            let (a, b) = (estimates[i], estimates[j]);
            distinct &= (a.0 - b.0).abs() > grid.spec.dt / 2.0
                || (a.1 - b.1).abs() > grid.spec.dx / 2.0;
        }
    }
    check(
        checks,
        "extinction/distinct",
        distinct,
        None,
        "extinction points of distinct colors separated on the grid",
    );
    Ok(())
}

/// A five-color staged-extinction family whose true interfaces land exactly
/// on cell midpoints of the companion window at every sampled time: two
/// interior colors die at distinct grid-exact points (t = 0 and t = 1).
pub fn five_color_corpus() -> (WeightFunction, ColorGridSpec, kpzfp_core::eternal::GridSpec) {
    let phi = WeightFunction::from_pairs([
        (SignedDirection::minus(-2.0), -6.0),
        (SignedDirection::minus(-1.0), 0.0),
        (SignedDirection::minus(0.0), 0.0),
        (SignedDirection::minus(1.0), 0.0),
        (SignedDirection::minus(2.0), -3.0),
    ]);
    let spec = ColorGridSpec::new(-5.375, 4.375, 0.25, -1.5, 1.5, 0.5);
    (phi, spec, kpzfp_core::eternal::GridSpec::default())
}

fn suite_reconstruction(_rc: &RunConfig, checks: &mut Vec<CheckLine>) -> Result<()> {
    let field = ParabolicBusemann;
    let kernel = ParabolicBackend;
    let (phi, spec, scan) = five_color_corpus();
    let b = EternalSolutionField::new(phi.clone(), &field)?;
    let reference: Vec<SignedDirection> = phi.atoms().map(|(xi, _)| *xi).collect();
    let grid = build_color_grid(&b, &kernel, &spec, &reference, &scan)?;

    // round trip: the extracted slice constants reproduce b(., s) - b(0, s)
    let coloring = grid.slice_coloring(0)?;
    let extracted = extract_constants(&coloring, &field)?;
    let s = coloring.t;
    let b0 = b.eval(0.0, s)?;
    let mut r1: f64 = 0.0;
    for &x in &grid.xs {
        let round =
            kpzfp_core::eternal::w_star_unchecked(&extracted, &field, x, s, 16.0)?.value;
        r1 = r1.max((round - (b.eval(x, s)? - b0)).abs());
    }
    check(
        checks,
        "reconstruction/extract",
        r1 <= PARABOLIC_TOL,
        Some(r1),
        "extracted constants reproduce the centered slice profile",
    );

    let residual = |recovered: &WeightFunction| -> Result<f64> {
        let rebased = rebase_constants(recovered, &field, phi.anchor)?;
        let pivot = reference[0];
        let shift = phi.get(&pivot).unwrap_or(0.0) - rebased.get(&pivot).unwrap_or(f64::NAN);
        Ok(reference
            .iter()
            .map(|xi| {
                let want = phi.get(xi).unwrap_or(0.0);
                let got = rebased.get(xi).unwrap_or(f64::NAN) + shift;
                (want - got).abs()
            })
            .fold(0.0, f64::max))
    };

    let synthesized = kpzfp_core::colormap::synthesize_weights(&grid, &field)?;
    let r2 = residual(&synthesized)?;
    check(
        checks,
        "reconstruction/synthesize",
        r2 <= PARABOLIC_TOL,
        Some(r2),
        "staged-extinction synthesis recovers the weights up to one constant",
    );
    Ok(())
}

fn suite_growth(checks: &mut Vec<CheckLine>) -> Result<()> {
    let field = ParabolicBusemann;
    let mut worst: f64 = 0.0;
    for alpha in [3.0, 4.0, 6.0] {
        let exponent =
            growth_rate_probe(&field, alpha, -0.05, &[100.0, 320.0, 1000.0])?;
        worst = worst.max((exponent - alpha / (alpha - 1.0)).abs());
    }
    check(
        checks,
        "growth/tail-exponent",
        worst <= 0.02,
        Some(worst),
        "fitted growth exponent matches alpha/(alpha-1)",
    );

    let phi = WeightFunction::flat([-1.0, 0.0, 1.0]);
    let b = EternalSolutionField::new(phi, &field)?;
    let envelope = quadratic_envelope_check(&b, -1.0, 4.0, &[-3.0, -1.0, 0.0, 1.0, 3.0]);
    check(
        checks,
        "growth/envelope",
        envelope.is_ok(),
        envelope.ok(),
        "finite families stay under the quadratic envelope",
    );
    Ok(())
}

fn suite_finiteness(rc: &RunConfig, checks: &mut Vec<CheckLine>) -> Result<()> {
    let field = ParabolicBusemann;

    let accepted = finiteness_gate(&rc.phi, -1.0, &field)?;
    check(
        checks,
        "finiteness/accepted",
        accepted.accepted,
        None,
        &format!("configured family passes the gate: {}", accepted.diagnostic),
    );

    let heavy = WeightFunction::new().with_tail(TailDescriptor::power(1.5, 1.0));
    let rejected = finiteness_gate(&heavy, -1.0, &field)?;
    check(
        checks,
        "finiteness/rejected",
        !rejected.accepted,
        None,
        "slowly decaying tail is rejected",
    );

    let undeclared = WeightFunction::new().with_tail(TailDescriptor {
        family: "power".to_string(),
        alpha: None,
        amplitude: 1.0,
    });
    let undecidable = matches!(
        finiteness_gate(&undeclared, -1.0, &field),
        Err(KpzError::UndecidableTail)
    );
    check(
        checks,
        "finiteness/undecidable",
        undecidable,
        None,
        "tail without a declared exponent cannot be gated",
    );

    // divergence probe for the rejected family: the truncated supremum of
    // 2 eta x + eta^2 (t - s) - |eta|^alpha blows past any budget
    let (alpha, t) = (1.5, 2.0);
    let mut sup = f64::NEG_INFINITY;
    let mut eta = 1.0f64;
    while eta <= 1e5 {
        sup = sup.max(eta * eta * t - eta.powf(alpha));
        eta *= 2.0;
    }
    check(
        checks,
        "finiteness/divergence-probe",
        sup > 1e6,
        Some(sup),
        "rejected family's truncated supremum exceeds 1e6",
    );
    Ok(())
}
