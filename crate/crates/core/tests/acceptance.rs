//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the lines appear in ordinary
//! `cargo test` output. The process fails when a criterion outside
//! `KNOWN_RED` fails; a known-red criterion is still evaluated and printed.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use deformed_ginibre::contour::ScanGrid;
use deformed_ginibre::detequiv::{
    deterministic_equivalents, pick_bulk_point, saddle_values, shifted_spectrum, support_boundary_scan,
    AssumptionConfig, DetEquivParams,
};
use deformed_ginibre::ensemble::{realize_deformation, DeformationSpec};
use deformed_ginibre::localstats::{
    ginibre_exact_binned, pair_correlation, simulate_clouds, universality_report, RadialBins, Thresholds,
    UniversalityConfig,
};
use deformed_ginibre::spectra::{gen_functional_mc, girko_check, smoothing_ladder, GenFunctionalArgs, TestFunction};
use deformed_ginibre::susy::checks::{
    det_m_inequality_check, jacobian_polar_check, jacobian_square_check, run_battery, BatteryConfig, JacobianTestFn,
};
use deformed_ginibre::{ComplexMatrix, Complex64};

/// Criteria whose failure is documented and does not fail the target.
const KNOWN_RED: &[u32] = &[10];

const DETEQUIV_TOL: f64 = 1e-10;
const SYMBOLIC_TOL: f64 = 1e-10;
const DETERMINANT_TOL: f64 = 1e-12;
const JACOBIAN_TOL: f64 = 1e-6;
const POLAR_TOL: f64 = 1e-8;
const INEQUALITY_SLACK: f64 = 1e-12;
const GIRKO_TOL: f64 = 1e-2;
/// "About 4x": accepted within a factor sqrt(2) either side.
const GIRKO_REFINEMENT: (f64, f64) = (4.0 / std::f64::consts::SQRT_2, 4.0 * std::f64::consts::SQRT_2);
const GIRKO_REFINEMENT_TRIALS: u64 = 16;
const SUP_TOL: f64 = 0.05;
const DENSITY_TOL: f64 = 0.03;
const COMPARE_UP_TO: f64 = 3.0;
const SADDLE_GRAD_TOL: f64 = 1e-8;
const SADDLE_FD_TOL: f64 = 1e-6;
const STD_ERRORS: f64 = 3.0;

const BIN_WIDTH: f64 = 0.1;
const BIN_MAX: f64 = 4.0;
const WINDOW: f64 = 7.0;
const MC_TRIALS: usize = 2000;
const SEED: u64 = 0;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

struct Line {
    id: u32,
    passed: bool,
    detail: String,
}

struct Suite {
    lines: Vec<Line>,
    /// In-bulk configurations exercised so far, for the saddle diagnostics.
    saddle_configs: Vec<(String, ComplexMatrix, Complex64)>,
}

impl Suite {
    fn record(&mut self, id: u32, title: &str, started: Instant, outcome: Result<(bool, String), String>) {
        let secs = started.elapsed().as_secs_f64();
        let (passed, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
        let tag = if passed { "PASS" } else { "FAIL" };
        let known = if !passed && KNOWN_RED.contains(&id) { " (known red)" } else { "" };
        println!("criterion {id:>2} {title}: {tag}{known} [{secs:.1} s] {detail}");
        self.lines.push(Line { id, passed, detail });
    }
}

fn fmt_err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Bin averages of `g` over annuli `[k w, (k+1) w)` weighted by area, by
/// composite Simpson in `r`.
fn annulus_average(edges: &[f64], g: impl Fn(f64) -> f64) -> Vec<f64> {
    const PANELS: usize = 64;
    edges
        .windows(2)
        .map(|e| {
            let (a, b) = (e[0], e[1]);
            let h = (b - a) / PANELS as f64;
            let mut s = 0.0;
            for k in 0..=PANELS {
                let r = a + k as f64 * h;
                let w = if k == 0 || k == PANELS { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
                s += w * g(r) * r;
            }
            s * h / 3.0 / (0.5 * (b * b - a * a))
        })
        .collect()
}

fn bin_edges() -> Vec<f64> {
    let k = (BIN_MAX / BIN_WIDTH).round() as usize;
    (0..=k).map(|i| i as f64 * BIN_WIDTH).collect()
}

fn sup_below(edges: &[f64], g_hat: &[f64], pred: &[f64]) -> f64 {
    edges
        .windows(2)
        .zip(g_hat.iter().zip(pred))
        .filter(|(e, _)| 0.5 * (e[0] + e[1]) <= COMPARE_UP_TO)
        .map(|(_, (g, p))| (g - p).abs())
        .fold(0.0, f64::max)
}

/// `g(r) = 1 - 1 / e_{n-1}(r^2)` for the Ginibre kernel at the origin, with
/// `e_{n-1}` the truncated exponential series.
fn ginibre_origin_g(n: usize, r: f64) -> f64 {
    let x = r * r;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..n {
        term *= x / k as f64;
        sum += term;
    }
    1.0 - 1.0 / sum
}

fn criterion_1(s: &mut Suite) {
    let t = Instant::now();
    let mut run = || -> Result<(bool, String), String> {
        let n = 64;
        let mut worst: f64 = 0.0;
        for k in 1..=9 {
            let a = 0.1 * k as f64;
            let a0 = realize_deformation(&DeformationSpec::two_atom(c(a, 0.0), n)).map_err(fmt_err)?;
            let p = deterministic_equivalents(&a0, c(0.0, 0.0), 1e-14).map_err(fmt_err)?;
            let target = 1.0 - a * a;
            worst = worst.max((p.u_star * p.u_star - target).abs()).max((p.rho - target).abs());
            s.saddle_configs.push((format!("two_atom({a:.1})"), a0, c(0.0, 0.0)));
        }
        for a in [c(0.0, 0.0), c(0.3, 0.0), c(-0.5, 0.5), c(0.0, 0.9)] {
            let a0 = realize_deformation(&DeformationSpec::scalar_shift(a, n)).map_err(fmt_err)?;
            let p = deterministic_equivalents(&a0, c(0.0, 0.0), 1e-14).map_err(fmt_err)?;
            worst = worst.max((p.rho - 1.0).abs());
            s.saddle_configs.push((format!("scalar_shift({a})"), a0, c(0.0, 0.0)));
        }
        Ok((worst <= DETEQUIV_TOL, format!("max deviation {worst:.2e} (tol {DETEQUIV_TOL:.0e})")))
    };
    let out = run();
    s.record(1, "closed-form deterministic equivalents", t, out);
}

fn criterion_2(s: &mut Suite) {
    let t = Instant::now();
    let run = || -> Result<(bool, String), String> {
        // the A0 = 0 support does not depend on n
        let a0 = realize_deformation(&DeformationSpec::zero(8)).map_err(fmt_err)?;
        let grid = ScanGrid::square(1.5, c(0.0, 0.0), 400);
        let contour = support_boundary_scan(&a0, &grid).map_err(fmt_err)?;
        let step = grid.step();
        let dev = contour.points().map(|z| (z.norm() - 1.0).abs()).fold(0.0, f64::max);
        let count = contour.segments.len();
        Ok((count > 0 && dev < step, format!("{count} segments, max | |z| - 1 | = {dev:.2e}, grid step {step:.2e}")))
    };
    let out = run();
    s.record(2, "support geometry", t, out);
}

fn criterion_3(s: &mut Suite) {
    let t = Instant::now();
    let run = || -> Result<(bool, String), String> {
        let report = run_battery(&BatteryConfig::default()).map_err(fmt_err)?;
        let mut failed = Vec::new();
        for ch in &report.checks {
            let tol_ok = if ch.name.starts_with("gaussian_grassmann") {
                ch.tolerance <= DETERMINANT_TOL
            } else if ch.name.starts_with("jacobian") || ch.name.starts_with("det_m") || ch.name.contains("_mc_") {
                true
            } else if ch.name.starts_with("hs_bosonic_analytic") {
                ch.tolerance <= DETERMINANT_TOL
            } else {
                ch.tolerance <= SYMBOLIC_TOL
            };
            if !ch.passed || !tol_ok {
                failed.push(ch.name.clone());
            }
        }
        let grassmann_sizes = report.checks.iter().filter(|c| c.name.starts_with("gaussian_grassmann")).count();
        let ok = failed.is_empty() && report.all_passed && grassmann_sizes >= 6;
        Ok((ok, format!("{} checks, gaussian_grassmann up to {grassmann_sizes}x{grassmann_sizes}, failed: {failed:?}", report.checks.len())))
    };
    let out = run();
    s.record(3, "susy identity battery", t, out);
}

fn criterion_4(s: &mut Suite) {
    let t = Instant::now();
    let run = || -> Result<(bool, String), String> {
        let mut worst: f64 = 0.0;
        for f in [JacobianTestFn::ExpTrace, JacobianTestFn::ExpTwoTrace] {
            worst = worst.max(jacobian_square_check(f).map_err(fmt_err)?.rel_err);
        }
        let polar = jacobian_polar_check(1.0).map_err(fmt_err)?;
        let pi4 = (polar.rhs - PI.powi(4)).abs() / PI.powi(4);
        let ok = worst <= JACOBIAN_TOL && polar.rel_err <= JACOBIAN_TOL && pi4 <= POLAR_TOL;
        Ok((ok, format!("square lemma rel err {worst:.2e}, polar lemma vs pi^4 rel err {pi4:.2e}")))
    };
    let out = run();
    s.record(4, "change-of-variables lemmas", t, out);
}

fn criterion_5(s: &mut Suite) {
    let t = Instant::now();
    let run = || -> Result<(bool, String), String> {
        let r = det_m_inequality_check(100_000, 1_000, 7).map_err(fmt_err)?;
        let ok = r.boundary_samples >= 100_000
            && r.interior_samples >= 1_000
            && r.violations == 0
            && r.interior_violations == 0
            && r.slack <= INEQUALITY_SLACK;
        Ok((
            ok,
            format!(
                "{} boundary + {} interior samples, {} + {} violations, worst margin {:.2e}",
                r.boundary_samples, r.interior_samples, r.violations, r.interior_violations, r.worst_margin
            ),
        ))
    };
    let out = run();
    s.record(5, "determinant inequality", t, out);
}

fn criterion_6(s: &mut Suite) {
    let t = Instant::now();
    let run = || -> Result<(bool, String), String> {
        let spec = DeformationSpec::zero(16);
        let f = TestFunction::bump(c(0.2, 0.0), 0.4);
        let fine = girko_check(&spec, SEED, 0, &f, 401).map_err(fmt_err)?;
        // The midpoint error is h^2 times a constant set by where each
        // eigenvalue falls inside its cell, so single-matrix ratios scatter
        // widely; the refinement factor is the geometric mean over trials.
        let mut log_ratio = 0.0;
        for trial in 0..GIRKO_REFINEMENT_TRIALS {
            let hi = if trial == 0 { fine.clone() } else { girko_check(&spec, SEED, trial, &f, 401).map_err(fmt_err)? };
            let lo = girko_check(&spec, SEED, trial, &f, 201).map_err(fmt_err)?;
            log_ratio += ((lo.lhs - lo.rhs).abs() / (hi.lhs - hi.rhs).abs()).ln();
        }
        let ratio = (log_ratio / GIRKO_REFINEMENT_TRIALS as f64).exp();
        let ok = fine.rel_err < GIRKO_TOL && ratio >= GIRKO_REFINEMENT.0 && ratio <= GIRKO_REFINEMENT.1;
        Ok((
            ok,
            format!(
                "rel err {:.2e} at 401^2, 201^2 -> 401^2 refinement factor {ratio:.2} (geometric mean over {GIRKO_REFINEMENT_TRIALS} trials)",
                fine.rel_err
            ),
        ))
    };
    let out = run();
    s.record(6, "Girko identity", t, out);
}

fn criterion_7(s: &mut Suite) {
    let t = Instant::now();
    let mut run = || -> Result<(bool, String), String> {
        let n = 256;
        let spec = DeformationSpec::zero(n);
        let z0 = c(0.0, 0.0);
        let bins = RadialBins::uniform(BIN_WIDTH, BIN_MAX).map_err(fmt_err)?;
        let (clouds, failures) = simulate_clouds(&spec, z0, WINDOW, MC_TRIALS, SEED).map_err(fmt_err)?;
        let est = pair_correlation(&clouds, &bins, 0.0).map_err(fmt_err)?;
        let edges = bin_edges();
        let oracle = annulus_average(&edges, |r| ginibre_origin_g(n, r));
        let library = ginibre_exact_binned(n, z0, &bins).map_err(fmt_err)?;
        let cross = oracle.iter().zip(&library).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let sup = sup_below(&edges, &est.g_hat, &oracle);
        let a0 = realize_deformation(&spec).map_err(fmt_err)?;
        s.saddle_configs.push(("zero(256)".into(), a0, z0));
        Ok((
            sup < SUP_TOL && cross < 1e-8,
            format!("{} trials ({failures} failed), sup |g_hat - g_n| = {sup:.4} on r <= {COMPARE_UP_TO}, oracle vs library {cross:.1e}", clouds.len()),
        ))
    };
    let out = run();
    s.record(7, "estimator vs exact Ginibre curve", t, out);
}

fn universality_check(
    s: &mut Suite,
    label: &str,
    spec: &DeformationSpec,
    z0: Complex64,
    rho_expected: Option<f64>,
) -> Result<(bool, String), String> {
    let config = UniversalityConfig {
        z0,
        trials: MC_TRIALS,
        master_seed: SEED,
        window_radius: WINDOW,
        bins: RadialBins::uniform(BIN_WIDTH, BIN_MAX).map_err(fmt_err)?,
        inner_margin: 0.0,
        thresholds: Thresholds { sup_distance: SUP_TOL, density_resid: DENSITY_TOL, r_max: COMPARE_UP_TO },
        tol: 1e-13,
    };
    let report = universality_report(spec, &config).map_err(fmt_err)?;
    let rho = rho_expected.unwrap_or(report.params.rho);
    let edges = bin_edges();
    let pred = annulus_average(&edges, |r| 1.0 - (-rho * r * r).exp());
    let sup = sup_below(&edges, &report.estimate.g_hat, &pred);
    let dens = (PI * report.estimate.density_hat - rho).abs();
    let rho_ok = rho_expected.is_none_or(|r| (report.params.rho - r).abs() < DETEQUIV_TOL);
    s.saddle_configs.push((label.into(), realize_deformation(spec).map_err(fmt_err)?, z0));
    Ok((
        sup < SUP_TOL && dens < DENSITY_TOL && rho_ok && report.params.in_bulk,
        format!("{label} at z0 = {z0:.3}: rho = {rho:.4}, sup = {sup:.4}, |pi d_hat - rho| = {dens:.4}"),
    ))
}

fn criterion_8(s: &mut Suite) {
    let t = Instant::now();
    let n = 512;
    let two_atom = universality_check(s, "two_atom(0.5)", &DeformationSpec::two_atom(c(0.5, 0.0), n), c(0.0, 0.0), Some(0.75));
    let jordan = (|| -> Result<(bool, String), String> {
        let spec = DeformationSpec::jordan(c(0.0, 0.0), n);
        let a0 = realize_deformation(&spec).map_err(fmt_err)?;
        let grid = ScanGrid::square(1.0, c(0.0, 0.0), 21);
        let pick = pick_bulk_point(&a0, &grid, AssumptionConfig::default(), 1e-13).map_err(fmt_err)?;
        universality_check(s, "jordan(0)", &spec, pick.z, None)
    })();
    let out = match (two_atom, jordan) {
        (Ok((p1, d1)), Ok((p2, d2))) => Ok((p1 && p2, format!("{d1}; {d2}"))),
        (Err(e), _) | (_, Err(e)) => Err(e),
    };
    s.record(8, "bulk universality", t, out);
}

fn criterion_9(s: &mut Suite) {
    let t = Instant::now();
    let configs = std::mem::take(&mut s.saddle_configs);
    let run = || -> Result<(bool, String), String> {
        let mut worst_grad: f64 = 0.0;
        let mut worst_fd: f64 = 0.0;
        let mut min_c2 = f64::INFINITY;
        for (label, a0, z0) in &configs {
            let p: DetEquivParams = deterministic_equivalents(a0, *z0, 1e-14).map_err(fmt_err)?;
            if !p.in_bulk {
                return Err(format!("{label} is not in the bulk"));
            }
            let spectrum = shifted_spectrum(a0, *z0).map_err(fmt_err)?;
            let at = saddle_values(&spectrum, p.u_star).map_err(fmt_err)?;
            let h = 1e-4 * p.u_star;
            let up = saddle_values(&spectrum, p.u_star + h).map_err(fmt_err)?;
            let down = saddle_values(&spectrum, p.u_star - h).map_err(fmt_err)?;
            let fd = (up.df - down.df) / (2.0 * h);
            worst_grad = worst_grad.max(at.df.abs());
            worst_fd = worst_fd.max((fd - at.d2f).abs() / at.d2f.abs());
            min_c2 = min_c2.min(p.c2);
        }
        let ok = worst_grad < SADDLE_GRAD_TOL && min_c2 > 0.0 && worst_fd < SADDLE_FD_TOL;
        Ok((
            ok,
            format!("{} configurations, max |f'(u*)| = {worst_grad:.1e}, min c2 = {min_c2:.4}, max f'' vs FD rel = {worst_fd:.1e}", configs.len()),
        ))
    };
    let out = run();
    s.record(9, "saddle diagnostics", t, out);
}

fn criterion_10(s: &mut Suite) {
    let t = Instant::now();
    let run = || -> Result<(bool, String), String> {
        let spec = DeformationSpec::zero(64);
        let ladder: Vec<[f64; 2]> = [0.8, 0.4, 0.2, 0.1].iter().map(|&e| [e, e]).collect();
        let r = smoothing_ladder(&spec, [c(0.0, 0.0); 2], &ladder, MC_TRIALS, SEED).map_err(fmt_err)?;
        let ratios: Vec<String> = r
            .points
            .iter()
            .map(|p| format!("{:.3}+-{:.3}", p.bound_ratio.unwrap_or(f64::NAN), p.bound_ratio_se.unwrap_or(f64::NAN)))
            .collect();
        Ok((r.bounded(), format!("bound ratios [{}], slope {:.3} +- {:.3}", ratios.join(", "), r.slope, r.slope_se)))
    };
    let out = run();
    s.record(10, "smoothing bound", t, out);
}

/// `(1/pi) int prod_j (|h - z_j|^2 + e_j^2) / (|h - z'_j|^2 + e'^2) e^{-|h|^2} d^2h`
/// by composite Simpson on a square.
fn n1_oracle(args: &GenFunctionalArgs) -> f64 {
    const L: f64 = 9.0;
    const PANELS: usize = 1800;
    let h = 2.0 * L / PANELS as f64;
    let w = |k: usize| if k == 0 || k == PANELS { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
    let z: Vec<Complex64> = args.zeta.iter().map(|d| args.z0 + d).collect();
    let zp: Vec<Complex64> = args.zeta_prime.iter().map(|d| args.z0 + d).collect();
    let mut total = 0.0;
    for i in 0..=PANELS {
        let x = -L + i as f64 * h;
        let mut row = 0.0;
        for j in 0..=PANELS {
            let y = -L + j as f64 * h;
            let p = c(x, y);
            let mut ratio = 1.0;
            for k in 0..2 {
                ratio *= ((p - z[k]).norm_sqr() + args.eps_hat[k].powi(2)) / ((p - zp[k]).norm_sqr() + args.eps_prime.powi(2));
            }
            row += w(j) * ratio * (-(x * x + y * y)).exp();
        }
        total += w(i) * row;
    }
    total * h * h / 9.0 / PI
}

fn criterion_11(s: &mut Suite) {
    let t = Instant::now();
    let run = || -> Result<(bool, String), String> {
        let zeta = [c(0.3, 0.1), c(-0.2, 0.4)];
        let same = GenFunctionalArgs { z0: c(0.1, -0.1), zeta, zeta_prime: zeta, eps_hat: [0.5, 0.5], eps_prime: 0.5 };
        let trivial = gen_functional_mc(&DeformationSpec::zero(16), &same, 200, SEED).map_err(fmt_err)?;
        let exact = trivial.estimate == 1.0 && trivial.std_error == 0.0;

        let args = GenFunctionalArgs {
            z0: c(0.0, 0.0),
            zeta,
            zeta_prime: [c(0.5, 0.0), c(0.0, -0.5)],
            eps_hat: [0.3, 0.6],
            eps_prime: 0.4,
        };
        let mc = gen_functional_mc(&DeformationSpec::zero(1), &args, 100_000, SEED).map_err(fmt_err)?;
        let oracle = n1_oracle(&args);
        let z = (mc.estimate - oracle).abs() / mc.std_error;
        Ok((
            exact && z < STD_ERRORS,
            format!(
                "equal arguments give {} +- {}; n = 1: MC {:.5} +- {:.5} vs quadrature {oracle:.5} ({z:.2} standard errors)",
                trivial.estimate, trivial.std_error, mc.estimate, mc.std_error
            ),
        ))
    };
    let out = run();
    s.record(11, "generating functional", t, out);
}

type Criterion = fn(&mut Suite);

/// `ACCEPTANCE_CRITERIA=1,2,5` restricts the run; unset runs everything.
fn selected() -> Option<Vec<u32>> {
    let v = std::env::var("ACCEPTANCE_CRITERIA").ok()?;
    Some(v.split(',').filter_map(|x| x.trim().parse().ok()).collect())
}

fn main() -> ExitCode {
    let mut suite = Suite { lines: Vec::new(), saddle_configs: Vec::new() };
    let only = selected();
    let order: [(u32, Criterion); 11] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (11, criterion_11),
        (10, criterion_10),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
    ];
    for (id, run) in order {
        if only.as_ref().is_none_or(|o| o.contains(&id)) {
            run(&mut suite);
        }
    }

    suite.lines.sort_by_key(|l| l.id);
    let unexpected: Vec<&Line> = suite.lines.iter().filter(|l| !l.passed && !KNOWN_RED.contains(&l.id)).collect();
    let red: Vec<u32> = suite.lines.iter().filter(|l| !l.passed).map(|l| l.id).collect();
    println!("acceptance: {} of {} criteria pass; failing: {red:?}", suite.lines.len() - red.len(), suite.lines.len());
    for id in KNOWN_RED {
        if suite.lines.iter().any(|l| l.id == *id && l.passed) {
            println!("criterion {id} is listed as known red but passed");
        }
    }
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        for l in unexpected {
            eprintln!("unexpected failure of criterion {}: {}", l.id, l.detail);
        }
        ExitCode::FAILURE
    }
}
