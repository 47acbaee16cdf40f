//! Experiment orchestration behind the `dgin` binary: configuration,
//! subcommands, output files and the run manifest.
//!
//! Every subcommand writes `manifest.json` into the output directory before
//! returning, whatever the outcome. Exit codes: [`EXIT_OK`],
//! [`EXIT_FAILURE`] (a check failed or a computation errored),
//! [`EXIT_OUTSIDE_BULK`] and [`EXIT_USAGE`] (bad configuration).

pub mod config;
pub mod io;
pub mod manifest;
pub mod svg;

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::contour::ScanGrid;
use crate::detequiv::{self, AssumptionReport, BulkPick, DetEquivParams, SaddleValues};
use crate::ensemble::{realize_deformation, DeformationKind};
use crate::error::{Error, Result};
use crate::localstats::{self, PairCorrEstimate};
use crate::spectra::{self, GirkoResult, TestFunction};
use crate::susy::checks::{self, BatteryReport};
use crate::Complex64;

pub use config::{Overrides, RunConfig};
pub use manifest::RunManifest;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_OUTSIDE_BULK: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    DetEquiv,
    Support,
    Simulate,
    LocalStats,
    Universality,
    Girko,
    VerifySusy,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::DetEquiv,
        Command::Support,
        Command::Simulate,
        Command::LocalStats,
        Command::Universality,
        Command::Girko,
        Command::VerifySusy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::DetEquiv => "detequiv",
            Command::Support => "support",
            Command::Simulate => "simulate",
            Command::LocalStats => "localstats",
            Command::Universality => "universality",
            Command::Girko => "girko",
            Command::VerifySusy => "verify-susy",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Result of one invocation.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub exit_code: i32,
    pub out_dir: PathBuf,
    pub manifest: RunManifest,
    /// One-line human summary.
    pub summary: String,
}

/// Notes attached to every manifest.
pub fn convention_notes() -> Vec<String> {
    let mut notes = vec![
        "Girko identity evaluated as sum f(z_j) = (4 pi)^-1 int Delta_xy f(z) log det Y(z) dxdy with Delta_xy = d^2/dx^2 + d^2/dy^2; \
         the operator d^2/dz dzbar equals Delta_xy / 4 and would need prefactor 1/pi instead"
            .to_string(),
        "local statistics in rescaled coordinates zeta = sqrt(n)(z - z0)".to_string(),
    ];
    notes.extend(checks::convention_notes());
    notes
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::OutsideBulk { .. } => EXIT_OUTSIDE_BULK,
        Error::Config(_) => EXIT_USAGE,
        _ => EXIT_FAILURE,
    }
}

/// Loads the configuration, runs `command` and writes the manifest.
pub fn execute(command: Command, config_path: Option<&Path>, overrides: &Overrides) -> Outcome {
    let mut manifest = RunManifest::start(command.name());
    manifest.notes = convention_notes();
    let fallback_dir = overrides.out.clone().unwrap_or_else(|| RunConfig::default().out);

    let config = config_path
        .map_or_else(|| Ok(RunConfig::default()), RunConfig::load)
        .and_then(|mut c| {
            c.apply(overrides);
            c.validate()?;
            Ok(c)
        });
    let config = match config {
        Ok(c) => c,
        Err(e) => return finish(manifest, fallback_dir, Err(e)),
    };
    manifest.config_hash = Some(config.hash());
    manifest.master_seed = Some(config.master_seed);
    manifest.n = Some(config.n);
    let dir = config.out.clone();

    let result = (|| -> Result<(bool, String)> {
        std::fs::create_dir_all(&dir)?;
        std::fs::write(dir.join("config.toml"), config.to_toml_string()?)?;
        manifest.record(&dir, "config.toml")?;
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(t) = config.threads {
            builder = builder.num_threads(t);
        }
        let pool = builder.build().map_err(|e| Error::Config(e.to_string()))?;
        pool.install(|| run(command, &config, &dir, &mut manifest))
    })();
    finish(manifest, dir, result)
}

fn finish(mut manifest: RunManifest, dir: PathBuf, result: Result<(bool, String)>) -> Outcome {
    let (exit_code, summary, error) = match result {
        Ok((true, s)) => (EXIT_OK, s, None),
        Ok((false, s)) => (EXIT_FAILURE, s.clone(), Some(s)),
        Err(e) => (exit_code_for(&e), e.to_string(), Some(e.to_string())),
    };
    manifest.finish(exit_code, error);
    let exit_code = match manifest.write(&dir) {
        Ok(_) => exit_code,
        Err(e) => {
            manifest.error = Some(format!("could not write manifest: {e}"));
            EXIT_FAILURE
        }
    };
    Outcome { exit_code, out_dir: dir, manifest, summary }
}

struct Ctx<'a> {
    config: &'a RunConfig,
    dir: &'a Path,
    hash: String,
    manifest: &'a mut RunManifest,
}

impl Ctx<'_> {
    fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        io::write_json(&self.dir.join(name), value)?;
        self.manifest.record(self.dir, name)
    }

    fn csv(&mut self, name: &str, columns: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        io::write_csv(&path, &self.hash, columns, rows)?;
        self.manifest.record(self.dir, name)
    }

    fn text(&mut self, name: &str, body: &str) -> Result<()> {
        std::fs::write(self.dir.join(name), body)?;
        self.manifest.record(self.dir, name)
    }
}

fn run(command: Command, config: &RunConfig, dir: &Path, manifest: &mut RunManifest) -> Result<(bool, String)> {
    let mut ctx = Ctx { config, dir, hash: config.hash(), manifest };
    match command {
        Command::DetEquiv => cmd_detequiv(&mut ctx),
        Command::Support => cmd_support(&mut ctx),
        Command::Simulate => cmd_simulate(&mut ctx),
        Command::LocalStats => cmd_localstats(&mut ctx),
        Command::Universality => cmd_universality(&mut ctx),
        Command::Girko => cmd_girko(&mut ctx),
        Command::VerifySusy => cmd_verify_susy(&mut ctx),
    }
}

#[derive(Serialize)]
struct DetEquivOutput {
    z0: Complex64,
    bulk_pick: Option<BulkPick>,
    params: DetEquivParams,
    assumptions: AssumptionReport,
    saddle_profile: Vec<SaddleValues<f64>>,
}

fn cmd_detequiv(ctx: &mut Ctx) -> Result<(bool, String)> {
    let c = ctx.config;
    let a0 = realize_deformation(&c.deformation_spec())?;
    let knobs = &c.detequiv;
    let bulk_pick = if knobs.pick_bulk {
        let grid = ScanGrid::square(knobs.pick_half_width, knobs.pick_center, knobs.pick_resolution);
        Some(detequiv::pick_bulk_point(&a0, &grid, knobs.assumptions, c.tolerances.solver)?)
    } else {
        None
    };
    let z0 = bulk_pick.as_ref().map_or(c.z0, |p| p.z);
    let params = detequiv::deterministic_equivalents(&a0, z0, c.tolerances.solver)?;
    let assumptions = detequiv::check_assumptions(&a0, z0, knobs.assumptions)?;
    let spectrum = detequiv::shifted_spectrum(&a0, z0)?;
    let k = knobs.profile_points.max(2);
    let us: Vec<f64> = (1..=k).map(|i| 2.0 * params.u_star * i as f64 / k as f64).collect();
    let saddle_profile = detequiv::f_profile(&spectrum, &us)?;
    let ok = params.in_bulk && assumptions.a1_ok && assumptions.a3_ok;
    let summary = format!(
        "z0 = {z0}: u_star = {:.12}, rho = {:.12}, c2 = {:.6}, A1 {}, A3 {}",
        params.u_star,
        params.rho,
        params.c2,
        if assumptions.a1_ok { "ok" } else { "violated" },
        if assumptions.a3_ok { "ok" } else { "violated" }
    );
    ctx.json("detequiv.json", &DetEquivOutput { z0, bulk_pick, params, assumptions, saddle_profile })?;
    Ok((ok, summary))
}

#[derive(Serialize)]
struct SupportOutput {
    grid_step: f64,
    segments: usize,
    polylines: usize,
    inside_nodes: usize,
    /// Smallest and largest `|z - center|` over the contour.
    radius_range: [f64; 2],
}

fn cmd_support(ctx: &mut Ctx) -> Result<(bool, String)> {
    let c = ctx.config;
    let a0 = realize_deformation(&c.deformation_spec())?;
    let s = &c.support;
    let grid = ScanGrid::square(s.half_width, s.center, s.resolution);
    let contour = detequiv::support_boundary_scan(&a0, &grid)?;
    let radii: Vec<f64> = contour.points().map(|z| (z - s.center).norm()).collect();
    let radius_range = [
        radii.iter().copied().fold(f64::INFINITY, f64::min),
        radii.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    ];
    let rows: Vec<Vec<f64>> = contour
        .polylines
        .iter()
        .enumerate()
        .flat_map(|(k, line)| line.iter().map(move |z| vec![k as f64, z.re, z.im]))
        .collect();
    ctx.csv("contour.csv", &["polyline", "re", "im"], rows)?;
    let out = SupportOutput {
        grid_step: grid.step(),
        segments: contour.segments.len(),
        polylines: contour.polylines.len(),
        inside_nodes: contour.inside_nodes,
        radius_range,
    };
    ctx.json("support.json", &out)?;
    Ok((true, format!("{} boundary segments, |z - center| in [{:.6}, {:.6}]", out.segments, radius_range[0], radius_range[1])))
}

#[derive(Serialize)]
struct SimulateOutput {
    trials: usize,
    failed_trials: Vec<u64>,
    files: Vec<String>,
    /// Fraction of eigenvalues in the unit disk around the centre of mass of `A0`.
    mean_unit_disk_fraction: f64,
}

fn cmd_simulate(ctx: &mut Ctx) -> Result<(bool, String)> {
    let c = ctx.config;
    let spec = c.deformation_spec();
    let (samples, failed) = spectra::sample_eigen_batch(&spec, c.master_seed, c.trials)?;
    ctx.manifest.failures.insert("eigensolver".into(), failed.len());
    let center = realize_deformation(&spec)?.trace() / c.n as f64;
    let mut files = Vec::with_capacity(samples.len());
    for s in &samples {
        let name = format!("eigenvalues/trial_{:06}.csv", s.trial_index);
        ctx.csv(&name, &["re", "im"], s.eigenvalues.iter().map(|z| vec![z.re, z.im]))?;
        files.push(name);
    }
    let frac = samples.iter().map(|s| spectra::radial_fraction(&s.eigenvalues, center, 1.0)).sum::<f64>()
        / samples.len().max(1) as f64;
    let summary = format!("{} trials written, {} eigensolver failures", samples.len(), failed.len());
    ctx.json("simulate.json", &SimulateOutput { trials: c.trials, failed_trials: failed, files, mean_unit_disk_fraction: frac })?;
    Ok((!samples.is_empty(), summary))
}

#[derive(Serialize)]
struct LocalStatsOutput {
    units: &'static str,
    z0: Complex64,
    estimate: PairCorrEstimate,
    /// Bin-averaged exact finite-n curve, for `A0 = 0` only.
    exact: Option<Vec<f64>>,
    sup_distance_to_exact: Option<f64>,
}

fn cmd_localstats(ctx: &mut Ctx) -> Result<(bool, String)> {
    let c = ctx.config;
    let spec = c.deformation_spec();
    let bins = c.radial_bins()?;
    let (clouds, failures) = localstats::simulate_clouds(&spec, c.z0, c.window_radius, c.trials, c.master_seed)?;
    ctx.manifest.failures.insert("eigensolver".into(), failures);
    if clouds.len() < 2 {
        return Err(Error::Config("localstats needs at least two usable trials".into()));
    }
    let estimate = localstats::pair_correlation(&clouds, &bins, c.inner_margin)?;
    let exact = match spec.kind {
        DeformationKind::Zero => Some(localstats::ginibre_exact_binned(c.n, c.z0, &bins)?),
        _ => None,
    };
    let sup = exact.as_ref().map(|e| localstats::sup_distance(&bins, &estimate.g_hat, e, c.bins.compare_up_to));
    let centers = bins.centers();
    let rows: Vec<Vec<f64>> = (0..bins.len())
        .map(|k| {
            let mut row = vec![bins.edges[k], bins.edges[k + 1], centers[k], estimate.g_hat[k], estimate.std_err[k], estimate.counts[k] as f64];
            if let Some(e) = &exact {
                row.push(e[k]);
            }
            row
        })
        .collect();
    let mut columns = vec!["r_lo", "r_hi", "r", "g_hat", "std_err", "pairs"];
    if exact.is_some() {
        columns.push("g_exact");
    }
    ctx.csv("pair_correlation.csv", &columns, rows)?;
    let mut curves = vec![svg::Curve { label: "estimate", y: &estimate.g_hat, color: "black" }];
    if let Some(e) = &exact {
        curves.push(svg::Curve { label: "exact finite n", y: e, color: "crimson" });
    }
    let lo: Vec<f64> = estimate.g_hat.iter().zip(&estimate.std_err).map(|(g, s)| g - 2.0 * s).collect();
    let hi: Vec<f64> = estimate.g_hat.iter().zip(&estimate.std_err).map(|(g, s)| g + 2.0 * s).collect();
    let plot = svg::Plot { title: "pair correlation", x_label: "r (rescaled)", x: &centers, curves, band: Some((&lo, &hi)) }.render();
    ctx.text("pair_correlation.svg", &plot)?;
    let passed = sup.is_none_or(|s| s < c.tolerances.sup_distance);
    let summary = match sup {
        Some(s) => format!("sup |g_hat - g_exact| = {s:.4} over r <= {}", c.bins.compare_up_to),
        None => format!("density {:.4} per unit rescaled area", estimate.density_hat),
    };
    ctx.json(
        "localstats.json",
        &LocalStatsOutput {
            units: "rescaled coordinates zeta = sqrt(n)(z - z0)",
            z0: c.z0,
            estimate,
            exact,
            sup_distance_to_exact: sup,
        },
    )?;
    Ok((passed, summary))
}

fn cmd_universality(ctx: &mut Ctx) -> Result<(bool, String)> {
    let c = ctx.config;
    let spec = c.deformation_spec();
    let z0 = if c.detequiv.pick_bulk {
        let a0 = realize_deformation(&spec)?;
        let k = &c.detequiv;
        let grid = ScanGrid::square(k.pick_half_width, k.pick_center, k.pick_resolution);
        detequiv::pick_bulk_point(&a0, &grid, k.assumptions, c.tolerances.solver)?.z
    } else {
        c.z0
    };
    let report = localstats::universality_report(&spec, &c.universality(z0)?)?;
    ctx.manifest.failures.insert("eigensolver".into(), report.eigensolver_failures);
    if !report.reliable {
        ctx.manifest.notes.push("statistics unreliable: fewer than two usable trials".into());
    }
    let bins = c.radial_bins()?;
    let centers = bins.centers();
    let est = &report.estimate;
    let rows: Vec<Vec<f64>> = (0..bins.len())
        .map(|k| {
            vec![centers[k], est.g_hat[k], est.std_err[k], report.prediction[k], report.z_scores[k]]
        })
        .collect();
    ctx.csv("universality.csv", &["r", "g_hat", "std_err", "g_universal", "z_score"], rows)?;
    let fine: Vec<f64> = (0..=200).map(|i| bins.max_radius() * i as f64 / 200.0).collect();
    let curve = localstats::universal_prediction(report.params.rho, &fine)?;
    ctx.csv("universal_curve.csv", &["r", "g", "p2"], (0..fine.len()).map(|i| vec![fine[i], curve.g[i], curve.p2[i]]))?;
    let lo: Vec<f64> = est.g_hat.iter().zip(&est.std_err).map(|(g, s)| g - 2.0 * s).collect();
    let hi: Vec<f64> = est.g_hat.iter().zip(&est.std_err).map(|(g, s)| g + 2.0 * s).collect();
    let plot = svg::Plot {
        title: "pair correlation vs 1 - exp(-rho r^2)",
        x_label: "r (rescaled)",
        x: &centers,
        curves: vec![
            svg::Curve { label: "estimate", y: &est.g_hat, color: "black" },
            svg::Curve { label: "universal", y: &report.prediction, color: "crimson" },
        ],
        band: Some((&lo, &hi)),
    }
    .render();
    ctx.text("universality.svg", &plot)?;
    let summary = format!(
        "rho = {:.6}, sup distance {:.4} (< {}), density residual {:.4} (< {}){}",
        report.params.rho,
        report.sup_distance,
        report.thresholds.sup_distance,
        report.density_residual,
        report.thresholds.density_resid,
        if report.reliable { "" } else { ", unreliable" }
    );
    let passed = report.passed;
    ctx.json("universality.json", &report)?;
    Ok((passed, summary))
}

#[derive(Serialize)]
struct GirkoOutput {
    test_function: TestFunction,
    trial: u64,
    result: GirkoResult,
    /// Same check on the half-resolution grid.
    coarse: GirkoResult,
    refinement_ratio: f64,
    tolerance: f64,
}

fn cmd_girko(ctx: &mut Ctx) -> Result<(bool, String)> {
    let c = ctx.config;
    let g = &c.girko;
    let f = TestFunction::bump(g.center, g.radius);
    let spec = c.deformation_spec();
    let (result, coarse) = rayon::join(
        || spectra::girko_check(&spec, c.master_seed, g.trial, &f, g.resolution),
        || spectra::girko_check(&spec, c.master_seed, g.trial, &f, g.resolution.div_ceil(2)),
    );
    let (result, coarse) = (result?, coarse?);
    let refinement_ratio = (coarse.lhs - coarse.rhs).abs() / (result.lhs - result.rhs).abs();
    let passed = result.rel_err < c.tolerances.quadrature;
    let summary = format!("relative error {:.3e} at {}^2, refinement ratio {:.2}", result.rel_err, g.resolution, refinement_ratio);
    ctx.json("girko.json", &GirkoOutput { test_function: f, trial: g.trial, result, coarse, refinement_ratio, tolerance: c.tolerances.quadrature })?;
    Ok((passed, summary))
}

fn cmd_verify_susy(ctx: &mut Ctx) -> Result<(bool, String)> {
    let report: BatteryReport = checks::run_battery(&ctx.config.battery())?;
    let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    let summary = if failed.is_empty() {
        format!("{} identity checks passed", report.checks.len())
    } else {
        format!("{} of {} checks failed: {}", failed.len(), report.checks.len(), failed.join(", "))
    };
    ctx.json("verify_susy.json", &report)?;
    Ok((report.all_passed, summary))
}
