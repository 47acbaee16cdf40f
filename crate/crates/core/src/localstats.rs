//! Local eigenvalue statistics at a bulk point in `sqrt(n)`-rescaled
//! coordinates `zeta = sqrt(n) (z - z0)`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detequiv::{deterministic_equivalents, DetEquivParams};
use crate::ensemble::{realize_deformation, sample_with_deformation, DeformationSpec};
use crate::error::{Error, Result};
use crate::linalg;
use crate::quadrature::gauss_legendre;
use crate::Complex64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RescaledCloud {
    pub z0: Complex64,
    pub n: usize,
    pub window_radius: f64,
    pub points: Vec<Complex64>,
}

pub fn rescale(sample: &crate::spectra::EigenSample, z0: Complex64, window_radius: f64) -> RescaledCloud {
    rescale_eigenvalues(&sample.eigenvalues, sample.n, z0, window_radius)
}

pub fn rescale_eigenvalues(eigs: &[Complex64], n: usize, z0: Complex64, window_radius: f64) -> RescaledCloud {
    let s = (n as f64).sqrt();
    let points = eigs.iter().map(|z| (z - z0) * s).filter(|p| p.norm() <= window_radius).collect();
    RescaledCloud { z0, n, window_radius, points }
}

/// Homogeneous Poisson process of the given intensity on the disk of radius
/// `window_radius`; synthetic input for estimator checks.
pub fn poisson_cloud<R: Rng + ?Sized>(intensity: f64, window_radius: f64, rng: &mut R) -> Result<RescaledCloud> {
    let mean = intensity * PI * window_radius * window_radius;
    let count = if mean > 0.0 {
        Poisson::new(mean).map_err(|e| Error::invalid(e.to_string()))?.sample(rng) as usize
    } else {
        0
    };
    let points = (0..count)
        .map(|_| {
            let r = window_radius * rng.random::<f64>().sqrt();
            let t = 2.0 * PI * rng.random::<f64>();
            Complex64::from_polar(r, t)
        })
        .collect();
    Ok(RescaledCloud { z0: Complex64::new(0.0, 0.0), n: 0, window_radius, points })
}

/// Radial bin edges `r_0 < r_1 < ... < r_K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialBins {
    pub edges: Vec<f64>,
}

impl RadialBins {
    pub fn new(edges: Vec<f64>) -> Result<Self> {
        let ok = edges.len() >= 2 && edges[0] >= 0.0 && edges.windows(2).all(|w| w[1] > w[0]) && edges.iter().all(|e| e.is_finite());
        if !ok {
            return Err(Error::invalid("bin edges must be finite, non-negative and strictly increasing"));
        }
        Ok(Self { edges })
    }

    /// Uniform bins of width `width` on `[0, r_max]`.
    pub fn uniform(width: f64, r_max: f64) -> Result<Self> {
        if !(width > 0.0 && r_max > 0.0) {
            return Err(Error::invalid("bin width and range must be positive"));
        }
        let k = (r_max / width).round().max(1.0) as usize;
        Self::new((0..=k).map(|i| i as f64 * r_max / k as f64).collect())
    }

    pub fn len(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn max_radius(&self) -> f64 {
        self.edges[self.edges.len() - 1]
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn annulus_areas(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| PI * (w[1] * w[1] - w[0] * w[0])).collect()
    }

    fn locate(&self, r: f64) -> Option<usize> {
        if r < self.edges[0] || r >= self.max_radius() {
            return None;
        }
        Some(self.edges.partition_point(|&e| e <= r) - 1)
    }

    /// Area-weighted bin average of `g`, i.e. `int g(r) r dr / int r dr` per bin.
    pub fn average<F: Fn(f64) -> f64>(&self, g: F) -> Vec<f64> {
        let (x, w) = gauss_legendre(16);
        self.edges
            .windows(2)
            .map(|e| {
                let (a, b) = (e[0], e[1]);
                let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
                let num: f64 = x.iter().zip(&w).map(|(x, w)| w * g(c + h * x) * (c + h * x)).sum::<f64>() * h;
                num / (0.5 * (b * b - a * a))
            })
            .collect()
    }
}

/// Pair directions counted by the estimator: angles of `zeta_b - zeta_a` in
/// `[start, start + width)` (mod `2 pi`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sector {
    pub start: f64,
    pub width: f64,
}

impl Sector {
    pub const FULL: Sector = Sector { start: 0.0, width: 2.0 * PI };

    fn contains(&self, d: Complex64) -> bool {
        if self.width >= 2.0 * PI {
            return true;
        }
        let t = (d.arg() - self.start).rem_euclid(2.0 * PI);
        t < self.width
    }

    fn fraction(&self) -> f64 {
        (self.width / (2.0 * PI)).min(1.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairCorrEstimate {
    pub bin_edges: Vec<f64>,
    pub g_hat: Vec<f64>,
    /// Ordered pairs per bin, summed over trials.
    pub counts: Vec<u64>,
    /// Bins with no pairs; their `g_hat` entry is 0.
    pub empty_bins: Vec<bool>,
    /// Points per unit rescaled area.
    pub density_hat: f64,
    pub density_std_err: f64,
    pub std_err: Vec<f64>,
    pub trials: usize,
    pub window_radius: f64,
    pub inner_margin: f64,
    /// Mean number of points per trial in the eroded window.
    pub mean_inner_points: f64,
}

#[derive(Clone, Debug)]
struct TrialCounts {
    window: u64,
    inner: u64,
    pairs: Vec<u64>,
    /// Pair counts with the edge-correction weights applied.
    weighted: Vec<f64>,
}

/// Fraction of the circle of radius `r` around a point at distance `s` from
/// the centre that lies inside the disk of radius `w`.
pub fn circle_fraction_inside(s: f64, r: f64, w: f64) -> f64 {
    if s + r <= w {
        1.0
    } else if r >= s + w || s >= w + r {
        0.0
    } else {
        1.0 - ((w * w - s * s - r * r) / (2.0 * s * r)).clamp(-1.0, 1.0).acos() / PI
    }
}

fn count_trial(cloud: &RescaledCloud, bins: &RadialBins, eroded: f64, sector: Sector) -> TrialCounts {
    let mut pairs = vec![0u64; bins.len()];
    let mut weighted = vec![0.0; bins.len()];
    let mut inner = 0;
    for (a, &pa) in cloud.points.iter().enumerate() {
        let s = pa.norm();
        if s > eroded {
            continue;
        }
        inner += 1;
        for (b, &pb) in cloud.points.iter().enumerate() {
            if a == b {
                continue;
            }
            let d = pb - pa;
            if !sector.contains(d) {
                continue;
            }
            let r = d.norm();
            if let Some(k) = bins.locate(r) {
                pairs[k] += 1;
                weighted[k] += 1.0 / circle_fraction_inside(s, r, cloud.window_radius);
            }
        }
    }
    TrialCounts { window: cloud.points.len() as u64, inner, pairs, weighted }
}

struct Totals {
    window: f64,
    inner: f64,
    pairs: Vec<f64>,
}

impl Totals {
    fn of(counts: &[TrialCounts], bins: usize) -> Self {
        let mut t = Totals { window: 0.0, inner: 0.0, pairs: vec![0.0; bins] };
        for c in counts {
            t.window += c.window as f64;
            t.inner += c.inner as f64;
            for (p, &x) in t.pairs.iter_mut().zip(&c.weighted) {
                *p += x;
            }
        }
        t
    }

    fn without(&self, c: &TrialCounts) -> Self {
        Totals {
            window: self.window - c.window as f64,
            inner: self.inner - c.inner as f64,
            pairs: self.pairs.iter().zip(&c.weighted).map(|(p, &x)| p - x).collect(),
        }
    }

    /// `(d_hat, g_hat)` for `trials` trials.
    fn estimate(&self, trials: f64, window_area: f64, areas: &[f64]) -> (f64, Vec<f64>) {
        let d = self.window / (trials * window_area);
        let g = self
            .pairs
            .iter()
            .zip(areas)
            .map(|(&p, &a)| if p > 0.0 && self.inner > 0.0 && d > 0.0 { p / (self.inner * d * a) } else { 0.0 })
            .collect();
        (d, g)
    }
}

fn jackknife_se(values: &[f64]) -> f64 {
    let t = values.len() as f64;
    let m = values.iter().sum::<f64>() / t;
    ((t - 1.0) / t * values.iter().map(|x| (x - m).powi(2)).sum::<f64>()).sqrt()
}

/// Edge-corrected pair-correlation estimator. Points with
/// `|zeta| <= window_radius - inner_margin` act as the first point of a pair;
/// each pair is weighted by the inverse fraction of its circle lying inside
/// the window (Ripley's isotropic correction). With `inner_margin` at least
/// the largest bin radius every weight is 1 and this is plain erosion.
pub fn pair_correlation(clouds: &[RescaledCloud], bins: &RadialBins, inner_margin: f64) -> Result<PairCorrEstimate> {
    pair_correlation_in_sector(clouds, bins, inner_margin, Sector::FULL)
}

/// Same as [`pair_correlation`] counting only pairs whose direction lies in `sector`.
pub fn pair_correlation_in_sector(
    clouds: &[RescaledCloud],
    bins: &RadialBins,
    inner_margin: f64,
    sector: Sector,
) -> Result<PairCorrEstimate> {
    if clouds.len() < 2 {
        return Err(Error::invalid("pair correlation needs at least two clouds"));
    }
    estimate_pair_correlation(clouds, bins, inner_margin, sector)
}

fn estimate_pair_correlation(
    clouds: &[RescaledCloud],
    bins: &RadialBins,
    inner_margin: f64,
    sector: Sector,
) -> Result<PairCorrEstimate> {
    let Some(first) = clouds.first() else {
        return Err(Error::invalid("no clouds"));
    };
    let window_radius = first.window_radius;
    if clouds.iter().any(|c| c.window_radius != window_radius) {
        return Err(Error::invalid("clouds have different window radii"));
    }
    if !(inner_margin >= 0.0) {
        return Err(Error::invalid("inner margin must be non-negative"));
    }
    if bins.max_radius() > window_radius {
        return Err(Error::invalid("bins extend beyond the window radius"));
    }
    if inner_margin < bins.max_radius() && sector != Sector::FULL {
        return Err(Error::invalid("sector estimates need an inner margin of at least the largest bin radius"));
    }
    let eroded = window_radius - inner_margin;
    if !(eroded > 0.0) {
        return Err(Error::invalid("inner margin leaves an empty eroded window"));
    }
    if !(sector.width > 0.0) {
        return Err(Error::invalid("sector width must be positive"));
    }

    let per_trial: Vec<TrialCounts> = clouds.par_iter().map(|c| count_trial(c, bins, eroded, sector)).collect();
    let trials = clouds.len();
    let t = trials as f64;
    let window_area = PI * window_radius * window_radius;
    let areas: Vec<f64> = bins.annulus_areas().iter().map(|a| a * sector.fraction()).collect();
    let totals = Totals::of(&per_trial, bins.len());
    let (density_hat, g_hat) = totals.estimate(t, window_area, &areas);

    let (std_err, density_std_err) = if trials >= 2 {
        let mut jk_g = vec![Vec::with_capacity(trials); bins.len()];
        let mut jk_d = Vec::with_capacity(trials);
        for c in &per_trial {
            let (d, g) = totals.without(c).estimate(t - 1.0, window_area, &areas);
            jk_d.push(d);
            for (k, v) in g.into_iter().enumerate() {
                jk_g[k].push(v);
            }
        }
        (jk_g.iter().map(|v| jackknife_se(v)).collect(), jackknife_se(&jk_d))
    } else {
        (vec![f64::INFINITY; bins.len()], f64::INFINITY)
    };

    let counts: Vec<u64> =
        (0..bins.len()).map(|k| per_trial.iter().map(|c| c.pairs[k]).sum()).collect();
    Ok(PairCorrEstimate {
        bin_edges: bins.edges.clone(),
        g_hat,
        empty_bins: counts.iter().map(|&c| c == 0).collect(),
        counts,
        density_hat,
        density_std_err,
        std_err,
        trials,
        window_radius,
        inner_margin,
        mean_inner_points: totals.inner / t,
    })
}

/// `log |e_n(x)|` where `e_n(x) = sum_{k<n} x^k / k!`, summed with a common
/// scale so no term overflows.
fn log_abs_truncated_exp(n: usize, x: Complex64) -> f64 {
    if x.norm() == 0.0 {
        return 0.0;
    }
    let (lr, theta) = (x.norm().ln(), x.arg());
    let mut log_mag = Vec::with_capacity(n);
    let mut log_fact = 0.0;
    for k in 0..n {
        if k > 0 {
            log_fact += (k as f64).ln();
        }
        log_mag.push(k as f64 * lr - log_fact);
    }
    let m = log_mag.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let s: Complex64 = log_mag
        .iter()
        .enumerate()
        .map(|(k, l)| Complex64::from_polar((l - m).exp(), k as f64 * theta))
        .sum();
    m + s.norm().ln()
}

/// Normalized two-point function of the `n x n` Ginibre ensemble (`A0 = 0`) at
/// `z0`, `g(r) = 1 - |K_n(z0+d, z0)|^2 / (K_n(z0+d, z0+d) K_n(z0, z0))` with
/// `|d| = r / sqrt(n)`, averaged over the direction of `d`.
pub fn ginibre_exact_pair(n: usize, z0: Complex64, r_values: &[f64]) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::invalid("n must be >= 1"));
    }
    if !(z0.norm() < 1.0) {
        return Err(Error::OutsideBulk { z: z0, value: z0.norm() });
    }
    let nf = n as f64;
    let directions = if z0.norm() == 0.0 { 1 } else { 32 };
    let log_k0 = log_abs_truncated_exp(n, Complex64::new(nf * z0.norm_sqr(), 0.0));
    Ok(r_values
        .iter()
        .map(|&r| {
            let mut acc = 0.0;
            for j in 0..directions {
                let d = Complex64::from_polar(r / nf.sqrt(), 2.0 * PI * j as f64 / directions as f64);
                let w = z0 + d;
                let cross = log_abs_truncated_exp(n, w * z0.conj() * nf);
                let diag = log_abs_truncated_exp(n, Complex64::new(nf * w.norm_sqr(), 0.0));
                acc += 1.0 - (2.0 * cross - diag - log_k0).exp();
            }
            acc / directions as f64
        })
        .collect())
}

/// [`ginibre_exact_pair`] averaged over each bin like [`RadialBins::average`].
pub fn ginibre_exact_binned(n: usize, z0: Complex64, bins: &RadialBins) -> Result<Vec<f64>> {
    ginibre_exact_pair(n, z0, &[0.0])?;
    Ok(bins.average(|r| ginibre_exact_pair(n, z0, &[r]).map_or(f64::NAN, |v| v[0])))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniversalCurve {
    pub rho: f64,
    pub r: Vec<f64>,
    /// `1 - exp(-rho r^2)`
    pub g: Vec<f64>,
    /// `rho^2 (1 - exp(-rho r^2))`
    pub p2: Vec<f64>,
}

pub fn universal_g(rho: f64, r: f64) -> f64 {
    -(-rho * r * r).exp_m1()
}

pub fn universal_prediction(rho: f64, r_values: &[f64]) -> Result<UniversalCurve> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::invalid(format!("rho must be positive, got {rho}")));
    }
    let g: Vec<f64> = r_values.iter().map(|&r| universal_g(rho, r)).collect();
    let p2 = g.iter().map(|g| rho * rho * g).collect();
    Ok(UniversalCurve { rho, r: r_values.to_vec(), g, p2 })
}

/// Acceptance thresholds for a universality run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub sup_distance: f64,
    pub density_resid: f64,
    /// Bins with centre above this radius are excluded from the sup-distance.
    pub r_max: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { sup_distance: 0.05, density_resid: 0.03, r_max: 3.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniversalityConfig {
    pub z0: Complex64,
    pub trials: usize,
    pub master_seed: u64,
    pub window_radius: f64,
    pub bins: RadialBins,
    /// See [`pair_correlation`].
    pub inner_margin: f64,
    pub thresholds: Thresholds,
    /// Tolerance of the fixed-point solve.
    pub tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniversalityReport {
    pub units: String,
    pub deformation: DeformationSpec,
    pub z0: Complex64,
    pub params: DetEquivParams,
    pub estimate: PairCorrEstimate,
    /// Bin-averaged `1 - exp(-rho r^2)`.
    pub prediction: Vec<f64>,
    pub sup_distance: f64,
    /// `|pi d_hat - rho|`
    pub density_residual: f64,
    pub z_scores: Vec<f64>,
    pub thresholds: Thresholds,
    pub eigensolver_failures: usize,
    /// False when there are too few trials for error estimates.
    pub reliable: bool,
    pub passed: bool,
}

/// Rescaled clouds at `z0` for trials `0..trials`, with the count of trials
/// lost to eigensolver failures.
pub fn simulate_clouds(
    spec: &DeformationSpec,
    z0: Complex64,
    window_radius: f64,
    trials: usize,
    master_seed: u64,
) -> Result<(Vec<RescaledCloud>, usize)> {
    let a0 = realize_deformation(spec)?;
    let n = spec.n;
    let results: Vec<Result<RescaledCloud>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let h = sample_with_deformation(&a0, master_seed, t)?;
            let eigs = linalg::eigenvalues(&h)?;
            Ok(rescale_eigenvalues(&eigs, n, z0, window_radius))
        })
        .collect();
    let mut clouds = Vec::with_capacity(trials);
    let mut failures = 0;
    for r in results {
        match r {
            Ok(c) => clouds.push(c),
            Err(Error::Decomposition(_)) => failures += 1,
            Err(e) => return Err(e),
        }
    }
    Ok((clouds, failures))
}

/// `sup |g_hat - prediction|` over bins whose centre is at most `r_max`.
pub fn sup_distance(bins: &RadialBins, g_hat: &[f64], prediction: &[f64], r_max: f64) -> f64 {
    bins.centers()
        .iter()
        .zip(g_hat.iter().zip(prediction))
        .filter(|(c, _)| **c <= r_max)
        .map(|(_, (g, p))| (g - p).abs())
        .fold(0.0, f64::max)
}

/// Deterministic equivalents at `z0`, Monte Carlo pair correlation, and the
/// comparison with `1 - exp(-rho r^2)`.
pub fn universality_report(spec: &DeformationSpec, config: &UniversalityConfig) -> Result<UniversalityReport> {
    let a0 = realize_deformation(spec)?;
    let params = deterministic_equivalents(&a0, config.z0, config.tol)?;
    if config.trials == 0 {
        return Err(Error::invalid("trials must be >= 1"));
    }
    let (clouds, failures) = simulate_clouds(spec, config.z0, config.window_radius, config.trials, config.master_seed)?;
    if clouds.is_empty() {
        return Err(Error::Decomposition("every trial failed".into()));
    }
    let estimate = estimate_pair_correlation(&clouds, &config.bins, config.inner_margin, Sector::FULL)?;
    let rho = params.rho;
    let prediction = config.bins.average(|r| universal_g(rho, r));
    let sup = sup_distance(&config.bins, &estimate.g_hat, &prediction, config.thresholds.r_max);
    let density_residual = (PI * estimate.density_hat - rho).abs();
    let z_scores = estimate
        .g_hat
        .iter()
        .zip(&prediction)
        .zip(&estimate.std_err)
        .map(|((g, p), s)| if *s > 0.0 { (g - p) / s } else { 0.0 })
        .collect();
    let reliable = clouds.len() >= 2;
    let passed = reliable && sup < config.thresholds.sup_distance && density_residual < config.thresholds.density_resid;
    Ok(UniversalityReport {
        units: "rescaled coordinates zeta = sqrt(n)(z - z0)".into(),
        deformation: spec.clone(),
        z0: config.z0,
        params,
        estimate,
        prediction,
        sup_distance: sup,
        density_residual,
        z_scores,
        thresholds: config.thresholds,
        eigensolver_failures: failures,
        reliable,
        passed,
    })
}
