//! Global spectral computations on sampled matrices.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{realize_deformation, sample_with_deformation, DeformationSpec};
use crate::error::{Error, Result};
use crate::linalg;
use crate::matrix::ComplexMatrix;
use crate::scalar::{log_sum_exp, mean_and_stderr, pairwise_sum};
use crate::Complex64;

/// Eigenvalues of one draw of `A0 + H0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenSample {
    pub n: usize,
    pub master_seed: u64,
    pub trial_index: u64,
    pub deformation: DeformationSpec,
    pub eigenvalues: Vec<Complex64>,
}

pub fn eigenvalues(h: &ComplexMatrix) -> Result<Vec<Complex64>> {
    linalg::eigenvalues(h)
}

/// `|sum lambda_j - Tr H|`.
pub fn trace_residual(h: &ComplexMatrix, eigs: &[Complex64]) -> f64 {
    (eigs.iter().sum::<Complex64>() - h.trace()).norm()
}

/// Samples and diagonalizes one trial.
pub fn sample_eigenvalues(spec: &DeformationSpec, a0: &ComplexMatrix, master_seed: u64, trial_index: u64) -> Result<EigenSample> {
    let h = sample_with_deformation(a0, master_seed, trial_index)?;
    let eigenvalues = eigenvalues(&h)?;
    Ok(EigenSample { n: spec.n, master_seed, trial_index, deformation: spec.clone(), eigenvalues })
}

/// Samples trials `0..trials` in parallel. Results come back in trial order;
/// trials whose eigensolver fails are skipped and their indices returned.
pub fn sample_eigen_batch(spec: &DeformationSpec, master_seed: u64, trials: usize) -> Result<(Vec<EigenSample>, Vec<u64>)> {
    let a0 = realize_deformation(spec)?;
    let results: Vec<(u64, Result<EigenSample>)> = (0..trials as u64)
        .into_par_iter()
        .map(|t| (t, sample_eigenvalues(spec, &a0, master_seed, t)))
        .collect();
    let mut samples = Vec::with_capacity(trials);
    let mut failed = Vec::new();
    for (t, r) in results {
        match r {
            Ok(s) => samples.push(s),
            Err(Error::Decomposition(_)) => failed.push(t),
            Err(e) => return Err(e),
        }
    }
    Ok((samples, failed))
}

/// Fraction of eigenvalues with `|z - center| <= r`.
pub fn radial_fraction(eigs: &[Complex64], center: Complex64, r: f64) -> f64 {
    eigs.iter().filter(|z| (**z - center).norm() <= r).count() as f64 / eigs.len() as f64
}

/// Built-in smooth compactly supported test functions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    /// `exp(1 - 1 / (1 - |z - c|^2 / r^2))` on `|z - c| < r`.
    Bump { center: Complex64, radius: f64 },
}

impl TestFunction {
    pub fn bump(center: Complex64, radius: f64) -> Self {
        TestFunction::Bump { center, radius }
    }

    pub fn center(&self) -> Complex64 {
        match *self {
            TestFunction::Bump { center, .. } => center,
        }
    }

    pub fn radius(&self) -> f64 {
        match *self {
            TestFunction::Bump { radius, .. } => radius,
        }
    }

    pub fn value(&self, z: Complex64) -> f64 {
        let TestFunction::Bump { center, radius } = *self;
        let s = (z - center).norm_sqr() / (radius * radius);
        if s >= 1.0 {
            0.0
        } else {
            (1.0 - 1.0 / (1.0 - s)).exp()
        }
    }

    /// Two-dimensional Laplacian `d_xx + d_yy`, analytically.
    pub fn laplacian(&self, z: Complex64) -> f64 {
        let TestFunction::Bump { center, radius } = *self;
        let r2 = radius * radius;
        let s = (z - center).norm_sqr() / r2;
        if s >= 1.0 {
            return 0.0;
        }
        let w = 1.0 - s;
        let g = (1.0 - 1.0 / w).exp();
        let g1 = -g / (w * w);
        let g2 = g * (1.0 / w.powi(4) - 2.0 / w.powi(3));
        // radial function of s = rho^2 / r^2: Laplacian = (4 / r^2)(s g'' + g')
        4.0 / r2 * (s * g2 + g1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GirkoResult {
    /// `sum_j f(z_j)`
    pub lhs: f64,
    /// `(4 pi)^-1 sum_cells Laplacian f * log det Y * h^2`
    pub rhs: f64,
    pub rel_err: f64,
    pub resolution: usize,
    pub grid_step: f64,
    /// Grid points where a singular value of `H - z` hit the floor.
    pub flagged_points: usize,
}

/// Girko's identity for one matrix, with the midpoint rule on a
/// `resolution x resolution` grid over the square `[c - r - margin, c + r + margin]^2`.
pub fn girko_check_matrix(h: &ComplexMatrix, f: &TestFunction, resolution: usize, margin: f64) -> Result<GirkoResult> {
    h.ensure_square()?;
    if resolution == 0 {
        return Err(Error::invalid("girko grid resolution must be positive"));
    }
    let eigs = eigenvalues(h)?;
    let lhs = pairwise_sum(&eigs.iter().map(|&z| f.value(z)).collect::<Vec<_>>());

    let half = f.radius() + margin;
    let step = 2.0 * half / resolution as f64;
    let origin = f.center() - Complex64::new(half, half);
    let rows: Vec<(f64, usize)> = (0..resolution)
        .into_par_iter()
        .map(|j| -> Result<(f64, usize)> {
            let mut row = Vec::with_capacity(resolution);
            let mut flagged = 0;
            for i in 0..resolution {
                let z = origin + Complex64::new((i as f64 + 0.5) * step, (j as f64 + 0.5) * step);
                let lap = f.laplacian(z);
                if lap == 0.0 {
                    continue;
                }
                let (logdet, floored) = linalg::log_det_gram(&h.shifted(z))?;
                if floored > 0 {
                    flagged += 1;
                }
                row.push(lap * logdet);
            }
            Ok((pairwise_sum(&row), flagged))
        })
        .collect::<Result<_>>()?;
    let sum = pairwise_sum(&rows.iter().map(|r| r.0).collect::<Vec<_>>());
    let flagged_points = rows.iter().map(|r| r.1).sum();
    let rhs = sum * step * step / (4.0 * std::f64::consts::PI);
    let rel_err = if lhs != 0.0 { (lhs - rhs).abs() / lhs.abs() } else { f64::INFINITY };
    Ok(GirkoResult { lhs, rhs, rel_err, resolution, grid_step: step, flagged_points })
}

/// Girko's identity for trial `trial_index` of the deformed ensemble.
pub fn girko_check(
    spec: &DeformationSpec,
    master_seed: u64,
    trial_index: u64,
    f: &TestFunction,
    resolution: usize,
) -> Result<GirkoResult> {
    let a0 = realize_deformation(spec)?;
    let h = sample_with_deformation(&a0, master_seed, trial_index)?;
    girko_check_matrix(&h, f, resolution, 0.05 * f.radius())
}

/// Smallest singular value of `H - z`.
pub fn sigma_min(h: &ComplexMatrix, z: Complex64) -> Result<f64> {
    Ok(linalg::singular_values(&h.shifted(z))?[0])
}

/// `n sigma_1(H - z0)^2` over trials; a diagnostic with no asserted law.
pub fn sigma_min_samples(spec: &DeformationSpec, z0: Complex64, trials: usize, master_seed: u64) -> Result<Vec<f64>> {
    let a0 = realize_deformation(spec)?;
    let n = spec.n as f64;
    (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let h = sample_with_deformation(&a0, master_seed, t)?;
            let s = sigma_min(&h, z0)?;
            Ok(n * s * s)
        })
        .collect()
}

/// Arguments of the generating functional. The smoothing parameters are
/// given in units of `1/n`: `det` is evaluated at `eps_j / n` and `eps' / n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenFunctionalArgs {
    pub z0: Complex64,
    pub zeta: [Complex64; 2],
    pub zeta_prime: [Complex64; 2],
    pub eps_hat: [f64; 2],
    pub eps_prime: f64,
}

impl GenFunctionalArgs {
    /// The same arguments with `(zeta_1, eps_1)` and `(zeta_2, eps_2)` swapped.
    pub fn swapped(&self) -> Self {
        Self {
            z0: self.z0,
            zeta: [self.zeta[1], self.zeta[0]],
            zeta_prime: [self.zeta_prime[1], self.zeta_prime[0]],
            eps_hat: [self.eps_hat[1], self.eps_hat[0]],
            eps_prime: self.eps_prime,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.eps_hat[0] > 0.0 && self.eps_hat[1] > 0.0 && self.eps_prime > 0.0) {
            return Err(Error::invalid("smoothing parameters must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenFunctionalPoint {
    pub args: GenFunctionalArgs,
    pub estimate: f64,
    pub std_error: f64,
    pub trials: usize,
    /// Trials whose ratio overflowed `f64` and were averaged in log space.
    pub log_space_trials: usize,
}

fn log_det_regularized(h: &ComplexMatrix, z: Complex64, eps: f64) -> Result<f64> {
    let s = linalg::singular_values(&h.shifted(z))?;
    let terms: Vec<f64> = s.iter().map(|x| (x * x + eps * eps).ln()).collect();
    Ok(pairwise_sum(&terms))
}

/// Log of `prod_j det(Y(z_j) + (eps_j/n)^2) / det(Y(z'_j) + (eps'/n)^2)` for one matrix.
pub fn gen_functional_log_ratio(h: &ComplexMatrix, args: &GenFunctionalArgs) -> Result<f64> {
    let n = h.ensure_square()? as f64;
    let sqrt_n = n.sqrt();
    let mut total = 0.0;
    for j in 0..2 {
        let z = args.z0 + args.zeta[j] / sqrt_n;
        let zp = args.z0 + args.zeta_prime[j] / sqrt_n;
        total += log_det_regularized(h, z, args.eps_hat[j] / n)?;
        total -= log_det_regularized(h, zp, args.eps_prime / n)?;
    }
    Ok(total)
}

/// Monte Carlo mean of the generating functional over trials `0..trials`.
pub fn gen_functional_mc(
    spec: &DeformationSpec,
    args: &GenFunctionalArgs,
    trials: usize,
    master_seed: u64,
) -> Result<GenFunctionalPoint> {
    args.validate()?;
    if trials == 0 {
        return Err(Error::invalid("trials must be >= 1"));
    }
    let a0 = realize_deformation(spec)?;
    let logs: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|t| gen_functional_log_ratio(&sample_with_deformation(&a0, master_seed, t)?, args))
        .collect::<Result<_>>()?;
    let ratios: Vec<f64> = logs.iter().map(|l| l.exp()).collect();
    let log_space_trials = ratios.iter().filter(|r| !r.is_finite()).count();
    let (estimate, std_error) = if log_space_trials == 0 {
        mean_and_stderr(&ratios)
    } else {
        // mean and standard error computed on ratios scaled by the largest one
        let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let scaled: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
        let (m, se) = mean_and_stderr(&scaled);
        let log_mean = log_sum_exp(&logs) - (trials as f64).ln();
        (log_mean.exp(), se / m * log_mean.exp())
    };
    Ok(GenFunctionalPoint { args: *args, estimate, std_error, trials, log_space_trials })
}

/// One rung of the smoothing ladder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothingPoint {
    pub eps: [f64; 2],
    /// `|E[L(z1) L(z2)] - E[L_eps(z1) L_eps(z2)]|`, paired over the same draws.
    pub delta: f64,
    pub delta_se: f64,
    /// `delta / (eps1 eps2)`; absent when a smoothing parameter is zero.
    pub bound_ratio: Option<f64>,
    pub bound_ratio_se: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothingLadder {
    pub z: [Complex64; 2],
    pub trials: usize,
    pub points: Vec<SmoothingPoint>,
    /// Least-squares slope of `bound_ratio` against the rung index (rungs
    /// ordered by decreasing `eps`).
    pub slope: f64,
    /// Jackknife standard error of the slope.
    pub slope_se: f64,
}

impl SmoothingLadder {
    /// Non-positive trend within two standard errors.
    pub fn bounded(&self) -> bool {
        self.slope <= 2.0 * self.slope_se
    }
}

/// Per-trial `L(z1) L(z2) - L_eps(z1) L_eps(z2)` for each rung, where
/// `L_eps(z) = log det(Y(z) + (eps/n)^2)`.
fn smoothing_differences(
    spec: &DeformationSpec,
    z: [Complex64; 2],
    ladder: &[[f64; 2]],
    trials: usize,
    master_seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let a0 = realize_deformation(spec)?;
    let n = spec.n as f64;
    (0..trials as u64)
        .into_par_iter()
        .map(|t| -> Result<Vec<f64>> {
            let h = sample_with_deformation(&a0, master_seed, t)?;
            let s1 = linalg::singular_values(&h.shifted(z[0]))?;
            let s2 = linalg::singular_values(&h.shifted(z[1]))?;
            let ld = |s: &[f64], eps: f64| pairwise_sum(&s.iter().map(|x| (x * x + eps * eps).ln()).collect::<Vec<_>>());
            let base = ld(&s1, 0.0) * ld(&s2, 0.0);
            Ok(ladder.iter().map(|e| base - ld(&s1, e[0] / n) * ld(&s2, e[1] / n)).collect())
        })
        .collect()
}

pub fn logdet_smoothing_check(
    spec: &DeformationSpec,
    z: [Complex64; 2],
    eps: [f64; 2],
    trials: usize,
    master_seed: u64,
) -> Result<SmoothingPoint> {
    let ladder = smoothing_ladder(spec, z, &[eps], trials, master_seed)?;
    Ok(ladder.points.into_iter().next().expect("one rung"))
}

fn ladder_stats(ladder: &[[f64; 2]], sums: &[f64], count: f64) -> (Vec<f64>, Vec<Option<f64>>) {
    let deltas: Vec<f64> = sums.iter().map(|s| (s / count).abs()).collect();
    let ratios = deltas
        .iter()
        .zip(ladder)
        .map(|(d, e)| if e[0] * e[1] > 0.0 { Some(d / (e[0] * e[1])) } else { None })
        .collect();
    (deltas, ratios)
}

fn ls_slope(ys: &[f64]) -> f64 {
    let k = ys.len() as f64;
    if ys.len() < 2 {
        return 0.0;
    }
    let xm = (k - 1.0) / 2.0;
    let ym = ys.iter().sum::<f64>() / k;
    let num: f64 = ys.iter().enumerate().map(|(i, y)| (i as f64 - xm) * (y - ym)).sum();
    let den: f64 = (0..ys.len()).map(|i| (i as f64 - xm).powi(2)).sum();
    num / den
}

/// Paired Monte Carlo over a ladder of smoothing parameters, with jackknife
/// errors for each rung and for the trend slope.
pub fn smoothing_ladder(
    spec: &DeformationSpec,
    z: [Complex64; 2],
    ladder: &[[f64; 2]],
    trials: usize,
    master_seed: u64,
) -> Result<SmoothingLadder> {
    if trials < 2 {
        return Err(Error::invalid("smoothing check needs at least two trials"));
    }
    if ladder.iter().any(|e| !(e[0] >= 0.0 && e[1] >= 0.0)) {
        return Err(Error::invalid("smoothing parameters must be non-negative"));
    }
    let diffs = smoothing_differences(spec, z, ladder, trials, master_seed)?;
    let rungs = ladder.len();
    let sums: Vec<f64> = (0..rungs)
        .map(|k| pairwise_sum(&diffs.iter().map(|d| d[k]).collect::<Vec<_>>()))
        .collect();
    let t = trials as f64;
    let (deltas, ratios) = ladder_stats(ladder, &sums, t);
    let full_ratio: Vec<f64> = ratios.iter().map(|r| r.unwrap_or(0.0)).collect();
    let slope = ls_slope(&full_ratio);

    // delete-one jackknife
    let mut jk_delta = vec![Vec::with_capacity(trials); rungs];
    let mut jk_ratio = vec![Vec::with_capacity(trials); rungs];
    let mut jk_slope = Vec::with_capacity(trials);
    for d in &diffs {
        let loo: Vec<f64> = (0..rungs).map(|k| sums[k] - d[k]).collect();
        let (dl, rl) = ladder_stats(ladder, &loo, t - 1.0);
        for k in 0..rungs {
            jk_delta[k].push(dl[k]);
            jk_ratio[k].push(rl[k].unwrap_or(0.0));
        }
        jk_slope.push(ls_slope(&rl.iter().map(|r| r.unwrap_or(0.0)).collect::<Vec<_>>()));
    }
    let jackknife_se = |xs: &[f64]| -> f64 {
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        ((t - 1.0) / t * xs.iter().map(|x| (x - m).powi(2)).sum::<f64>()).sqrt()
    };
    let points = (0..rungs)
        .map(|k| SmoothingPoint {
            eps: ladder[k],
            delta: deltas[k],
            delta_se: jackknife_se(&jk_delta[k]),
            bound_ratio: ratios[k],
            bound_ratio_se: ratios[k].map(|_| jackknife_se(&jk_ratio[k])),
        })
        .collect();
    Ok(SmoothingLadder { z, trials, points, slope, slope_se: jackknife_se(&jk_slope) })
}
