//! Deterministic equivalents at a point `z0`.
//!
//! Everything here is a function of the singular spectrum of `A_z = A0 - z`:
//! the fixed point `u_*` of `n^-1 sum (u^2 + lambda_k^2)^-1 = 1`, the traces
//! built from `G = (A_z A_z* + u_*^2)^-1` and `G_* = (A_z* A_z + u_*^2)^-1`,
//! the support functional `n^-1 sum lambda_k^-2` and the saddle profile
//! `f(u) = n^-1 sum log(u^2 + lambda_k^2) - u^2`.
//!
//! The spectrum-level routines are generic over [`Real`]; the ones that need
//! singular vectors work in `f64`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contour::{self, ScanGrid, Segment};
use crate::error::{Error, Result};
use crate::linalg;
use crate::matrix::ComplexMatrix;
use crate::scalar::{pairwise_sum, Real};
use crate::Complex64;

/// Squared singular values of `A0 - z`, ascending.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftedSpectrum<T> {
    pub z: Complex64,
    pub lambda_sq: Vec<T>,
}

impl<T: Real> ShiftedSpectrum<T> {
    pub fn from_lambda_sq(z: Complex64, mut lambda_sq: Vec<T>) -> Result<Self> {
        if lambda_sq.is_empty() {
            return Err(Error::invalid("empty spectrum"));
        }
        if lambda_sq.iter().any(|&l| !(l >= T::zero()) || !l.is_finite()) {
            return Err(Error::invalid("squared singular values must be finite and non-negative"));
        }
        lambda_sq.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
        Ok(Self { z, lambda_sq })
    }

    pub fn n(&self) -> usize {
        self.lambda_sq.len()
    }

    fn inv_n(&self) -> T {
        T::one() / T::from_usize_lossy(self.n())
    }

    /// `n^-1 sum lambda_k^-2`; `+inf` as soon as one `lambda_k` vanishes.
    pub fn mean_inverse(&self) -> T {
        if self.lambda_sq.iter().any(|&l| l == T::zero()) {
            return T::infinity();
        }
        let terms: Vec<T> = self.lambda_sq.iter().map(|&l| l.recip()).collect();
        pairwise_sum(&terms) * self.inv_n()
    }

    /// `n^-1 sum (u^2 + lambda_k^2)^-1`, i.e. `n^-1 Tr G(u)`.
    pub fn resolvent_trace(&self, u: T) -> T {
        let u2 = u * u;
        let terms: Vec<T> = self.lambda_sq.iter().map(|&l| (u2 + l).recip()).collect();
        pairwise_sum(&terms) * self.inv_n()
    }

    /// `n^-1 sum (lambda_k^2 + eps^2)^-1`, the quantity of assumption (A3).
    pub fn regularized_trace(&self, eps: T) -> T {
        self.resolvent_trace(eps)
    }

    pub fn max_lambda_sq(&self) -> T {
        *self.lambda_sq.last().expect("non-empty spectrum")
    }

    pub fn cast<U: Real>(&self) -> ShiftedSpectrum<U> {
        ShiftedSpectrum {
            z: self.z,
            lambda_sq: self.lambda_sq.iter().map(|&l| U::from(l).expect("castable")).collect(),
        }
    }
}

/// Squared singular values of `A0 - z`, from a singular value decomposition
/// of `A0 - z` itself.
pub fn shifted_spectrum(a0: &ComplexMatrix, z: Complex64) -> Result<ShiftedSpectrum<f64>> {
    a0.ensure_square()?;
    let s = linalg::singular_values(&a0.shifted(z))?;
    ShiftedSpectrum::from_lambda_sq(z, s.iter().map(|x| x * x).collect())
}

/// Unique positive root of `n^-1 sum (u^2 + lambda_k^2)^-1 = 1`.
///
/// Safeguarded Newton inside a bisection bracket; the left end starts at
/// `tol` and is halved until the map exceeds one there.
pub fn solve_u_star<T: Real>(spec: &ShiftedSpectrum<T>, tol: T) -> Result<T> {
    if !(tol > T::zero()) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let bulk = spec.mean_inverse();
    if !(bulk > T::one()) {
        return Err(Error::OutsideBulk { z: spec.z, value: bulk.to_f64().unwrap_or(f64::NAN) });
    }
    let phi = |u: T| spec.resolvent_trace(u) - T::one();
    let mut lo = tol;
    let mut halvings = 0;
    while phi(lo) <= T::zero() {
        lo = lo / T::lit(2.0);
        halvings += 1;
        if halvings > 2000 || lo == T::zero() {
            return Err(Error::Numerical("could not bracket the fixed point from the left".into()));
        }
    }
    let mut hi = T::lit(2.0) + spec.max_lambda_sq().sqrt();
    if phi(hi) >= T::zero() {
        return Err(Error::Numerical("right bracket end does not satisfy n^-1 Tr G < 1".into()));
    }

    let two = T::lit(2.0);
    let mut u = (lo + hi) / two;
    for _ in 0..500 {
        let value = phi(u);
        if value > T::zero() {
            lo = u;
        } else {
            hi = u;
        }
        let u2 = u * u;
        let dterms: Vec<T> = spec.lambda_sq.iter().map(|&l| two * u / ((u2 + l) * (u2 + l))).collect();
        let deriv = -pairwise_sum(&dterms) * spec.inv_n();
        let newton = u - value / deriv;
        let next = if newton > lo && newton < hi && newton.is_finite() { newton } else { (lo + hi) / two };
        let step = (next - u).abs();
        u = next;
        if step <= tol * u || (hi - lo) <= tol * lo {
            break;
        }
    }
    Ok(u)
}

/// The deterministic-equivalent scalars at `(A0, z0)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetEquivParams {
    pub z: Complex64,
    pub n: usize,
    pub u_star: f64,
    /// `n^-1 Tr G^2`
    pub g2: f64,
    /// `n^-1 Tr A_z G`
    pub k_a: Complex64,
    /// `n^-1 Tr A_z G^2`
    pub h_a: Complex64,
    /// `n^-1 Tr (A_z G)^2`
    pub f_a: Complex64,
    /// `n^-1 Tr G G_*`
    pub trace_g_gstar: f64,
    pub rho: f64,
    /// `-f''(u_*)`
    pub c2: f64,
    /// `n^-1 Tr G(u_*) - 1`
    pub residual: f64,
    pub in_bulk: bool,
}

/// Traces of `G`, `G_*` and `A_z` formed from the SVD `A_z = U S V*`:
/// `G = U g U*`, `G_* = V g V*` with `g_i = (s_i^2 + u^2)^-1`.
pub fn scalar_params(a0: &ComplexMatrix, z: Complex64, u_star: f64) -> Result<DetEquivParams> {
    let n = a0.ensure_square()?;
    if !(u_star > 0.0 && u_star.is_finite()) {
        return Err(Error::invalid("u_star must be positive and finite"));
    }
    let az = a0.shifted(z);
    let f = linalg::svd(&az)?;
    let u2 = u_star * u_star;
    let g: Vec<f64> = f.s.iter().map(|s| 1.0 / (s * s + u2)).collect();
    let inv_n = 1.0 / n as f64;

    // W = V* U, so that A_z G = U S W g U*
    let w = &f.v.adjoint() * &f.u;

    let g2 = pairwise_sum(&g.iter().map(|x| x * x).collect::<Vec<_>>()) * inv_n;
    if !(g2 > 0.0) {
        return Err(Error::Numerical(format!("g2 = {g2} is not positive")));
    }
    let mut k_a = Complex64::new(0.0, 0.0);
    let mut h_a = Complex64::new(0.0, 0.0);
    for i in 0..n {
        k_a += w[(i, i)] * (f.s[i] * g[i]);
        h_a += w[(i, i)] * (f.s[i] * g[i] * g[i]);
    }
    k_a *= inv_n;
    h_a *= inv_n;

    // Tr (S W g)^2 = sum_ij s_i W_ij g_j s_j W_ji g_i
    let mut f_a = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            f_a += w[(i, j)] * w[(j, i)] * (f.s[i] * g[j] * f.s[j] * g[i]);
        }
    }
    f_a *= inv_n;

    // Tr G G_* = sum_ij g_i |(U* V)_ij|^2 g_j = sum_ij g_i |W_ji|^2 g_j
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let row: Vec<f64> = (0..n).map(|j| g[i] * w[(j, i)].norm_sqr() * g[j]).collect();
        rows.push(pairwise_sum(&row));
    }
    let trace_g_gstar = pairwise_sum(&rows) * inv_n;

    let rho = u2 * trace_g_gstar + h_a.norm_sqr() / g2;
    let spectrum = ShiftedSpectrum::from_lambda_sq(z, f.s.iter().map(|s| s * s).collect())?;
    let saddle = saddle_values(&spectrum, u_star)?;
    let residual = pairwise_sum(&g) * inv_n - 1.0;
    let in_bulk = spectrum.mean_inverse() > 1.0;

    Ok(DetEquivParams {
        z,
        n,
        u_star,
        g2,
        k_a,
        h_a,
        f_a,
        trace_g_gstar,
        rho,
        c2: -saddle.d2f,
        residual,
        in_bulk,
    })
}

/// Spectrum, fixed point and scalar characteristics in one call.
pub fn deterministic_equivalents(a0: &ComplexMatrix, z: Complex64, tol: f64) -> Result<DetEquivParams> {
    let spectrum = shifted_spectrum(a0, z)?;
    let u = solve_u_star(&spectrum, tol)?;
    scalar_params(a0, z, u)
}

/// `z` lies in the support when `n^-1 sum lambda_k^-2 >= 1`.
pub fn in_support(a0: &ComplexMatrix, z: Complex64) -> Result<bool> {
    Ok(shifted_spectrum(a0, z)?.mean_inverse() >= 1.0)
}

/// `n^-1 sum lambda_k^-2(z) - 1`; non-negative exactly on the support.
pub fn support_functional(a0: &ComplexMatrix, z: Complex64) -> Result<f64> {
    Ok(shifted_spectrum(a0, z)?.mean_inverse() - 1.0)
}

/// `f`, `f'`, `f''` at one point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaddleValues<T> {
    pub u: T,
    pub f: T,
    pub df: T,
    pub d2f: T,
}

pub fn saddle_values<T: Real>(spec: &ShiftedSpectrum<T>, u: T) -> Result<SaddleValues<T>> {
    let u2 = u * u;
    if u2 == T::zero() && spec.lambda_sq.iter().any(|&l| l == T::zero()) {
        return Err(Error::Domain("log(u^2 + lambda^2) is singular at u = 0 with a zero singular value".into()));
    }
    if !u.is_finite() {
        return Err(Error::Domain("u must be finite".into()));
    }
    let two = T::lit(2.0);
    let inv_n = spec.inv_n();
    let logs: Vec<T> = spec.lambda_sq.iter().map(|&l| (u2 + l).ln()).collect();
    let d1: Vec<T> = spec.lambda_sq.iter().map(|&l| two * u / (u2 + l)).collect();
    let d2: Vec<T> = spec.lambda_sq.iter().map(|&l| two * (l - u2) / ((u2 + l) * (u2 + l))).collect();
    Ok(SaddleValues {
        u,
        f: pairwise_sum(&logs) * inv_n - u2,
        df: pairwise_sum(&d1) * inv_n - two * u,
        d2f: pairwise_sum(&d2) * inv_n - two,
    })
}

/// Saddle profile over a list of `u`; `u <= 0` with a zero singular value is
/// a domain error.
pub fn f_profile<T: Real>(spec: &ShiftedSpectrum<T>, u_values: &[T]) -> Result<Vec<SaddleValues<T>>> {
    let has_zero = spec.lambda_sq.iter().any(|&l| l == T::zero());
    u_values
        .iter()
        .map(|&u| {
            if has_zero && u <= T::zero() {
                Err(Error::Domain(format!("u = {u} <= 0 with a zero singular value")))
            } else {
                saddle_values(spec, u)
            }
        })
        .collect()
}

/// User constants of assumptions (A1) and (A3).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssumptionConfig {
    pub eps: f64,
    pub d1: f64,
    pub m: f64,
}

impl Default for AssumptionConfig {
    fn default() -> Self {
        Self { eps: 0.1, d1: 0.01, m: 10.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn build(values: &[f64], bins: usize) -> Self {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
        let width = (hi - lo) / bins as f64;
        let edges = (0..=bins).map(|k| lo + k as f64 * width).collect();
        let mut counts = vec![0; bins];
        for &v in values {
            let k = (((v - lo) / width) as usize).min(bins - 1);
            counts[k] += 1;
        }
        Self { edges, counts }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub z: Complex64,
    pub config: AssumptionConfig,
    /// `n^-1 sum |A0_ij|^2`
    pub a1_value: f64,
    pub a1_ok: bool,
    /// Convergence of the singular spectrum is asymptotic; only reported.
    pub a2_note: String,
    pub nu_histogram: Histogram,
    /// `n^-1 Tr (Y0(z) + eps^2)^-1`
    pub a3_value: f64,
    pub a3_ok: bool,
}

pub fn check_assumptions(a0: &ComplexMatrix, z: Complex64, config: AssumptionConfig) -> Result<AssumptionReport> {
    let n = a0.ensure_square()?;
    let spectrum = shifted_spectrum(a0, z)?;
    let a1_value = a0.as_slice().iter().map(|x| x.norm_sqr()).sum::<f64>() / n as f64;
    let a3_value = spectrum.regularized_trace(config.eps);
    Ok(AssumptionReport {
        z,
        config,
        a1_value,
        a1_ok: a1_value < config.m,
        a2_note: format!(
            "(A2) is a large-n statement; the empirical singular spectrum of A0 - z at n = {n} is attached for comparison across n"
        ),
        nu_histogram: Histogram::build(&spectrum.lambda_sq, 20.min(n.max(1))),
        a3_value,
        a3_ok: a3_value > 1.0 + config.d1,
    })
}

/// Level set `n^-1 sum lambda_k^-2(z) = 1` over a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportContour {
    pub grid: ScanGrid,
    pub segments: Vec<Segment>,
    pub polylines: Vec<Vec<Complex64>>,
    /// Number of grid nodes inside the support.
    pub inside_nodes: usize,
}

impl SupportContour {
    pub fn points(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.segments.iter().flat_map(|s| [s.a, s.b])
    }
}

fn field_values(a0: &ComplexMatrix, grid: &ScanGrid) -> Result<Vec<f64>> {
    grid.nodes().into_par_iter().map(|z| support_functional(a0, z)).collect()
}

/// Marching squares on the support functional, each crossing refined by
/// bisection along its grid edge.
pub fn support_boundary_scan(a0: &ComplexMatrix, grid: &ScanGrid) -> Result<SupportContour> {
    a0.ensure_square()?;
    grid.validate()?;
    let values = field_values(a0, grid)?;
    let inside_nodes = values.iter().filter(|&&v| v >= 0.0).count();
    let target = 1e-12 * grid.step();
    let mut failure = None;
    let (segments, polylines) = contour::marching_squares(grid, &values, 0.0, |p_in, p_out| {
        let (mut a, mut b) = (p_in, p_out);
        while (b - a).norm() > target {
            let m = (a + b) / 2.0;
            match support_functional(a0, m) {
                Ok(v) if v >= 0.0 => a = m,
                Ok(_) => b = m,
                Err(e) => {
                    failure.get_or_insert(e);
                    break;
                }
            }
        }
        (a + b) / 2.0
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(SupportContour { grid: *grid, segments, polylines, inside_nodes })
}

/// A bulk point chosen from a scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BulkPick {
    pub z: Complex64,
    pub u_star: f64,
    pub a3_value: f64,
    /// `a3_value - 1`, the realised `d1(z)` margin.
    pub d1_margin: f64,
    pub candidates: usize,
}

/// Among grid nodes strictly inside the support that pass the (A3) check,
/// returns the one with the largest `u_*` (the fixed point shrinks to zero at
/// the edge). Ties go to the first node in row-major order.
pub fn pick_bulk_point(a0: &ComplexMatrix, grid: &ScanGrid, config: AssumptionConfig, tol: f64) -> Result<BulkPick> {
    a0.ensure_square()?;
    grid.validate()?;
    let scored: Vec<Option<(Complex64, f64, f64)>> = grid
        .nodes()
        .into_par_iter()
        .map(|z| -> Result<Option<(Complex64, f64, f64)>> {
            let spectrum = shifted_spectrum(a0, z)?;
            let a3 = spectrum.regularized_trace(config.eps);
            if !(spectrum.mean_inverse() > 1.0) || !(a3 > 1.0 + config.d1) {
                return Ok(None);
            }
            Ok(Some((z, solve_u_star(&spectrum, tol)?, a3)))
        })
        .collect::<Result<_>>()?;
    let candidates = scored.iter().flatten().count();
    let best = scored
        .into_iter()
        .flatten()
        .fold(None::<(Complex64, f64, f64)>, |best, c| match best {
            Some(b) if b.1 >= c.1 => Some(b),
            _ => Some(c),
        })
        .ok_or_else(|| Error::OutsideBulk { z: Complex64::new(f64::NAN, f64::NAN), value: f64::NAN })?;
    Ok(BulkPick { z: best.0, u_star: best.1, a3_value: best.2, d1_margin: best.2 - 1.0, candidates })
}
