//! Numerical and symbolic verification of the Gaussian, superdeterminant,
//! Berezinian, Hubbard-Stratonovich and change-of-variables identities.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_4, PI};

use num_rational::Rational64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grassmann::{berezin_integrate, GrassmannElement};
use super::supermatrix::{GMatrix, SuperMatrix};
use crate::error::{Error, Result};
use crate::linalg;
use crate::matrix::ComplexMatrix;
use crate::quadrature::{gauss_hermite, integrate, integrate_2d};
use crate::rng::{self, Domain};
use crate::Complex64;

type G = GrassmannElement<Complex64>;
type Q = GrassmannElement<Rational64>;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn complex_rel_err(a: Complex64, b: Complex64) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

pub fn random_complex_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    })
}

/// `X X* / n + I`, comfortably positive definite.
pub fn random_hpd<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let x = random_complex_matrix(n, n, rng);
    let mut m = (&x * &x.adjoint()).scale(c(1.0 / n as f64));
    for i in 0..n {
        m[(i, i)] += 1.0;
    }
    m
}

/// Cholesky test for a Hermitian positive definite matrix.
pub fn is_hpd(m: &ComplexMatrix) -> bool {
    let Ok(n) = m.ensure_square() else { return false };
    if m.max_abs_diff(&m.adjoint()) > 1e-12 * m.frobenius_norm().max(1.0) {
        return false;
    }
    let mut l = vec![Complex64::new(0.0, 0.0); n * n];
    for j in 0..n {
        let mut d = m[(j, j)].re;
        for k in 0..j {
            d -= l[j * n + k].norm_sqr();
        }
        if !(d > 0.0) {
            return false;
        }
        let djj = d.sqrt();
        l[j * n + j] = c(djj);
        for i in j + 1..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k].conj();
            }
            l[i * n + j] = s / djj;
        }
    }
    true
}

fn min_hermitian_eigenvalue(m: &ComplexMatrix) -> Result<f64> {
    Ok(linalg::eigenvalues(m)?.iter().map(|z| z.re).fold(f64::INFINITY, f64::min))
}

/// One line of a verification report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    /// Error measure compared against `tolerance` (for counts, the count).
    pub metric: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl CheckOutcome {
    fn below(name: impl Into<String>, metric: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed: metric <= tolerance, metric, tolerance, detail: detail.into() }
    }
}

// ---------------------------------------------------------------------------
// Gaussian integrals

/// `int exp(-sum A_jk z_j conj(z_k)) prod d Re z d Im z / pi` for Hermitian
/// positive definite `A`, by a tensor Gauss-Hermite rule whose weight is
/// scaled to the smallest eigenvalue of `A`.
pub fn gaussian_complex_integral(a: &ComplexMatrix, nodes: usize) -> Result<f64> {
    let k = a.ensure_square()?;
    if !is_hpd(a) {
        return Err(Error::invalid("Gaussian integral needs a Hermitian positive definite matrix"));
    }
    if k > 2 {
        return Err(Error::invalid("tensor quadrature is limited to k <= 2"));
    }
    let scale = min_hermitian_eigenvalue(a)?;
    let (t, w) = gauss_hermite(nodes);
    let x: Vec<f64> = t.iter().map(|t| t / scale.sqrt()).collect();
    let dims = 2 * k;
    let total = nodes.pow(dims as u32);
    let sum: f64 = (0..total)
        .into_par_iter()
        .map(|mut idx| {
            let mut coords = [0.0; 4];
            let mut weight = 1.0;
            let mut r2 = 0.0;
            for coord in coords.iter_mut().take(dims) {
                let i = idx % nodes;
                idx /= nodes;
                *coord = x[i];
                weight *= w[i];
                r2 += x[i] * x[i];
            }
            let z: Vec<Complex64> = (0..k).map(|j| Complex64::new(coords[2 * j], coords[2 * j + 1])).collect();
            let mut q = Complex64::new(0.0, 0.0);
            for j in 0..k {
                for l in 0..k {
                    q += a[(j, l)] * z[j] * z[l].conj();
                }
            }
            weight * (-(q.re - scale * r2)).exp()
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    Ok(sum / scale.powi(dims as i32).sqrt() / PI.powi(k as i32))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub lhs: f64,
    pub rhs: f64,
    pub rel_err: f64,
}

/// Complex Gaussian integral against `1 / det A`.
pub fn gaussian_complex_check(a: &ComplexMatrix) -> Result<ComparisonReport> {
    let lhs = gaussian_complex_integral(a, 48)?;
    let rhs = 1.0 / linalg::determinant(a)?.re;
    Ok(ComparisonReport { lhs, rhs, rel_err: rel_err(lhs, rhs) })
}

/// Default largest matrix accepted by [`gaussian_grassmann`].
pub const GAUSSIAN_GRASSMANN_CAP: usize = 6;

/// `int exp(-sum A_jk bar psi_j psi_k) prod d bar psi_j d psi_j`, computed in
/// the algebra with `bar psi_j = 2j`, `psi_j = 2j + 1`.
pub fn gaussian_grassmann(a: &ComplexMatrix, cap: usize) -> Result<Complex64> {
    let n = a.ensure_square()?;
    if n > cap {
        return Err(Error::invalid(format!("{n}x{n} exceeds the Grassmann Gaussian cap {cap}")));
    }
    let m = 2 * n;
    let mut action = G::zero(m);
    for j in 0..n {
        for k in 0..n {
            action = action.try_add(&G::monomial(m, &[2 * j, 2 * k + 1], -a[(j, k)])?)?;
        }
    }
    let e = action.exp_nilpotent()?;
    let order: Vec<usize> = (0..m).collect();
    Ok(berezin_integrate(&e, &order)?.body())
}

// ---------------------------------------------------------------------------
// Super-Gaussian integral

#[derive(Clone, Debug, PartialEq)]
pub struct SuperGaussianReport {
    pub lhs: G,
    pub rhs: G,
    pub max_abs_diff: f64,
}

/// Polynomial in commuting `x_i`, `bar x_i` with Grassmann coefficients.
type BosonPoly = BTreeMap<(Vec<usize>, Vec<usize>), G>;

fn permanent(m: &[Vec<Complex64>]) -> Complex64 {
    fn go(m: &[Vec<Complex64>], row: usize, used: &mut Vec<bool>) -> Complex64 {
        if row == m.len() {
            return c(1.0);
        }
        let mut acc = c(0.0);
        for j in 0..m.len() {
            if !used[j] {
                used[j] = true;
                acc += m[row][j] * go(m, row + 1, used);
                used[j] = false;
            }
        }
        acc
    }
    go(m, 0, &mut vec![false; m.len()])
}

/// `int exp(-theta* F theta) prod d bar psi d psi prod d^2 x / pi` for
/// `theta = (psi, x)` and `F = [[A, chi], [eta, B]]`.
///
/// The fermion-boson coupling `L = J^T x + bar x^T J'` is expanded as a
/// polynomial in `x, bar x`; its Gaussian moments come from Wick's rule
/// `<x_i bar x_j> = (B^-1)_ij` (a permanent) times `1 / det B`. The remaining
/// Grassmann Gaussian is integrated symbolically. The result is compared with
/// `Sdet F`.
pub fn super_gaussian_check(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    chi: &GMatrix<Complex64>,
    eta: &GMatrix<Complex64>,
) -> Result<SuperGaussianReport> {
    let k = a.ensure_square()?;
    if !(1..=2).contains(&k) {
        return Err(Error::invalid("super-Gaussian check supports k = 1 or 2"));
    }
    if b.ensure_square()? != k || chi.rows() != k || chi.cols() != k || eta.rows() != k || eta.cols() != k {
        return Err(Error::DimensionMismatch { expected: format!("{k}x{k} blocks"), got: "mismatched blocks".into() });
    }
    if !is_hpd(b) {
        return Err(Error::invalid("B must be Hermitian positive definite"));
    }
    if !chi.all_odd() || !eta.all_odd() {
        return Err(Error::Algebra("chi and eta must be odd".into()));
    }
    let ambient = chi.num_generators();
    let m = ambient + 2 * k;
    let psibar = |j: usize| ambient + 2 * j;
    let psi = |j: usize| ambient + 2 * j + 1;
    let gen = |j: usize| G::generator(m, j);
    let chi_e = GMatrix::from_fn(k, k, m, |i, j| chi.get(i, j).embed(m).expect("embedding"))?;
    let eta_e = GMatrix::from_fn(k, k, m, |i, j| eta.get(i, j).embed(m).expect("embedding"))?;

    // -theta* F theta = -psibar A psi - psibar chi x - xbar eta psi - xbar B x
    // source for x_i: -sum_j psibar_j chi_ji ; source for xbar_i: -sum_j eta_ij psi_j
    let mut jx = Vec::with_capacity(k);
    let mut jxbar = Vec::with_capacity(k);
    for i in 0..k {
        let mut s = G::zero(m);
        let mut t = G::zero(m);
        for j in 0..k {
            s = s.try_sub(&gen(psibar(j))?.try_mul(chi_e.get(j, i))?)?;
            t = t.try_sub(&eta_e.get(i, j).try_mul(&gen(psi(j))?)?)?;
        }
        jx.push(s);
        jxbar.push(t);
    }

    // exp(L) as a polynomial in x, xbar
    let mut poly: BosonPoly = BTreeMap::new();
    poly.insert((vec![], vec![]), G::one(m));
    let mut term = poly.clone();
    for order in 1..=m {
        let mut next: BosonPoly = BTreeMap::new();
        for ((xs, xbs), coeff) in &term {
            for i in 0..k {
                for (is_bar, src) in [(false, &jx[i]), (true, &jxbar[i])] {
                    let prod = coeff.try_mul(src)?;
                    if prod.is_zero() {
                        continue;
                    }
                    let (mut nx, mut nxb) = (xs.clone(), xbs.clone());
                    if is_bar {
                        nxb.push(i);
                        nxb.sort_unstable();
                    } else {
                        nx.push(i);
                        nx.sort_unstable();
                    }
                    let slot = next.entry((nx, nxb)).or_insert_with(|| G::zero(m));
                    *slot = slot.try_add(&prod.scale(&c(1.0 / order as f64)))?;
                }
            }
        }
        next.retain(|_, v| !v.is_zero());
        if next.is_empty() {
            break;
        }
        for (key, v) in &next {
            let slot = poly.entry(key.clone()).or_insert_with(|| G::zero(m));
            *slot = slot.try_add(v)?;
        }
        term = next;
    }

    let b_inv = linalg::inverse(b)?;
    let det_b = linalg::determinant(b)?;
    let mut bosonic = G::zero(m);
    for ((xs, xbs), coeff) in &poly {
        if xs.len() != xbs.len() {
            continue;
        }
        let mat: Vec<Vec<Complex64>> = xs.iter().map(|&i| xbs.iter().map(|&j| b_inv[(i, j)]).collect()).collect();
        bosonic = bosonic.try_add(&coeff.scale(&permanent(&mat)))?;
    }
    bosonic = bosonic.scale(&(c(1.0) / det_b));

    let mut fermion_action = G::zero(m);
    for j in 0..k {
        for l in 0..k {
            fermion_action = fermion_action.try_add(&G::monomial(m, &[psibar(j), psi(l)], -a[(j, l)])?)?;
        }
    }
    let integrand = fermion_action.exp_nilpotent()?.try_mul(&bosonic)?;
    let order: Vec<usize> = (0..k).flat_map(|j| [psibar(j), psi(j)]).collect();
    let lhs = berezin_integrate(&integrand, &order)?;

    let f = SuperMatrix::new(GMatrix::from_numeric(k, k, m, |i, j| a[(i, j)]), chi_e, eta_e, GMatrix::from_numeric(k, k, m, |i, j| b[(i, j)]))?;
    let rhs = f.sdet()?;
    Ok(SuperGaussianReport { max_abs_diff: lhs.max_abs_diff(&rhs), lhs, rhs })
}

/// `k x k` matrix whose entries are the distinct generators `first, first + 1, ...`.
pub fn generator_matrix(k: usize, m: usize, first: usize) -> Result<GMatrix<Complex64>> {
    let mut out = GMatrix::zeros(k, k, m);
    for i in 0..k {
        for j in 0..k {
            out.set(i, j, G::generator(m, first + i * k + j)?);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Superdeterminant and supertrace

fn random_coeff<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

fn random_even_soul<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Result<G> {
    let mut x = G::zero(m);
    for _ in 0..2 {
        let i = rng.random_range(0..m);
        let j = rng.random_range(0..m);
        if i != j {
            x = x.try_add(&G::monomial(m, &[i, j], random_coeff(rng) * 0.5)?)?;
        }
    }
    Ok(x)
}

fn random_odd<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Result<G> {
    let mut x = G::zero(m);
    for j in 0..m {
        if rng.random_bool(0.5) {
            x = x.try_add(&G::monomial(m, &[j], random_coeff(rng))?)?;
        }
    }
    Ok(x)
}

/// Supermatrix with random numeric diagonal blocks (well conditioned), small
/// even nilpotent corrections and random odd off-diagonal blocks over `m`
/// ambient generators.
pub fn random_supermatrix<R: Rng + ?Sized>(p: usize, q: usize, m: usize, rng: &mut R) -> Result<SuperMatrix<Complex64>> {
    let block = |n: usize, rng: &mut R| -> Result<GMatrix<Complex64>> {
        let mut out = GMatrix::zeros(n, n, m);
        for i in 0..n {
            for j in 0..n {
                let body = if i == j { c(2.0) + random_coeff(rng) * 0.5 } else { random_coeff(rng) * 0.5 };
                out.set(i, j, G::scalar(m, body).try_add(&random_even_soul(m, rng)?)?);
            }
        }
        Ok(out)
    };
    let a = block(p, rng)?;
    let b = block(q, rng)?;
    let mut chi = GMatrix::zeros(p, q, m);
    let mut eta = GMatrix::zeros(q, p, m);
    for i in 0..p {
        for j in 0..q {
            chi.set(i, j, random_odd(m, rng)?);
            eta.set(j, i, random_odd(m, rng)?);
        }
    }
    SuperMatrix::new(a, chi, eta, b)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdetReport {
    /// `Sdet(F1 F2)` vs `Sdet F1 Sdet F2`
    pub multiplicativity: f64,
    /// `exp(Str log F)` vs `Sdet F`, worst of `F1`, `F2`, `F1 F2`
    pub str_log: f64,
    /// `Str F1 F2` vs `Str F2 F1`
    pub str_cyclic: f64,
}

pub fn sdet_properties_check(f1: &SuperMatrix<Complex64>, f2: &SuperMatrix<Complex64>) -> Result<SdetReport> {
    let f12 = f1.mul(f2)?;
    let f21 = f2.mul(f1)?;
    let s1 = f1.sdet()?;
    let s2 = f2.sdet()?;
    let multiplicativity = f12.sdet()?.max_abs_diff(&s1.try_mul(&s2)?);
    let mut str_log: f64 = 0.0;
    for f in [f1, f2, &f12] {
        let lhs = super::g_exp(&f.str_log()?)?;
        str_log = str_log.max(lhs.max_abs_diff(&f.sdet()?));
    }
    let str_cyclic = f12.supertrace()?.max_abs_diff(&f21.supertrace()?);
    Ok(SdetReport { multiplicativity, str_log, str_cyclic })
}

// ---------------------------------------------------------------------------
// Hubbard-Stratonovich, Grassmann version

/// Measure ordering for the `nu` integration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HsOrdering {
    /// `prod_{j,k} d nu_jk d bar nu_jk`
    Paired,
    /// `prod_{j,k} d nu_kj d bar nu_jk`, read literally
    Transposed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HsGrassmannReport {
    pub p: usize,
    pub monomials: usize,
    /// Exact equality under [`HsOrdering::Paired`].
    pub paired_exact: bool,
    /// `s` with `rhs = s e^{Tr RT}` under [`HsOrdering::Transposed`], if any.
    pub transposed_sign: Option<i64>,
    /// Both sides equal 1 when `R = T = 0`.
    pub sourceless_exact: bool,
    /// `e^{-rho tau} = int e^{rho chi + tau eta + chi eta} d eta d chi` holds exactly.
    pub scalar_fixture_exact: bool,
}

fn rat(n: i64) -> Rational64 {
    Rational64::from_integer(n)
}

/// `(e^{Tr RT}, int e^{-Tr nu nu* + Tr nu R + Tr nu* T} d nu)` with `R_jk`,
/// `T_jk`, `nu_jk`, `bar nu_jk` at generators `jp+k` plus offsets `0, p^2,
/// 2p^2, 3p^2`.
pub fn hs_grassmann_sides(p: usize, sources: bool, ordering: HsOrdering) -> Result<(Q, Q)> {
    if !(1..=2).contains(&p) {
        return Err(Error::invalid("Grassmann Hubbard-Stratonovich check supports p = 1 or 2"));
    }
    let pp = p * p;
    let m = 4 * pp;
    let r = |j: usize, k: usize| j * p + k;
    let t = |j: usize, k: usize| pp + j * p + k;
    let nu = |j: usize, k: usize| 2 * pp + j * p + k;
    let nub = |j: usize, k: usize| 3 * pp + j * p + k;

    let mut lhs_exp = Q::zero(m);
    let mut action = Q::zero(m);
    for j in 0..p {
        for k in 0..p {
            if sources {
                lhs_exp = lhs_exp.try_add(&Q::monomial(m, &[r(j, k), t(k, j)], rat(1))?)?;
                action = action.try_add(&Q::monomial(m, &[nu(j, k), r(k, j)], rat(1))?)?;
                action = action.try_add(&Q::monomial(m, &[nub(j, k), t(j, k)], rat(1))?)?;
            }
            action = action.try_add(&Q::monomial(m, &[nu(j, k), nub(j, k)], rat(-1))?)?;
        }
    }
    let lhs = lhs_exp.exp_nilpotent()?;
    let order: Vec<usize> = (0..p)
        .flat_map(|j| (0..p).map(move |k| (j, k)))
        .flat_map(|(j, k)| match ordering {
            HsOrdering::Paired => [nu(j, k), nub(j, k)],
            HsOrdering::Transposed => [nu(k, j), nub(j, k)],
        })
        .collect();
    let rhs = berezin_integrate(&action.exp_nilpotent()?, &order)?;
    Ok((lhs, rhs))
}

/// `int e^{rho chi + tau eta + chi eta} d eta d chi` and `e^{-rho tau}` with
/// `rho, tau, chi, eta` the generators `0, 1, 2, 3`.
pub fn hs_scalar_fixture() -> Result<(Q, Q)> {
    let m = 4;
    let exponent = Q::monomial(m, &[0, 2], rat(1))?
        .try_add(&Q::monomial(m, &[1, 3], rat(1))?)?
        .try_add(&Q::monomial(m, &[2, 3], rat(1))?)?;
    let rhs = berezin_integrate(&exponent.exp_nilpotent()?, &[3, 2])?;
    let lhs = Q::monomial(m, &[0, 1], rat(-1))?.exp_nilpotent()?;
    Ok((lhs, rhs))
}

pub fn hs_grassmann_check(p: usize) -> Result<HsGrassmannReport> {
    let (lhs, paired) = hs_grassmann_sides(p, true, HsOrdering::Paired)?;
    let (_, transposed) = hs_grassmann_sides(p, true, HsOrdering::Transposed)?;
    let transposed_sign = if transposed == lhs {
        Some(1)
    } else if transposed == lhs.scale(&rat(-1)) {
        Some(-1)
    } else {
        None
    };
    let (l0, r0) = hs_grassmann_sides(p, false, HsOrdering::Paired)?;
    let (sl, sr) = hs_scalar_fixture()?;
    Ok(HsGrassmannReport {
        p,
        monomials: lhs.len(),
        paired_exact: paired == lhs,
        transposed_sign,
        sourceless_exact: l0 == Q::one(l0.num_generators()) && r0 == l0,
        scalar_fixture_exact: sl == sr,
    })
}

// ---------------------------------------------------------------------------
// Hubbard-Stratonovich, bosonic version

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HsBosonicReport {
    /// `e^{Tr AB}`
    pub target: Complex64,
    /// Product of per-entry completed squares.
    pub analytic: Complex64,
    /// Product of per-entry two-dimensional quadratures.
    pub quadrature: Complex64,
    pub mc_mean: Complex64,
    pub mc_std_err: Complex64,
    pub analytic_rel_err: f64,
    pub quadrature_rel_err: f64,
    /// Largest of the real and imaginary z-scores of the Monte Carlo mean.
    pub mc_z: f64,
    pub samples: usize,
}

/// `pi^-1 int e^{a conj(u) + b u - |u|^2} d Re u d Im u` by a tensor
/// Gauss-Hermite rule in `(Re u, Im u)`.
fn entry_integral(a: Complex64, b: Complex64) -> Complex64 {
    let (t, w) = gauss_hermite(80);
    let mut acc = c(0.0);
    for (x, wx) in t.iter().zip(&w) {
        for (y, wy) in t.iter().zip(&w) {
            let u = Complex64::new(*x, *y);
            acc += (a * u.conj() + b * u).exp() * (wx * wy);
        }
    }
    acc / PI
}

pub fn hs_bosonic_check(a: &ComplexMatrix, b: &ComplexMatrix, samples: usize, seed: u64) -> Result<HsBosonicReport> {
    let p = a.ensure_square()?;
    if b.ensure_square()? != p {
        return Err(Error::DimensionMismatch { expected: format!("{p}x{p}"), got: format!("{}x{}", b.rows(), b.cols()) });
    }
    if samples < 2 {
        return Err(Error::invalid("Monte Carlo needs at least two samples"));
    }
    let target = (a * b).trace().exp();
    // w_jk appears as A_jk conj(w_jk) + B_kj w_jk
    let mut analytic = c(1.0);
    let mut quadrature = c(1.0);
    for j in 0..p {
        for k in 0..p {
            analytic *= (a[(j, k)] * b[(k, j)]).exp();
            quadrature *= entry_integral(a[(j, k)], b[(k, j)]);
        }
    }
    let values: Vec<Complex64> = (0..samples as u64)
        .into_par_iter()
        .map(|s| {
            let mut rng = rng::stream(seed, Domain::Verification, s);
            let sd = 0.5f64.sqrt();
            let w = ComplexMatrix::from_fn(p, p, |_, _| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(re * sd, im * sd)
            });
            ((a * &w.adjoint()).trace() + (b * &w).trace()).exp()
        })
        .collect();
    let n = samples as f64;
    let mean = values.iter().sum::<Complex64>() / n;
    let var_re = values.iter().map(|v| (v.re - mean.re).powi(2)).sum::<f64>() / (n - 1.0);
    let var_im = values.iter().map(|v| (v.im - mean.im).powi(2)).sum::<f64>() / (n - 1.0);
    let se = Complex64::new((var_re / n).sqrt(), (var_im / n).sqrt());
    let z = |d: f64, s: f64| if s > 0.0 { d.abs() / s } else if d == 0.0 { 0.0 } else { f64::INFINITY };
    let mc_z = z(mean.re - target.re, se.re).max(z(mean.im - target.im, se.im));
    Ok(HsBosonicReport {
        target,
        analytic,
        quadrature,
        mc_mean: mean,
        mc_std_err: se,
        analytic_rel_err: complex_rel_err(analytic, target),
        quadrature_rel_err: complex_rel_err(quadrature, target),
        mc_z,
        samples,
    })
}

// ---------------------------------------------------------------------------
// Changes of variables

#[derive(Clone, Debug, PartialEq)]
pub struct BerezinianReport {
    /// `int f(A zeta) d zeta`
    pub substituted: G,
    /// `det A int f(chi) d chi`
    pub scaled: G,
    pub max_abs_diff: f64,
}

/// Random polynomial on `k` generators with a coefficient on every monomial.
pub fn random_polynomial<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Result<G> {
    G::from_terms(k, (0..(1u64 << k)).map(|mask| (mask, random_coeff(rng))))
}

/// `int f(A zeta) d zeta = det A int f(chi) d chi` with `d chi = d chi_k ... d chi_1`.
pub fn berezinian_check(a: &ComplexMatrix, f: &G) -> Result<BerezinianReport> {
    let k = a.ensure_square()?;
    if f.num_generators() != k {
        return Err(Error::DimensionMismatch { expected: format!("{k} generators"), got: format!("{}", f.num_generators()) });
    }
    let det = linalg::determinant(a)?;
    if det.norm() <= 1e-12 * a.frobenius_norm().powi(k as i32).max(f64::MIN_POSITIVE) {
        return Err(Error::invalid("singular change of variables"));
    }
    let m = 2 * k;
    let chi_order: Vec<usize> = (0..k).rev().collect();
    let zeta_order: Vec<usize> = (k..2 * k).rev().collect();
    let f_chi = f.embed(m)?;
    let plain = berezin_integrate(&f_chi, &chi_order)?;
    let images: Vec<G> = (0..m)
        .map(|i| {
            if i < k {
                let mut img = G::zero(m);
                for j in 0..k {
                    img = img.try_add(&G::monomial(m, &[k + j], a[(i, j)])?)?;
                }
                Ok(img)
            } else {
                G::generator(m, i)
            }
        })
        .collect::<Result<_>>()?;
    let substituted = berezin_integrate(&f_chi.substitute(&images)?, &zeta_order)?;
    let scaled = plain.scale(&det);
    Ok(BerezinianReport { max_abs_diff: substituted.max_abs_diff(&scaled), substituted, scaled })
}

/// `int f(chi + psi) d psi = int f(chi) d chi` for odd shifts built from
/// `k` ambient generators. Returns the largest coefficient difference.
pub fn grassmann_shift_check<R: Rng + ?Sized>(f: &G, rng: &mut R) -> Result<f64> {
    let k = f.num_generators();
    let m = 3 * k;
    let f_e = f.embed(m)?;
    let images: Vec<G> = (0..m)
        .map(|i| {
            if i < k {
                // psi_i plus a random odd combination of the ambient generators
                let mut img = G::generator(m, k + i)?;
                for j in 0..k {
                    img = img.try_add(&G::monomial(m, &[2 * k + j], random_coeff(rng))?)?;
                }
                if k >= 3 {
                    img = img.try_add(&G::monomial(m, &[2 * k, 2 * k + 1, 2 * k + 2], random_coeff(rng))?)?;
                }
                Ok(img)
            } else {
                G::generator(m, i)
            }
        })
        .collect::<Result<_>>()?;
    let shifted = berezin_integrate(&f_e.substitute(&images)?, &(k..2 * k).rev().collect::<Vec<_>>())?;
    let plain = berezin_integrate(&f_e, &(0..k).rev().collect::<Vec<_>>())?;
    Ok(shifted.max_abs_diff(&plain))
}

/// `int f(x + a) dx = int f(x) dx` on the real line for even nilpotent `a`,
/// with `f(x) = exp(-x^2) q(x)` and `f(x + a) = sum_j f^(j)(x) a^j / j!`.
/// Returns the largest coefficient difference.
pub fn real_shift_check(q: &[f64], a: &G) -> Result<f64> {
    if !a.is_even() || a.body() != c(0.0) {
        return Err(Error::Algebra("shift must be even with zero body".into()));
    }
    let m = a.num_generators();
    let eval = |poly: &[f64], x: f64| poly.iter().rev().fold(0.0, |acc, c| acc * x + c);
    let derivative = |poly: &[f64]| -> Vec<f64> {
        // (e^{-x^2} p)' = e^{-x^2} (p' - 2 x p)
        let mut out = vec![0.0; poly.len() + 1];
        for (i, &ci) in poly.iter().enumerate() {
            if i > 0 {
                out[i - 1] += i as f64 * ci;
            }
            out[i + 1] -= 2.0 * ci;
        }
        out
    };
    let mut poly = q.to_vec();
    let mut shifted = G::zero(m);
    let mut power = G::one(m);
    let mut factorial = 1.0;
    let mut plain = 0.0;
    for j in 0..=m / 2 {
        if j > 0 {
            power = power.try_mul(a)?;
            factorial *= j as f64;
            poly = derivative(&poly);
        }
        if power.is_zero() {
            break;
        }
        let p = poly.clone();
        let integral = integrate(|x| (-x * x).exp() * eval(&p, x), -14.0, 14.0, 1e-15, 1e-14)?;
        if j == 0 {
            plain = integral;
        }
        shifted = shifted.try_add(&power.scale(&c(integral / factorial)))?;
    }
    Ok(shifted.max_abs_diff(&G::scalar(m, c(plain))))
}

// ---------------------------------------------------------------------------
// Determinant inequality on the boundary rays

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetInequalityReport {
    pub boundary_samples: usize,
    pub interior_samples: usize,
    pub violations: usize,
    pub interior_violations: usize,
    /// Smallest `Re log det M(T,S,lambda) - Re log det M(T,0,lambda)` seen.
    pub worst_margin: f64,
    pub slack: f64,
}

/// `log |det [[T + S, lambda I], [lambda I, T - S]]|` for diagonal `T`.
pub fn log_abs_det_m(t: [Complex64; 2], s: &ComplexMatrix, lambda: f64) -> Result<f64> {
    let m = ComplexMatrix::from_fn(4, 4, |i, j| {
        let (bi, bj) = (i / 2, j / 2);
        let (ii, jj) = (i % 2, j % 2);
        let tt = if ii == jj { t[ii] } else { c(0.0) };
        match (bi, bj) {
            (0, 0) => tt + s[(ii, jj)],
            (1, 1) => tt - s[(ii, jj)],
            _ if ii == jj => c(lambda),
            _ => c(0.0),
        }
    });
    Ok(linalg::determinant(&m)?.norm().ln())
}

fn random_hermitian_2x2<R: Rng + ?Sized>(scale: f64, rng: &mut R) -> ComplexMatrix {
    let d1: f64 = StandardNormal.sample(rng);
    let d2: f64 = StandardNormal.sample(rng);
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    let off = Complex64::new(re, im) * scale;
    ComplexMatrix::from_row_major(2, 2, vec![c(d1 * scale), off, off.conj(), c(d2 * scale)]).expect("2x2")
}

fn inequality_margin(rng: &mut ChaCha8Rng, interior: bool) -> Result<f64> {
    let mut t = [c(0.0); 2];
    for tk in &mut t {
        let r = rng.random_range(-3.0f64..2.0).exp();
        let theta = if interior {
            rng.random_range(FRAC_PI_4..3.0 * FRAC_PI_4)
        } else if rng.random_bool(0.5) {
            FRAC_PI_4
        } else {
            3.0 * FRAC_PI_4
        };
        *tk = Complex64::from_polar(r, theta);
    }
    let scale = rng.random_range(-3.0f64..1.0).exp();
    let s = random_hermitian_2x2(scale, rng);
    let lambda = rng.random_range(-3.0f64..2.0).exp();
    Ok(log_abs_det_m(t, &s, lambda)? - log_abs_det_m(t, &ComplexMatrix::zeros(2, 2), lambda)?)
}

pub fn det_m_inequality_check(boundary: usize, interior: usize, seed: u64) -> Result<DetInequalityReport> {
    let slack = 1e-12;
    let margins = |count: usize, offset: u64, inside: bool| -> Result<Vec<f64>> {
        (0..count as u64)
            .into_par_iter()
            .map(|i| inequality_margin(&mut rng::stream(seed, Domain::Verification, offset + i), inside))
            .collect()
    };
    let b = margins(boundary, 0, false)?;
    let i = margins(interior, 1 << 40, true)?;
    let worst_margin = b.iter().chain(&i).copied().fold(f64::INFINITY, f64::min);
    Ok(DetInequalityReport {
        boundary_samples: boundary,
        interior_samples: interior,
        violations: b.iter().filter(|&&x| x < -slack).count(),
        interior_violations: i.iter().filter(|&&x| x < -slack).count(),
        worst_margin,
        slack,
    })
}

// ---------------------------------------------------------------------------
// Change-of-variables lemmas for 2x2 Hermitian matrices
//
// Measure on H_2: prod dA_jj times 2 d Re A_12 d Im A_12. With it the
// eigenvalue reduction of a unitarily invariant integrand is
// 2 pi (mu_1 - mu_2)^2 d mu over mu_1 > mu_2, with normalized Haar measure.

/// Unitarily invariant test functions on positive 2x2 matrices, as functions
/// of the eigenvalues.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JacobianTestFn {
    /// `exp(-Tr A)`
    ExpTrace,
    /// `exp(-2 Tr A)`
    ExpTwoTrace,
    Zero,
}

impl JacobianTestFn {
    fn eval(self, mu1: f64, mu2: f64) -> f64 {
        match self {
            JacobianTestFn::ExpTrace => (-mu1 - mu2).exp(),
            JacobianTestFn::ExpTwoTrace => (-2.0 * (mu1 + mu2)).exp(),
            JacobianTestFn::Zero => 0.0,
        }
    }

    /// Eigenvalue range beyond which the integrand is negligible.
    fn cutoff(self) -> f64 {
        match self {
            JacobianTestFn::ExpTrace => 60.0,
            JacobianTestFn::ExpTwoTrace => 30.0,
            JacobianTestFn::Zero => 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JacobianReport {
    /// Left side integrated in matrix entries `(a, b, |w|)`.
    pub lhs_entries: f64,
    /// Left side reduced to eigenvalues.
    pub lhs_eigen: f64,
    /// Right side reduced to eigenvalues.
    pub rhs: f64,
    pub rel_err: f64,
}

const QTOL: f64 = 1e-12;

/// `int_{H_2^+} f(A) dA = 4 int_{H_2^+} (Tr B)^2 det B f(B^2) dB`.
pub fn jacobian_square_check(f: JacobianTestFn) -> Result<JacobianReport> {
    let l = f.cutoff();
    let lb = l.sqrt();
    // A = [[a, w], [conj w, b]], |w| = r < sqrt(ab); d^2 w contributes 2 * 2 pi r dr
    let lhs_entries = integrate(
        |a| {
            integrate(
                |b| {
                    let half = 0.5 * (a - b);
                    integrate(
                        |r| {
                            let disc = (half * half + r * r).sqrt();
                            let mid = 0.5 * (a + b);
                            f.eval(mid + disc, mid - disc) * 4.0 * PI * r
                        },
                        0.0,
                        (a * b).sqrt(),
                        QTOL * 1e-2,
                        QTOL,
                    )
                    .unwrap_or(f64::NAN)
                },
                0.0,
                l,
                QTOL * 1e-1,
                QTOL,
            )
            .unwrap_or(f64::NAN)
        },
        0.0,
        l,
        QTOL,
        QTOL,
    )?;
    // symmetric integrands: the ordered region is half of the square
    let lhs_eigen = 0.5
        * integrate_2d(|m1, m2| 2.0 * PI * (m1 - m2).powi(2) * f.eval(m1, m2), (0.0, l), (0.0, l), QTOL, QTOL)?;
    let rhs = 0.5
        * integrate_2d(
            |m1, m2| 4.0 * 2.0 * PI * (m1 - m2).powi(2) * (m1 + m2).powi(2) * m1 * m2 * f.eval(m1 * m1, m2 * m2),
            (0.0, lb),
            (0.0, lb),
            QTOL,
            QTOL,
        )?;
    if !lhs_entries.is_finite() {
        return Err(Error::Numerical("entrywise quadrature failed".into()));
    }
    let rel = rel_err(lhs_entries, rhs).max(rel_err(lhs_eigen, rhs));
    Ok(JacobianReport { lhs_entries, lhs_eigen, rhs, rel_err: rel })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarReport {
    pub scale: f64,
    /// `pi^4 s^8`
    pub lhs: f64,
    /// `(int e^{-x^2/s^2} dx)^8` by quadrature.
    pub lhs_quadrature: f64,
    pub rhs: f64,
    pub rel_err: f64,
}

/// `int f(W) dW = 2 pi^3 int (Tr L)^2 det L dL int f(L U) dU` for
/// `f(W) = exp(-Tr W W* / s^2)` and the flat measure on the 8 real coordinates of `W`.
pub fn jacobian_polar_check(scale: f64) -> Result<PolarReport> {
    if !(scale > 0.0) {
        return Err(Error::invalid("scale must be positive"));
    }
    let s2 = scale * scale;
    let lhs = PI.powi(4) * s2.powi(4);
    let one_dim = integrate(|x| (-x * x / s2).exp(), -12.0 * scale, 12.0 * scale, 1e-16, 1e-15)?;
    let lhs_quadrature = one_dim.powi(8);
    let l = 8.0 * scale;
    let rhs = 0.5
        * 2.0
        * PI.powi(3)
        * integrate_2d(
            |m1, m2| 2.0 * PI * (m1 - m2).powi(2) * (m1 + m2).powi(2) * m1 * m2 * (-(m1 * m1 + m2 * m2) / s2).exp(),
            (0.0, l),
            (0.0, l),
            1e-14 * s2.powi(4),
            1e-13,
        )?;
    Ok(PolarReport { scale, lhs, lhs_quadrature, rhs, rel_err: rel_err(lhs, rhs).max(rel_err(lhs_quadrature, rhs)) })
}

// ---------------------------------------------------------------------------
// Battery

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatteryConfig {
    pub seed: u64,
    pub grassmann_cap: usize,
    pub inequality_boundary_samples: usize,
    pub inequality_interior_samples: usize,
    pub bosonic_mc_samples: usize,
}

impl Default for BatteryConfig {
    fn default() -> Self {
        Self {
            seed: 2024,
            grassmann_cap: GAUSSIAN_GRASSMANN_CAP,
            inequality_boundary_samples: 100_000,
            inequality_interior_samples: 1_000,
            bosonic_mc_samples: 200_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatteryReport {
    pub checks: Vec<CheckOutcome>,
    pub all_passed: bool,
    /// Sign and measure conventions the checks are stated in.
    pub conventions: Vec<String>,
}

pub const SYMBOLIC_TOL: f64 = 1e-10;
pub const DETERMINANT_TOL: f64 = 1e-12;
pub const JACOBIAN_TOL: f64 = 1e-6;
pub const POLAR_TOL: f64 = 1e-8;

pub fn convention_notes() -> Vec<String> {
    vec![
        "Berezin integrals are iterated with the leftmost differential innermost; int psi_j d psi_j = 1".into(),
        "scalar fermionic Hubbard-Stratonovich: e^{-rho tau} = int e^{rho chi + tau eta + chi eta} d eta d chi holds as written".into(),
        "matrix fermionic Hubbard-Stratonovich is checked with d nu = prod d nu_jk d bar nu_jk; the transposed pairing d nu_kj d bar nu_jk differs by (-1)^{p(p-1)/2}".into(),
        "Hermitian 2x2 measure: prod dA_jj times 2 d Re A_12 d Im A_12, Haar measure normalized to 1".into(),
    ]
}

pub fn run_battery(config: &BatteryConfig) -> Result<BatteryReport> {
    let mut rng = rng::stream(config.seed, Domain::Verification, u64::MAX);
    let mut checks = Vec::new();

    for k in 1..=2 {
        let a = random_hpd(k, &mut rng);
        let r = gaussian_complex_check(&a)?;
        checks.push(CheckOutcome::below(format!("gaussian_complex_k{k}"), r.rel_err, SYMBOLIC_TOL, format!("{} vs 1/det A = {}", r.lhs, r.rhs)));
    }

    for n in 1..=config.grassmann_cap {
        let a = random_complex_matrix(n, n, &mut rng);
        let got = gaussian_grassmann(&a, config.grassmann_cap)?;
        let want = linalg::determinant(&a)?;
        checks.push(CheckOutcome::below(format!("gaussian_grassmann_n{n}"), complex_rel_err(got, want), DETERMINANT_TOL, format!("{got} vs {want}")));
    }

    for k in 1..=2 {
        let a = random_hpd(k, &mut rng);
        let b = random_hpd(k, &mut rng);
        let m = 2 * k * k;
        let chi = generator_matrix(k, m, 0)?;
        let eta = generator_matrix(k, m, k * k)?;
        let r = super_gaussian_check(&a, &b, &chi, &eta)?;
        checks.push(CheckOutcome::below(format!("super_gaussian_k{k}"), r.max_abs_diff, SYMBOLIC_TOL, format!("{} coefficients", r.rhs.len())));
    }

    let f1 = random_supermatrix(2, 2, 8, &mut rng)?;
    let f2 = random_supermatrix(2, 2, 8, &mut rng)?;
    let sd = sdet_properties_check(&f1, &f2)?;
    checks.push(CheckOutcome::below("sdet_multiplicative", sd.multiplicativity, SYMBOLIC_TOL, "p = q = 2 over 8 generators"));
    checks.push(CheckOutcome::below("exp_str_log_is_sdet", sd.str_log, SYMBOLIC_TOL, "p = q = 2 over 8 generators"));
    checks.push(CheckOutcome::below("str_cyclic", sd.str_cyclic, SYMBOLIC_TOL, "p = q = 2 over 8 generators"));

    for k in 1..=4 {
        let a = random_complex_matrix(k, k, &mut rng);
        let f = random_polynomial(k, &mut rng)?;
        let r = berezinian_check(&a, &f)?;
        checks.push(CheckOutcome::below(format!("berezinian_k{k}"), r.max_abs_diff, SYMBOLIC_TOL, "int f(A zeta) d zeta = det A int f"));
        let d = grassmann_shift_check(&f, &mut rng)?;
        checks.push(CheckOutcome::below(format!("odd_shift_k{k}"), d, SYMBOLIC_TOL, "int f(chi + psi) d psi = int f"));
    }
    let a_even = G::monomial(4, &[0, 1], c(0.7))?.try_add(&G::monomial(4, &[2, 3], c(-1.3))?)?;
    let d = real_shift_check(&[1.0, 0.5, -0.25, 0.1], &a_even)?;
    checks.push(CheckOutcome::below("even_shift_real_integral", d, SYMBOLIC_TOL, "int f(x + a) dx = int f(x) dx"));

    for p in 1..=2 {
        let a = random_complex_matrix(p, p, &mut rng).scale(c(0.5));
        let b = random_complex_matrix(p, p, &mut rng).scale(c(0.5));
        let r = hs_bosonic_check(&a, &b, config.bosonic_mc_samples, config.seed + p as u64)?;
        checks.push(CheckOutcome::below(format!("hs_bosonic_analytic_p{p}"), r.analytic_rel_err, DETERMINANT_TOL, format!("target {}", r.target)));
        checks.push(CheckOutcome::below(format!("hs_bosonic_quadrature_p{p}"), r.quadrature_rel_err, SYMBOLIC_TOL, format!("{}", r.quadrature)));
        checks.push(CheckOutcome::below(format!("hs_bosonic_mc_p{p}"), r.mc_z, 4.0, format!("mean {} +- {}", r.mc_mean, r.mc_std_err)));
    }

    for p in 1..=2 {
        let r = hs_grassmann_check(p)?;
        let ok = r.paired_exact && r.sourceless_exact;
        checks.push(CheckOutcome {
            name: format!("hs_grassmann_p{p}"),
            passed: ok,
            metric: if ok { 0.0 } else { 1.0 },
            tolerance: 0.0,
            detail: format!("{} monomials, transposed ordering sign {:?}", r.monomials, r.transposed_sign),
        });
        if p == 1 {
            checks.push(CheckOutcome {
                name: "hs_grassmann_scalar_fixture".into(),
                passed: r.scalar_fixture_exact,
                metric: if r.scalar_fixture_exact { 0.0 } else { 1.0 },
                tolerance: 0.0,
                detail: "e^{-rho tau} = int e^{rho chi + tau eta + chi eta} d eta d chi".into(),
            });
        }
    }

    for f in [JacobianTestFn::ExpTrace, JacobianTestFn::ExpTwoTrace] {
        let r = jacobian_square_check(f)?;
        checks.push(CheckOutcome::below(format!("jacobian_square_{f:?}"), r.rel_err, JACOBIAN_TOL, format!("{} / {} / {}", r.lhs_entries, r.lhs_eigen, r.rhs)));
    }
    let polar = jacobian_polar_check(1.0)?;
    checks.push(CheckOutcome::below("jacobian_polar", polar.rel_err, POLAR_TOL, format!("{} vs pi^4 = {}", polar.rhs, polar.lhs)));

    let ineq = det_m_inequality_check(config.inequality_boundary_samples, config.inequality_interior_samples, config.seed)?;
    let bad = ineq.violations + ineq.interior_violations;
    checks.push(CheckOutcome {
        name: "det_m_inequality".into(),
        passed: bad == 0,
        metric: bad as f64,
        tolerance: 0.0,
        detail: format!(
            "{} boundary + {} interior samples, worst margin {:.3e}",
            ineq.boundary_samples, ineq.interior_samples, ineq.worst_margin
        ),
    });

    let all_passed = checks.iter().all(|c| c.passed);
    Ok(BatteryReport { checks, all_passed, conventions: convention_notes() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: usize, cols: usize, v: &[f64]) -> ComplexMatrix {
        ComplexMatrix::from_row_major(rows, cols, v.iter().map(|&x| c(x)).collect()).unwrap()
    }

    #[test]
    fn grassmann_gaussian_small_cases() {
        assert!((gaussian_grassmann(&ComplexMatrix::identity(2), 6).unwrap() - c(1.0)).norm() < 1e-15);
        let d = gaussian_grassmann(&m(2, 2, &[1.0, 2.0, 3.0, 4.0]), 6).unwrap();
        assert!((d - c(-2.0)).norm() < 1e-14);
        assert!(gaussian_grassmann(&ComplexMatrix::identity(7), 6).is_err());
    }

    #[test]
    fn complex_gaussian_scalar() {
        let r = gaussian_complex_check(&m(1, 1, &[2.5])).unwrap();
        assert!(r.rel_err < 1e-12, "{r:?}");
    }

    #[test]
    fn super_gaussian_block_diagonal() {
        let k = 1;
        let mm = 2;
        let r = super_gaussian_check(&m(1, 1, &[2.0]), &m(1, 1, &[3.0]), &GMatrix::zeros(k, k, mm), &GMatrix::zeros(k, k, mm)).unwrap();
        assert!((r.lhs.body() - c(2.0 / 3.0)).norm() < 1e-14);
        assert_eq!(r.lhs.len(), 1);
    }

    #[test]
    fn super_gaussian_scalar_by_hand() {
        let chi = generator_matrix(1, 2, 0).unwrap();
        let eta = generator_matrix(1, 2, 1).unwrap();
        let r = super_gaussian_check(&m(1, 1, &[2.0]), &m(1, 1, &[3.0]), &chi, &eta).unwrap();
        // (2 - chi eta / 3) / 3 with chi = generator 0, eta = generator 1
        assert!((r.lhs.body() - c(2.0 / 3.0)).norm() < 1e-14);
        assert!((r.lhs.coefficient(0b11) - c(-1.0 / 9.0)).norm() < 1e-14);
        assert!(r.max_abs_diff < 1e-14);
    }

    #[test]
    fn super_gaussian_rejects_indefinite_b() {
        let z = GMatrix::zeros(1, 1, 0);
        assert!(super_gaussian_check(&m(1, 1, &[1.0]), &m(1, 1, &[-1.0]), &z, &z).is_err());
    }

    #[test]
    fn hs_grassmann_scalar() {
        let r = hs_grassmann_check(1).unwrap();
        assert!(r.paired_exact && r.sourceless_exact && r.scalar_fixture_exact);
        assert!(hs_grassmann_check(3).is_err());
    }

    #[test]
    fn hs_bosonic_trivial_and_scalar() {
        let z = ComplexMatrix::zeros(1, 1);
        let r = hs_bosonic_check(&z, &z, 10, 1).unwrap();
        assert_eq!(r.mc_mean, c(1.0));
        assert!((r.quadrature - c(1.0)).norm() < 1e-12);
        let one = ComplexMatrix::identity(1);
        let r = hs_bosonic_check(&one, &one, 20_000, 2).unwrap();
        assert!((r.analytic - c(std::f64::consts::E)).norm() < 1e-14);
        assert!(r.quadrature_rel_err < 1e-11);
        assert!(r.mc_z < 4.0);
    }

    #[test]
    fn berezinian_diagonal_example() {
        let a = m(2, 2, &[2.0, 0.0, 0.0, 3.0]);
        let f = G::monomial(2, &[0, 1], c(1.0)).unwrap();
        let r = berezinian_check(&a, &f).unwrap();
        assert!((r.substituted.body() - c(6.0)).norm() < 1e-14);
        assert!(r.max_abs_diff < 1e-14);
        assert!(berezinian_check(&m(2, 2, &[1.0, 2.0, 2.0, 4.0]), &f).is_err());
    }

    #[test]
    fn inequality_with_zero_s_is_equality() {
        let t = [Complex64::from_polar(1.3, FRAC_PI_4), Complex64::from_polar(0.4, 3.0 * FRAC_PI_4)];
        let z = ComplexMatrix::zeros(2, 2);
        assert_eq!(log_abs_det_m(t, &z, 0.7).unwrap(), log_abs_det_m(t, &z, 0.7).unwrap());
    }

    #[test]
    fn inequality_on_diagonal_s_grid() {
        let t = [Complex64::from_polar(1.0, FRAC_PI_4); 2];
        let base = log_abs_det_m(t, &ComplexMatrix::zeros(2, 2), 1.0).unwrap();
        for i in -30..=30 {
            let s = i as f64 * 0.1;
            let sm = m(2, 2, &[s, 0.0, 0.0, -s]);
            assert!(log_abs_det_m(t, &sm, 1.0).unwrap() >= base - 1e-12, "s = {s}");
        }
    }

    #[test]
    fn jacobian_zero_function() {
        let r = jacobian_square_check(JacobianTestFn::Zero).unwrap();
        assert_eq!(r.rel_err, 0.0);
        assert_eq!(r.rhs, 0.0);
    }

    #[test]
    fn polar_lemma_value() {
        let r = jacobian_polar_check(1.0).unwrap();
        assert!((r.lhs - 97.409_091_034_002_44).abs() < 1e-9);
        assert!(r.rel_err < 1e-8, "{r:?}");
    }
}
