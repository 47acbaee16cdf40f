//! Thin wrappers over faer's dense decompositions plus a few small exact
//! routines used as independent oracles.

use std::sync::Once;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;
use crate::Complex64;

static SEQUENTIAL: Once = Once::new();

/// faer's internal parallel kernels may reorder reductions; sampled results
/// must not depend on the worker count, so decompositions run sequentially
/// and parallelism lives at the trial level.
fn init() {
    SEQUENTIAL.call_once(|| faer::set_global_parallelism(faer::Par::Seq));
}

/// `A = U diag(s) V*`, singular values ascending.
#[derive(Clone, Debug)]
pub struct SvdFactors {
    pub u: ComplexMatrix,
    pub s: Vec<f64>,
    pub v: ComplexMatrix,
}

fn check_finite(m: &ComplexMatrix) -> Result<()> {
    if m.is_finite() {
        Ok(())
    } else {
        Err(Error::Decomposition("non-finite input matrix".into()))
    }
}

/// Singular values in ascending order.
pub fn singular_values(m: &ComplexMatrix) -> Result<Vec<f64>> {
    init();
    check_finite(m)?;
    let mut s = m
        .to_faer()
        .singular_values()
        .map_err(|e| Error::Decomposition(format!("svd: {e:?}")))?;
    s.reverse();
    Ok(s)
}

pub fn svd(m: &ComplexMatrix) -> Result<SvdFactors> {
    init();
    check_finite(m)?;
    let dec = m.to_faer().svd().map_err(|e| Error::Decomposition(format!("svd: {e:?}")))?;
    let k = m.rows().min(m.cols());
    let sv = dec.S().column_vector();
    let s: Vec<f64> = (0..k).rev().map(|i| sv[i].re).collect();
    let u_f = dec.U();
    let v_f = dec.V();
    // reverse the columns so the factors line up with ascending `s`
    let u = ComplexMatrix::from_fn(u_f.nrows(), k, |i, j| u_f[(i, k - 1 - j)]);
    let v = ComplexMatrix::from_fn(v_f.nrows(), k, |i, j| v_f[(i, k - 1 - j)]);
    Ok(SvdFactors { u, s, v })
}

pub fn eigenvalues(m: &ComplexMatrix) -> Result<Vec<Complex64>> {
    init();
    m.ensure_square()?;
    check_finite(m)?;
    m.to_faer().eigenvalues().map_err(|e| Error::Decomposition(format!("eigen: {e:?}")))
}

/// `log det (M M*) = 2 sum log sigma_j(M)`, with singular values floored at
/// the smallest positive normal float. Returns the value and how many
/// singular values hit the floor.
pub fn log_det_gram(m: &ComplexMatrix) -> Result<(f64, usize)> {
    let s = singular_values(m)?;
    let mut floored = 0;
    let v = s
        .iter()
        .map(|&x| {
            if x < f64::MIN_POSITIVE {
                floored += 1;
                2.0 * f64::MIN_POSITIVE.ln()
            } else {
                2.0 * x.ln()
            }
        })
        .sum();
    Ok((v, floored))
}

/// Determinant by Gaussian elimination with partial pivoting.
///
/// Kept independent of faer so it can serve as an oracle for the
/// singular-value and Grassmann routes.
pub fn determinant(m: &ComplexMatrix) -> Result<Complex64> {
    let n = m.ensure_square()?;
    let mut a: Vec<Complex64> = m.as_slice().to_vec();
    let mut det = Complex64::new(1.0, 0.0);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i * n + col].norm().total_cmp(&a[j * n + col].norm()))
            .expect("non-empty pivot range");
        if a[pivot * n + col].norm() == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        if pivot != col {
            for j in 0..n {
                a.swap(pivot * n + j, col * n + j);
            }
            det = -det;
        }
        let p = a[col * n + col];
        det *= p;
        for i in col + 1..n {
            let f = a[i * n + col] / p;
            if f == Complex64::new(0.0, 0.0) {
                continue;
            }
            for j in col..n {
                let upd = f * a[col * n + j];
                a[i * n + j] -= upd;
            }
        }
    }
    Ok(det)
}

/// Inverse by Gauss-Jordan elimination with partial pivoting.
pub fn inverse(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = m.ensure_square()?;
    let mut a = m.clone();
    let mut inv = ComplexMatrix::identity(n);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[(i, col)].norm().total_cmp(&a[(j, col)].norm()))
            .expect("non-empty pivot range");
        if a[(pivot, col)].norm() == 0.0 {
            return Err(Error::Numerical("singular matrix in inverse".into()));
        }
        if pivot != col {
            for j in 0..n {
                let t = a[(pivot, j)];
                a[(pivot, j)] = a[(col, j)];
                a[(col, j)] = t;
                let t = inv[(pivot, j)];
                inv[(pivot, j)] = inv[(col, j)];
                inv[(col, j)] = t;
            }
        }
        let p = a[(col, col)];
        for j in 0..n {
            a[(col, j)] /= p;
            inv[(col, j)] /= p;
        }
        for i in 0..n {
            if i == col {
                continue;
            }
            let f = a[(i, col)];
            if f == Complex64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..n {
                let (ac, ic) = (a[(col, j)], inv[(col, j)]);
                a[(i, j)] -= f * ac;
                inv[(i, j)] -= f * ic;
            }
        }
    }
    Ok(inv)
}

/// Haar-distributed unitary: QR of a complex Gaussian matrix with the
/// diagonal phases of R divided out.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    init();
    let g = faer::Mat::<Complex64>::from_fn(n, n, |_, _| {
        Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    let qr = g.qr();
    let q = qr.compute_Q();
    let r = qr.R();
    ComplexMatrix::from_fn(n, n, |i, j| {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        q[(i, j)] * phase
    })
}
