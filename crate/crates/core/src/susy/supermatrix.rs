use super::grassmann::{g_inverse, GrassmannElement};
use super::{Coefficient, TranscendentalCoefficient};
use crate::error::{Error, Result};

type G<C> = GrassmannElement<C>;

/// Dense matrix with Grassmann entries, all in one algebra of `m` generators.
#[derive(Clone, Debug, PartialEq)]
pub struct GMatrix<C> {
    rows: usize,
    cols: usize,
    m: usize,
    data: Vec<G<C>>,
}

impl<C: Coefficient> GMatrix<C> {
    pub fn zeros(rows: usize, cols: usize, m: usize) -> Self {
        Self { rows, cols, m, data: vec![G::zero(m); rows * cols] }
    }

    pub fn identity(n: usize, m: usize) -> Self {
        let mut x = Self::zeros(n, n, m);
        for i in 0..n {
            x.data[i * n + i] = G::one(m);
        }
        x
    }

    pub fn from_fn(rows: usize, cols: usize, m: usize, mut f: impl FnMut(usize, usize) -> G<C>) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                let e = f(i, j);
                if e.num_generators() != m {
                    return Err(Error::Algebra(format!("entry ({i}, {j}) lives in a different algebra")));
                }
                data.push(e);
            }
        }
        Ok(Self { rows, cols, m, data })
    }

    /// Matrix of numbers embedded as scalars.
    pub fn from_numeric(rows: usize, cols: usize, m: usize, mut f: impl FnMut(usize, usize) -> C) -> Self {
        Self::from_fn(rows, cols, m, |i, j| G::scalar(m, f(i, j))).expect("scalar entries share the algebra")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn num_generators(&self) -> usize {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> &G<C> {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: G<C>) {
        assert_eq!(x.num_generators(), self.m, "entry from another algebra");
        self.data[i * self.cols + j] = x;
    }

    pub fn entries(&self) -> &[G<C>] {
        &self.data
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn all_even(&self) -> bool {
        self.data.iter().all(|x| x.is_even())
    }

    pub fn all_odd(&self) -> bool {
        self.data.iter().all(|x| x.is_odd())
    }

    /// Matrix of entry bodies.
    pub fn body(&self) -> Self {
        Self { rows: self.rows, cols: self.cols, m: self.m, data: self.data.iter().map(|x| G::scalar(self.m, x.body())).collect() }
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols || self.m != other.m {
            return Err(Error::DimensionMismatch {
                expected: format!("{}x{} over {} generators", self.rows, self.cols, self.m),
                got: format!("{}x{} over {} generators", other.rows, other.cols, other.m),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a.try_add(b)).collect::<Result<_>>()?;
        Ok(Self { rows: self.rows, cols: self.cols, m: self.m, data })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a.try_sub(b)).collect::<Result<_>>()?;
        Ok(Self { rows: self.rows, cols: self.cols, m: self.m, data })
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows || self.m != other.m {
            return Err(Error::DimensionMismatch {
                expected: format!("{} rows over {} generators", self.cols, self.m),
                got: format!("{} rows over {} generators", other.rows, other.m),
            });
        }
        let mut out = Self::zeros(self.rows, other.cols, self.m);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = G::zero(self.m);
                for k in 0..self.cols {
                    acc = acc.try_add(&self.get(i, k).try_mul(other.get(k, j))?)?;
                }
                out.data[i * other.cols + j] = acc;
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &G<C>) -> Result<Self> {
        let data = self.data.iter().map(|x| c.try_mul(x)).collect::<Result<_>>()?;
        Ok(Self { rows: self.rows, cols: self.cols, m: self.m, data })
    }

    pub fn trace(&self) -> Result<G<C>> {
        if self.rows != self.cols {
            return Err(Error::invalid("trace of a non-square matrix"));
        }
        let mut t = G::zero(self.m);
        for i in 0..self.rows {
            t = t.try_add(self.get(i, i))?;
        }
        Ok(t)
    }

    /// Determinant by cofactor expansion; entries must be even (hence commuting).
    pub fn det(&self) -> Result<G<C>> {
        if self.rows != self.cols {
            return Err(Error::invalid("determinant of a non-square matrix"));
        }
        if !self.all_even() {
            return Err(Error::Algebra("determinant needs even entries".into()));
        }
        let idx: Vec<usize> = (0..self.rows).collect();
        self.minor_det(&idx, 0)
    }

    fn minor_det(&self, cols: &[usize], row: usize) -> Result<G<C>> {
        if cols.is_empty() {
            return Ok(G::one(self.m));
        }
        let mut acc = G::zero(self.m);
        for (k, &c) in cols.iter().enumerate() {
            let entry = self.get(row, c);
            if entry.is_zero() {
                continue;
            }
            let rest: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
            let term = entry.try_mul(&self.minor_det(&rest, row + 1)?)?;
            acc = if k % 2 == 0 { acc.try_add(&term)? } else { acc.try_sub(&term)? };
        }
        Ok(acc)
    }

    /// Inverse of a matrix with even entries, by Gauss-Jordan elimination
    /// pivoting on the largest body.
    pub fn inverse(&self) -> Result<Self> {
        let n = self.rows;
        if n != self.cols {
            return Err(Error::invalid("inverse of a non-square matrix"));
        }
        if !self.all_even() {
            return Err(Error::Algebra("inverse needs even entries".into()));
        }
        let mut a = self.clone();
        let mut inv = Self::identity(n, self.m);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| a.get(i, col).body().modulus().total_cmp(&a.get(j, col).body().modulus()))
                .expect("non-empty range");
            if a.get(pivot, col).body().modulus() == 0.0 {
                return Err(Error::Algebra("matrix body is singular".into()));
            }
            if pivot != col {
                for j in 0..n {
                    a.data.swap(pivot * n + j, col * n + j);
                    inv.data.swap(pivot * n + j, col * n + j);
                }
            }
            let p_inv = g_inverse(a.get(col, col))?;
            for j in 0..n {
                a.data[col * n + j] = p_inv.try_mul(a.get(col, j))?;
                inv.data[col * n + j] = p_inv.try_mul(inv.get(col, j))?;
            }
            for i in 0..n {
                if i == col || a.get(i, col).is_zero() {
                    continue;
                }
                let factor = a.get(i, col).clone();
                for j in 0..n {
                    let da = factor.try_mul(a.get(col, j))?;
                    let di = factor.try_mul(inv.get(col, j))?;
                    a.data[i * n + j] = a.get(i, j).try_sub(&da)?;
                    inv.data[i * n + j] = inv.get(i, j).try_sub(&di)?;
                }
            }
        }
        Ok(inv)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a.max_abs_diff(b)).fold(0.0, f64::max)
    }
}

/// Supermatrix `F = [[A, chi], [eta, B]]` with even `A` (`p x p`), even `B`
/// (`q x q`) and odd off-diagonal blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperMatrix<C> {
    pub a: GMatrix<C>,
    pub chi: GMatrix<C>,
    pub eta: GMatrix<C>,
    pub b: GMatrix<C>,
}

impl<C: Coefficient> SuperMatrix<C> {
    pub fn new(a: GMatrix<C>, chi: GMatrix<C>, eta: GMatrix<C>, b: GMatrix<C>) -> Result<Self> {
        let (p, q) = (a.rows(), b.rows());
        let shapes = [(&a, p, p), (&chi, p, q), (&eta, q, p), (&b, q, q)];
        for (blk, r, c) in shapes {
            if blk.rows() != r || blk.cols() != c || blk.num_generators() != a.num_generators() {
                return Err(Error::DimensionMismatch {
                    expected: format!("{r}x{c} block over {} generators", a.num_generators()),
                    got: format!("{}x{} over {}", blk.rows(), blk.cols(), blk.num_generators()),
                });
            }
        }
        if !a.all_even() || !b.all_even() {
            return Err(Error::Algebra("diagonal blocks must be even".into()));
        }
        if !chi.all_odd() || !eta.all_odd() {
            return Err(Error::Algebra("off-diagonal blocks must be odd".into()));
        }
        Ok(Self { a, chi, eta, b })
    }

    pub fn identity(p: usize, q: usize, m: usize) -> Self {
        Self {
            a: GMatrix::identity(p, m),
            chi: GMatrix::zeros(p, q, m),
            eta: GMatrix::zeros(q, p, m),
            b: GMatrix::identity(q, m),
        }
    }

    pub fn p(&self) -> usize {
        self.a.rows()
    }

    pub fn q(&self) -> usize {
        self.b.rows()
    }

    pub fn num_generators(&self) -> usize {
        self.a.num_generators()
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        let a = self.a.mul(&other.a)?.add(&self.chi.mul(&other.eta)?)?;
        let chi = self.a.mul(&other.chi)?.add(&self.chi.mul(&other.b)?)?;
        let eta = self.eta.mul(&other.a)?.add(&self.b.mul(&other.eta)?)?;
        let b = self.eta.mul(&other.chi)?.add(&self.b.mul(&other.b)?)?;
        Self::new(a, chi, eta, b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        Ok(Self {
            a: self.a.sub(&other.a)?,
            chi: self.chi.sub(&other.chi)?,
            eta: self.eta.sub(&other.eta)?,
            b: self.b.sub(&other.b)?,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.chi.is_zero() && self.eta.is_zero() && self.b.is_zero()
    }

    /// `Str F = Tr A - Tr B`.
    pub fn supertrace(&self) -> Result<G<C>> {
        self.a.trace()?.try_sub(&self.b.trace()?)
    }

    /// `Sdet F = det(A - chi B^-1 eta) / det B`.
    pub fn sdet(&self) -> Result<G<C>> {
        let b_inv = self.b.inverse()?;
        let schur = self.a.sub(&self.chi.mul(&b_inv)?.mul(&self.eta)?)?;
        schur.det()?.try_mul(&g_inverse(&self.b.det()?)?)
    }

    /// Numeric part `diag(body A, body B)` (odd blocks have no body).
    pub fn body(&self) -> Self {
        let m = self.num_generators();
        Self {
            a: self.a.body(),
            chi: GMatrix::zeros(self.p(), self.q(), m),
            eta: GMatrix::zeros(self.q(), self.p(), m),
            b: self.b.body(),
        }
    }
}

impl<C: TranscendentalCoefficient> SuperMatrix<C> {
    /// `Str log F = log det A0 - log det B0 + sum_k (-1)^{k+1} Str(X^k) / k`
    /// with `F0 = body(F)` and `X = F0^-1 (F - F0)` nilpotent.
    pub fn str_log(&self) -> Result<G<C>> {
        let m = self.num_generators();
        let f0 = self.body();
        let det_a0 = f0.a.det()?.body();
        let det_b0 = f0.b.det()?.body();
        if det_a0.is_zero() || det_b0.is_zero() {
            return Err(Error::Algebra("log of a supermatrix with a singular numeric block".into()));
        }
        let f0_inv = Self {
            a: f0.a.inverse()?,
            chi: f0.chi.clone(),
            eta: f0.eta.clone(),
            b: f0.b.inverse()?,
        };
        let x = f0_inv.mul(&self.sub(&f0)?)?;
        let mut sum = G::scalar(m, det_a0.ln() - det_b0.ln());
        let mut power = x.clone();
        for k in 1..=m + 1 {
            if power.is_zero() {
                break;
            }
            let kk = C::from_usize(k).ok_or_else(|| Error::Algebra("coefficient from integer".into()))?;
            let coeff = if k % 2 == 1 { C::one() / kk } else { -(C::one() / kk) };
            sum = sum.try_add(&power.supertrace()?.scale(&coeff))?;
            power = power.mul(&x)?;
        }
        Ok(sum)
    }
}
