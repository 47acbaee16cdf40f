use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use super::{Coefficient, TranscendentalCoefficient};
use crate::error::{Error, Result};

/// Largest supported number of generators (monomials are `u64` bitmasks).
pub const MAX_GENERATORS: usize = 64;

/// Element of the Grassmann algebra on `m` generators `psi_0, ..., psi_{m-1}`.
///
/// A monomial is stored as the bitmask of its generators, read in increasing
/// index order: mask `0b101` is `psi_0 psi_2`.
#[derive(Clone, Debug, PartialEq)]
pub struct GrassmannElement<C> {
    m: usize,
    terms: BTreeMap<u64, C>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
    Mixed,
}

/// True when bringing `a * b` into increasing order needs an odd number of
/// transpositions, i.e. the number of pairs `i in a, j in b, i > j` is odd.
pub(crate) fn product_sign_negative(a: u64, b: u64) -> bool {
    let mut count = 0u32;
    let mut rest = b;
    while rest != 0 {
        let j = rest.trailing_zeros();
        let above = if j >= 63 { 0 } else { a >> (j + 1) };
        count += above.count_ones();
        rest &= rest - 1;
    }
    count % 2 == 1
}

fn check_space(m: usize) -> Result<()> {
    if m > MAX_GENERATORS {
        return Err(Error::Algebra(format!("{m} generators exceed the supported {MAX_GENERATORS}")));
    }
    Ok(())
}

impl<C: Coefficient> GrassmannElement<C> {
    pub fn zero(m: usize) -> Self {
        assert!(m <= MAX_GENERATORS, "at most {MAX_GENERATORS} generators");
        Self { m, terms: BTreeMap::new() }
    }

    pub fn scalar(m: usize, c: C) -> Self {
        let mut x = Self::zero(m);
        x.insert(0, c);
        x
    }

    pub fn one(m: usize) -> Self {
        Self::scalar(m, C::one())
    }

    pub fn generator(m: usize, j: usize) -> Result<Self> {
        check_space(m)?;
        if j >= m {
            return Err(Error::Algebra(format!("generator {j} outside an algebra of {m} generators")));
        }
        let mut x = Self::zero(m);
        x.insert(1 << j, C::one());
        Ok(x)
    }

    /// `c psi_{g_0} psi_{g_1} ...` in the given order; zero if a generator repeats.
    pub fn monomial(m: usize, gens: &[usize], c: C) -> Result<Self> {
        let mut x = Self::scalar(m, c);
        for &g in gens {
            x = x.try_mul(&Self::generator(m, g)?)?;
        }
        Ok(x)
    }

    /// Builds an element from `(mask, coefficient)` pairs in canonical order.
    pub fn from_terms(m: usize, terms: impl IntoIterator<Item = (u64, C)>) -> Result<Self> {
        check_space(m)?;
        let limit = if m == 64 { u64::MAX } else { (1u64 << m) - 1 };
        let mut x = Self::zero(m);
        for (mask, c) in terms {
            if mask & !limit != 0 {
                return Err(Error::Algebra(format!("monomial {mask:#b} uses generators beyond {m}")));
            }
            x.insert(mask, c);
        }
        Ok(x)
    }

    fn insert(&mut self, mask: u64, c: C) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&mask) {
            Some(v) => {
                *v = v.clone() + c;
                if v.is_zero() {
                    self.terms.remove(&mask);
                }
            }
            None => {
                self.terms.insert(mask, c);
            }
        }
    }

    pub fn num_generators(&self) -> usize {
        self.m
    }

    pub fn coefficient(&self, mask: u64) -> C {
        self.terms.get(&mask).cloned().unwrap_or_else(C::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (u64, &C)> {
        self.terms.iter().map(|(k, v)| (*k, v))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Numeric part (coefficient of the empty monomial).
    pub fn body(&self) -> C {
        self.coefficient(0)
    }

    pub fn soul(&self) -> Self {
        let mut x = self.clone();
        x.terms.remove(&0);
        x
    }

    pub fn parity(&self) -> Parity {
        let even = self.terms.keys().all(|k| k.count_ones() % 2 == 0);
        let odd = self.terms.keys().all(|k| k.count_ones() % 2 == 1);
        match (even, odd) {
            (true, _) => Parity::Even,
            (false, true) => Parity::Odd,
            _ => Parity::Mixed,
        }
    }

    pub fn is_even(&self) -> bool {
        self.parity() == Parity::Even
    }

    pub fn is_odd(&self) -> bool {
        self.is_zero() || self.parity() == Parity::Odd
    }

    /// Same element viewed in an algebra with `m >= self.m` generators.
    pub fn embed(&self, m: usize) -> Result<Self> {
        check_space(m)?;
        if m < self.m {
            return Err(Error::Algebra(format!("cannot embed {} generators into {m}", self.m)));
        }
        Ok(Self { m, terms: self.terms.clone() })
    }

    fn same_space(&self, other: &Self) -> Result<()> {
        if self.m != other.m {
            return Err(Error::Algebra(format!(
                "mismatched generator spaces: {} and {} generators",
                self.m, other.m
            )));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.same_space(other)?;
        let mut x = self.clone();
        for (&k, v) in &other.terms {
            x.insert(k, v.clone());
        }
        Ok(x)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.try_add(&other.scale(&-C::one()))
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.same_space(other)?;
        let mut x = Self::zero(self.m);
        for (&a, ca) in &self.terms {
            for (&b, cb) in &other.terms {
                if a & b != 0 {
                    continue;
                }
                let c = ca.clone() * cb.clone();
                x.insert(a | b, if product_sign_negative(a, b) { -c } else { c });
            }
        }
        Ok(x)
    }

    pub fn scale(&self, c: &C) -> Self {
        let mut x = Self::zero(self.m);
        for (&k, v) in &self.terms {
            x.insert(k, v.clone() * c.clone());
        }
        x
    }

    /// `sum_k x^k / k!` for an even element without body; the series stops at
    /// the first vanishing power.
    pub fn exp_nilpotent(&self) -> Result<Self> {
        if !self.is_even() {
            return Err(Error::Algebra("exponential of a non-even element".into()));
        }
        if !self.body().is_zero() {
            return Err(Error::Algebra("exp_nilpotent needs an element with zero body".into()));
        }
        let mut sum = Self::one(self.m);
        let mut term = Self::one(self.m);
        for k in 1..=self.m / 2 + 1 {
            term = term.try_mul(self)?;
            if term.is_zero() {
                break;
            }
            let kk = C::from_usize(k).ok_or_else(|| Error::Algebra("coefficient from integer".into()))?;
            term = term.scale(&(C::one() / kk));
            sum = sum.try_add(&term)?;
        }
        Ok(sum)
    }

    /// Algebra homomorphism sending generator `i` to `images[i]`. The images
    /// live in the target algebra and should be odd.
    pub fn substitute(&self, images: &[Self]) -> Result<Self> {
        if images.len() != self.m {
            return Err(Error::Algebra(format!("{} images for {} generators", images.len(), self.m)));
        }
        let target = images.first().map_or(self.m, |x| x.m);
        if images.iter().any(|x| x.m != target) {
            return Err(Error::Algebra("images live in different algebras".into()));
        }
        let mut out = Self::zero(target);
        for (&mask, c) in &self.terms {
            let mut prod = Self::scalar(target, c.clone());
            let mut rest = mask;
            while rest != 0 {
                let j = rest.trailing_zeros() as usize;
                prod = prod.try_mul(&images[j])?;
                rest &= rest - 1;
            }
            out = out.try_add(&prod)?;
        }
        Ok(out)
    }

    /// Largest coefficientwise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut keys: Vec<u64> = self.terms.keys().chain(other.terms.keys()).copied().collect();
        keys.sort_unstable();
        keys.dedup();
        keys.into_iter()
            .map(|k| (self.coefficient(k) - other.coefficient(k)).modulus())
            .fold(0.0, f64::max)
    }

    pub fn max_coefficient(&self) -> f64 {
        self.terms.values().map(|c| c.modulus()).fold(0.0, f64::max)
    }
}

pub fn g_add<C: Coefficient>(a: &GrassmannElement<C>, b: &GrassmannElement<C>) -> Result<GrassmannElement<C>> {
    a.try_add(b)
}

pub fn g_mul<C: Coefficient>(a: &GrassmannElement<C>, b: &GrassmannElement<C>) -> Result<GrassmannElement<C>> {
    a.try_mul(b)
}

pub fn g_scale<C: Coefficient>(a: &GrassmannElement<C>, c: &C) -> GrassmannElement<C> {
    a.scale(c)
}

/// `exp(x) = e^{body} sum_k soul^k / k!` for even `x`.
pub fn g_exp<C: TranscendentalCoefficient>(x: &GrassmannElement<C>) -> Result<GrassmannElement<C>> {
    if !x.is_even() {
        return Err(Error::Algebra("exponential of a non-even element".into()));
    }
    Ok(x.soul().exp_nilpotent()?.scale(&x.body().exp()))
}

/// `1 / x` for an element with invertible body.
pub fn g_inverse<C: Coefficient>(x: &GrassmannElement<C>) -> Result<GrassmannElement<C>> {
    let b = x.body();
    if b.is_zero() {
        return Err(Error::Algebra("element with zero body is not invertible".into()));
    }
    let inv_b = C::one() / b;
    let q = x.soul().scale(&-inv_b.clone());
    let mut sum = GrassmannElement::one(x.m);
    let mut term = GrassmannElement::one(x.m);
    for _ in 0..=x.m {
        term = term.try_mul(&q)?;
        if term.is_zero() {
            break;
        }
        sum = sum.try_add(&term)?;
    }
    Ok(sum.scale(&inv_b))
}

/// Repeated Berezin integral `int x d psi_{g_0} d psi_{g_1} ...`: the leftmost
/// differential is integrated first. A single integral `int x d psi_j` moves
/// `psi_j` to the right end of each monomial and drops it.
pub fn berezin_integrate<C: Coefficient>(x: &GrassmannElement<C>, gens: &[usize]) -> Result<GrassmannElement<C>> {
    let mut seen = 0u64;
    for &g in gens {
        if g >= x.m {
            return Err(Error::Algebra(format!("generator {g} is not in an algebra of {} generators", x.m)));
        }
        if seen & (1 << g) != 0 {
            return Err(Error::Algebra(format!("generator {g} listed twice")));
        }
        seen |= 1 << g;
    }
    let mut cur = x.clone();
    for &g in gens {
        let bit = 1u64 << g;
        let mut next = GrassmannElement::zero(x.m);
        for (&mask, c) in &cur.terms {
            if mask & bit == 0 {
                continue;
            }
            let above = if g >= 63 { 0 } else { mask >> (g + 1) };
            let c = if above.count_ones() % 2 == 1 { -c.clone() } else { c.clone() };
            next.insert(mask & !bit, c);
        }
        cur = next;
    }
    Ok(cur)
}

impl<C: Coefficient> Add for &GrassmannElement<C> {
    type Output = GrassmannElement<C>;

    fn add(self, rhs: Self) -> GrassmannElement<C> {
        self.try_add(rhs).expect("Grassmann addition")
    }
}

impl<C: Coefficient> Sub for &GrassmannElement<C> {
    type Output = GrassmannElement<C>;

    fn sub(self, rhs: Self) -> GrassmannElement<C> {
        self.try_sub(rhs).expect("Grassmann subtraction")
    }
}

impl<C: Coefficient> Mul for &GrassmannElement<C> {
    type Output = GrassmannElement<C>;

    fn mul(self, rhs: Self) -> GrassmannElement<C> {
        self.try_mul(rhs).expect("Grassmann multiplication")
    }
}

impl<C: Coefficient> Neg for &GrassmannElement<C> {
    type Output = GrassmannElement<C>;

    fn neg(self) -> GrassmannElement<C> {
        self.scale(&-C::one())
    }
}
