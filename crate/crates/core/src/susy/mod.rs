//! Exact finite Grassmann algebra, supermatrices, and checks of the Gaussian,
//! Berezinian, Hubbard-Stratonovich and change-of-variables identities.

pub mod checks;
pub mod grassmann;
pub mod supermatrix;

use std::fmt::Debug;
use std::ops::Neg;

use num_rational::Rational64;
use num_traits::{FromPrimitive, Num, ToPrimitive};

use crate::Complex64;

pub use grassmann::{berezin_integrate, g_add, g_exp, g_inverse, g_mul, g_scale, GrassmannElement, Parity};
pub use supermatrix::{GMatrix, SuperMatrix};

/// Coefficient ring of the algebra.
pub trait Coefficient: Num + Neg<Output = Self> + Clone + FromPrimitive + Debug + Send + Sync + 'static {
    /// Magnitude used for tolerance comparisons.
    fn modulus(&self) -> f64;
}

/// Coefficients with `exp` and `ln`, needed once elements carry a body.
pub trait TranscendentalCoefficient: Coefficient {
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
}

impl Coefficient for f64 {
    fn modulus(&self) -> f64 {
        self.abs()
    }
}

impl Coefficient for Complex64 {
    fn modulus(&self) -> f64 {
        self.norm()
    }
}

impl Coefficient for Rational64 {
    fn modulus(&self) -> f64 {
        self.to_f64().map_or(f64::INFINITY, f64::abs)
    }
}

impl TranscendentalCoefficient for f64 {
    fn exp(&self) -> Self {
        f64::exp(*self)
    }

    fn ln(&self) -> Self {
        f64::ln(*self)
    }
}

impl TranscendentalCoefficient for Complex64 {
    fn exp(&self) -> Self {
        Complex64::exp(*self)
    }

    fn ln(&self) -> Self {
        Complex64::ln(*self)
    }
}
