//! Deformation matrices and reproducible Ginibre sampling.

use std::path::PathBuf;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;
use crate::rng::{self, Domain};
use crate::Complex64;

/// Which deformation `A0` to build.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DeformationKind {
    Zero,
    /// `a I`.
    ScalarShift { a: Complex64 },
    /// `diag(a, ..., a, -a, ..., -a)` with equal multiplicities.
    TwoAtomDiagonal { a: Complex64 },
    /// Single Jordan block: `eigenvalue` on the diagonal, ones above it.
    JordanBlock { eigenvalue: Complex64 },
    /// iid complex Gaussian entries with `E|a_ij|^2 = entry_variance`.
    IidRandom { entry_variance: f64, seed: u64 },
    /// Matrix read from the interchange format of [`crate::runner::io`].
    Explicit { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeformationSpec {
    #[serde(flatten)]
    pub kind: DeformationKind,
    pub n: usize,
}

impl DeformationSpec {
    pub fn new(kind: DeformationKind, n: usize) -> Self {
        Self { kind, n }
    }

    pub fn zero(n: usize) -> Self {
        Self::new(DeformationKind::Zero, n)
    }

    pub fn scalar_shift(a: Complex64, n: usize) -> Self {
        Self::new(DeformationKind::ScalarShift { a }, n)
    }

    pub fn two_atom(a: Complex64, n: usize) -> Self {
        Self::new(DeformationKind::TwoAtomDiagonal { a }, n)
    }

    pub fn jordan(eigenvalue: Complex64, n: usize) -> Self {
        Self::new(DeformationKind::JordanBlock { eigenvalue }, n)
    }

    pub fn iid(entry_variance: f64, seed: u64, n: usize) -> Self {
        Self::new(DeformationKind::IidRandom { entry_variance, seed }, n)
    }

    /// Same deformation kind at another dimension.
    pub fn with_n(&self, n: usize) -> Self {
        Self { kind: self.kind.clone(), n }
    }

    /// SHA-256 hex digest of the canonical JSON form; used in manifests.
    pub fn digest(&self) -> String {
        crate::runner::manifest::digest_json(self)
    }
}

/// Builds the `n x n` matrix described by `spec`.
pub fn realize_deformation(spec: &DeformationSpec) -> Result<ComplexMatrix> {
    let n = spec.n;
    if n == 0 {
        return Err(Error::invalid("deformation dimension n must be >= 1"));
    }
    let zero = Complex64::new(0.0, 0.0);
    let m = match &spec.kind {
        DeformationKind::Zero => ComplexMatrix::zeros(n, n),
        DeformationKind::ScalarShift { a } => ComplexMatrix::from_diagonal(&vec![*a; n]),
        DeformationKind::TwoAtomDiagonal { a } => {
            if !n.is_multiple_of(2) {
                return Err(Error::invalid(format!("two-atom deformation needs even n, got {n}")));
            }
            let diag: Vec<Complex64> = (0..n).map(|i| if i < n / 2 { *a } else { -*a }).collect();
            ComplexMatrix::from_diagonal(&diag)
        }
        DeformationKind::JordanBlock { eigenvalue } => ComplexMatrix::from_fn(n, n, |i, j| {
            if i == j {
                *eigenvalue
            } else if j == i + 1 {
                Complex64::new(1.0, 0.0)
            } else {
                zero
            }
        }),
        DeformationKind::IidRandom { entry_variance, seed } => {
            if !(entry_variance.is_finite() && *entry_variance >= 0.0) {
                return Err(Error::invalid("entry_variance must be finite and non-negative"));
            }
            let mut rng = rng::stream(*seed, Domain::Deformation, 0);
            let normal = Normal::new(0.0, (entry_variance / 2.0).sqrt())
                .map_err(|e| Error::invalid(e.to_string()))?;
            ComplexMatrix::from_fn(n, n, |_, _| Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng)))
        }
        DeformationKind::Explicit { path } => {
            let m = crate::runner::io::read_matrix(path)?;
            if m.rows() != n || m.cols() != n {
                return Err(Error::DimensionMismatch {
                    expected: format!("{n}x{n}"),
                    got: format!("{}x{}", m.rows(), m.cols()),
                });
            }
            m
        }
    };
    Ok(m)
}

/// One Ginibre matrix `H0`.
#[derive(Clone, Debug)]
pub struct GinibreDraw {
    pub n: usize,
    pub master_seed: u64,
    pub trial_index: u64,
    pub matrix: ComplexMatrix,
}

/// Fills an `n x n` matrix with iid entries whose real and imaginary parts
/// are independent `N(0, 1/(2n))`.
pub fn fill_ginibre<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let normal = Normal::new(0.0, (0.5 / n as f64).sqrt()).expect("positive standard deviation");
    ComplexMatrix::from_fn(n, n, |_, _| Complex64::new(normal.sample(rng), normal.sample(rng)))
}

pub fn sample_ginibre(n: usize, master_seed: u64, trial_index: u64) -> Result<GinibreDraw> {
    if n == 0 {
        return Err(Error::invalid("n must be >= 1"));
    }
    let mut rng = rng::trial_stream(master_seed, trial_index);
    Ok(GinibreDraw { n, master_seed, trial_index, matrix: fill_ginibre(n, &mut rng) })
}

/// `A0 + H0` for trial `trial_index`.
pub fn sample_deformed(spec: &DeformationSpec, master_seed: u64, trial_index: u64) -> Result<ComplexMatrix> {
    let a0 = realize_deformation(spec)?;
    sample_with_deformation(&a0, master_seed, trial_index)
}

/// Same as [`sample_deformed`] with an already realized `A0`, so Monte Carlo
/// loops build the deformation once.
pub fn sample_with_deformation(a0: &ComplexMatrix, master_seed: u64, trial_index: u64) -> Result<ComplexMatrix> {
    let n = a0.ensure_square()?;
    let draw = sample_ginibre(n, master_seed, trial_index)?;
    Ok(a0 + &draw.matrix)
}
