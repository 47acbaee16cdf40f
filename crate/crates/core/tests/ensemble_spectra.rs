//! Sampling reproducibility, entry moments and eigenvalue routines.

use deformed_ginibre::ensemble::{realize_deformation, sample_deformed, sample_ginibre, DeformationSpec};
use deformed_ginibre::spectra::{
    eigenvalues, gen_functional_mc, sample_eigen_batch, sigma_min, trace_residual, GenFunctionalArgs,
};
use deformed_ginibre::{Complex64, ComplexMatrix};
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn sorted_by_re(mut v: Vec<Complex64>) -> Vec<Complex64> {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn draws_depend_only_on_seed_and_trial(seed in any::<u64>(), trial in 0u64..1000, n in 2usize..12) {
        let a = sample_ginibre(n, seed, trial).unwrap();
        let b = sample_ginibre(n, seed, trial).unwrap();
        prop_assert_eq!(&a.matrix, &b.matrix);
        let other = sample_ginibre(n, seed, trial + 1).unwrap();
        prop_assert_ne!(&a.matrix, &other.matrix);
    }

    #[test]
    fn eigenvalues_sum_to_trace(seed in any::<u64>(), n in 2usize..24, a in -1.0f64..1.0) {
        let h = sample_deformed(&DeformationSpec::jordan(c(a, 0.5 * a), n), seed, 0).unwrap();
        let eigs = eigenvalues(&h).unwrap();
        prop_assert_eq!(eigs.len(), n);
        prop_assert!(trace_residual(&h, &eigs) < 1e-10 * (1.0 + h.frobenius_norm()));
    }
}

#[test]
fn entry_moments_match_complex_gaussian() {
    let n = 64;
    let trials = 40;
    let (mut m1, mut m2, mut m2c, mut m4) = (c(0.0, 0.0), 0.0, c(0.0, 0.0), 0.0);
    for t in 0..trials {
        for h in sample_ginibre(n, 11, t).unwrap().matrix.as_slice() {
            m1 += h;
            m2 += h.norm_sqr();
            m2c += h * h;
            m4 += h.norm_sqr().powi(2);
        }
    }
    let count = (n * n) as f64 * trials as f64;
    let nf = n as f64;
    let (m1, m2, m2c, m4) = (m1 / count, m2 / count, m2c / count, m4 / count);
    // standard errors are all of order 1 / (n sqrt(count)) relative to 1/n
    let se = 1.0 / (nf * count.sqrt());
    assert!(m1.norm() < 5.0 * se * nf.sqrt(), "mean {m1}");
    assert!((m2 - 1.0 / nf).abs() < 5.0 * se, "E|h|^2 = {m2}");
    assert!(m2c.norm() < 5.0 * se, "E h^2 = {m2c}");
    assert!((m4 - 2.0 / (nf * nf)).abs() < 5.0 * 2.0 * se / nf, "E|h|^4 = {m4}");
}

#[test]
fn batches_are_ordered_and_reproducible() {
    let spec = DeformationSpec::two_atom(c(0.5, 0.0), 16);
    let (a, failed) = sample_eigen_batch(&spec, 5, 6).unwrap();
    let (b, _) = sample_eigen_batch(&spec, 5, 6).unwrap();
    assert!(failed.is_empty());
    assert_eq!(a, b);
    assert!(a.iter().enumerate().all(|(i, s)| s.trial_index == i as u64));
}

#[test]
fn diagonal_matrix_eigenvalues() {
    let d = [c(1.0, 2.0), c(-3.0, 0.0), c(0.0, -0.5)];
    let eigs = sorted_by_re(eigenvalues(&ComplexMatrix::from_diagonal(&d)).unwrap());
    let want = sorted_by_re(d.to_vec());
    for (e, w) in eigs.iter().zip(&want) {
        assert!((e - w).norm() < 1e-12);
    }
}

#[test]
fn companion_matrix_recovers_polynomial_roots() {
    // roots 1, 2, i, -i of x^4 - 3x^3 + 3x^2 - 3x + 2
    let coeffs = [2.0, -3.0, 3.0, -3.0];
    let m = ComplexMatrix::from_fn(4, 4, |i, j| {
        if j == 3 {
            c(-coeffs[i], 0.0)
        } else if i == j + 1 {
            c(1.0, 0.0)
        } else {
            c(0.0, 0.0)
        }
    });
    let eigs = eigenvalues(&m).unwrap();
    for root in [c(1.0, 0.0), c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0)] {
        let d = eigs.iter().map(|e| (e - root).norm()).fold(f64::INFINITY, f64::min);
        assert!(d < 1e-10, "root {root} missed by {d}");
    }
}

#[test]
fn smallest_singular_value_examples() {
    assert!(sigma_min(&ComplexMatrix::identity(3), c(1.0, 0.0)).unwrap().abs() < 1e-14);
    let h = ComplexMatrix::from_diagonal(&[c(1.0, 0.0), c(3.0, 0.0)]);
    assert!((sigma_min(&h, c(0.0, 0.0)).unwrap() - 1.0).abs() < 1e-14);
}

#[test]
fn deformations_have_the_documented_shape() {
    let two = realize_deformation(&DeformationSpec::two_atom(c(0.5, 0.0), 4)).unwrap();
    let diag: Vec<Complex64> = (0..4).map(|i| two[(i, i)]).collect();
    assert_eq!(diag, vec![c(0.5, 0.0), c(0.5, 0.0), c(-0.5, 0.0), c(-0.5, 0.0)]);
    let j = realize_deformation(&DeformationSpec::jordan(c(0.2, 0.0), 3)).unwrap();
    assert_eq!(j[(0, 1)], c(1.0, 0.0));
    assert_eq!(j[(1, 2)], c(1.0, 0.0));
    assert_eq!(j[(2, 0)], c(0.0, 0.0));
    assert!(realize_deformation(&DeformationSpec::two_atom(c(0.5, 0.0), 5)).is_err());
}

#[test]
fn generating_functional_is_symmetric_under_swapping_points() {
    let args = GenFunctionalArgs {
        z0: c(0.1, 0.0),
        zeta: [c(0.3, 0.1), c(-0.2, 0.4)],
        zeta_prime: [c(0.5, 0.0), c(0.0, -0.5)],
        eps_hat: [0.3, 0.6],
        eps_prime: 0.4,
    };
    let spec = DeformationSpec::zero(8);
    let a = gen_functional_mc(&spec, &args, 300, 3).unwrap();
    let b = gen_functional_mc(&spec, &args.swapped(), 300, 3).unwrap();
    assert!((a.estimate - b.estimate).abs() <= 1e-12 * a.estimate.abs());
    assert!(gen_functional_mc(&spec, &GenFunctionalArgs { eps_prime: 0.0, ..args }, 10, 3).is_err());
}
