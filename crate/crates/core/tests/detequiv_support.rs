//! Deterministic equivalents: closed forms, invariances and the support contour.

use std::path::PathBuf;

use deformed_ginibre::contour::ScanGrid;
use deformed_ginibre::detequiv::{
    deterministic_equivalents, in_support, saddle_values, shifted_spectrum, solve_u_star, support_boundary_scan,
};
use deformed_ginibre::ensemble::{realize_deformation, DeformationSpec};
use deformed_ginibre::linalg::random_unitary;
use deformed_ginibre::{Complex64, Error};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn two_atom_closed_forms(a in 0.02f64..0.98, half in 1usize..16) {
        let a0 = realize_deformation(&DeformationSpec::two_atom(c(a, 0.0), 2 * half)).unwrap();
        let p = deterministic_equivalents(&a0, c(0.0, 0.0), 1e-14).unwrap();
        prop_assert!((p.u_star * p.u_star - (1.0 - a * a)).abs() < 1e-10);
        prop_assert!((p.rho - (1.0 - a * a)).abs() < 1e-10);
        prop_assert!(p.in_bulk && p.c2 > 0.0);
    }

    #[test]
    fn scalar_shift_has_unit_density(r in 0.0f64..0.95, t in 0.0f64..6.3, n in 2usize..20) {
        let a0 = realize_deformation(&DeformationSpec::scalar_shift(Complex64::from_polar(r, t), n)).unwrap();
        let p = deterministic_equivalents(&a0, c(0.0, 0.0), 1e-14).unwrap();
        prop_assert!((p.rho - 1.0).abs() < 1e-10);
        prop_assert!((p.u_star * p.u_star - (1.0 - r * r)).abs() < 1e-10);
    }

    #[test]
    fn invariant_under_unitary_conjugation(seed in any::<u64>(), x in -0.4f64..0.4, y in -0.4f64..0.4) {
        let n = 8;
        let a0 = realize_deformation(&DeformationSpec::jordan(c(0.1, 0.0), n)).unwrap();
        let u = random_unitary(n, &mut ChaCha8Rng::seed_from_u64(seed));
        let b0 = &(&u * &a0) * &u.adjoint();
        let z = c(x, y);
        let p = deterministic_equivalents(&a0, z, 1e-14).unwrap();
        let q = deterministic_equivalents(&b0, z, 1e-14).unwrap();
        for (l, r) in [(p.u_star, q.u_star), (p.rho, q.rho), (p.g2, q.g2), (p.c2, q.c2), (p.trace_g_gstar, q.trace_g_gstar)] {
            prop_assert!((l - r).abs() <= 1e-9 * (1.0 + l.abs()), "{l} vs {r}");
        }
        prop_assert!((p.h_a - q.h_a).norm() <= 1e-9 * (1.0 + p.h_a.norm()));
    }

    #[test]
    fn fixed_point_zeroes_the_saddle_gradient(seed in 0u64..1000, x in -0.5f64..0.5) {
        let a0 = realize_deformation(&DeformationSpec::iid(0.25, seed, 12)).unwrap();
        let z = c(x, 0.0);
        let spectrum = shifted_spectrum(&a0, z).unwrap();
        match solve_u_star(&spectrum, 1e-14) {
            Ok(u) => {
                let s = saddle_values(&spectrum, u).unwrap();
                prop_assert!(s.df.abs() < 1e-8);
                prop_assert!(s.d2f < 0.0);
            }
            Err(Error::OutsideBulk { .. }) => prop_assert!(!in_support(&a0, z).unwrap()),
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }
}

#[test]
fn outside_the_unit_disk_is_outside_the_bulk() {
    let a0 = realize_deformation(&DeformationSpec::zero(4)).unwrap();
    assert!(matches!(deterministic_equivalents(&a0, c(2.0, 0.0), 1e-14), Err(Error::OutsideBulk { .. })));
    let p = deterministic_equivalents(&a0, c(0.0, 0.0), 1e-14).unwrap();
    assert!((p.u_star - 1.0).abs() < 1e-12 && (p.rho - 1.0).abs() < 1e-12);
}

/// `(1/2)(1/|z - a|^2 + 1/|z + a|^2) - 1` for the two-atom deformation.
fn two_atom_field(a: f64, z: Complex64) -> f64 {
    0.5 * (1.0 / (z - a).norm_sqr() + 1.0 / (z + a).norm_sqr()) - 1.0
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let sign = f(lo).signum();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid).signum() == sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
struct ContourGolden {
    resolution: usize,
    half_width: f64,
    inside_nodes: usize,
    segments: usize,
    /// `[x_min, x_max, y_min, y_max]` of each closed curve, sorted by `x_min`.
    extents: Vec<[f64; 4]>,
}

#[test]
fn two_atom_support_splits_into_two_ovals() {
    let a = 1.2;
    let (half_width, resolution) = (2.5, 200);
    let a0 = realize_deformation(&DeformationSpec::two_atom(c(a, 0.0), 2)).unwrap();
    let grid = ScanGrid::square(half_width, c(0.0, 0.0), resolution);
    let contour = support_boundary_scan(&a0, &grid).unwrap();

    for z in contour.points() {
        assert!(two_atom_field(a, z).abs() < 1e-8, "point {z} is off the level set");
    }
    let mut extents: Vec<[f64; 4]> = contour
        .polylines
        .iter()
        .map(|p| {
            let mut e = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
            for z in p {
                e = [e[0].min(z.re), e[1].max(z.re), e[2].min(z.im), e[3].max(z.im)];
            }
            e.map(|v| (v * 1e9).round() / 1e9)
        })
        .collect();
    extents.sort_by(|l, r| l[0].total_cmp(&r[0]));
    assert_eq!(extents.len(), 2, "expected two closed curves");
    assert!(extents[0][1] < 0.0 && extents[1][0] > 0.0, "the ovals must not meet: {extents:?}");

    // the real-axis crossings solve a one-dimensional equation
    let inner = bisect(1e-6, a - 1e-6, |x| two_atom_field(a, c(x, 0.0)));
    let outer = bisect(a + 1e-6, a + 2.0, |x| two_atom_field(a, c(x, 0.0)));
    let right = extents[1];
    assert!((right[0] - inner).abs() < grid.step(), "inner edge {} vs {inner}", right[0]);
    assert!((right[1] - outer).abs() < grid.step(), "outer edge {} vs {outer}", right[1]);
    assert!((extents[0][0] + right[1]).abs() < 1e-8, "the support is symmetric under z -> -z");

    let got = ContourGolden { resolution, half_width, inside_nodes: contour.inside_nodes, segments: contour.segments.len(), extents };
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/two_atom_1.2_contour.json");
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, serde_json::to_string_pretty(&got).unwrap() + "\n").unwrap();
    }
    let want: ContourGolden = serde_json::from_str(&std::fs::read_to_string(&path).expect("golden file")).unwrap();
    assert_eq!(got, want);
}
