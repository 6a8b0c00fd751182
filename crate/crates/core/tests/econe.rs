use std::f64::consts::PI;

use fvk_core::circle::FourierCurve;
use fvk_core::econe::{
    bending_integral, build_econe_pair, fit_log_coefficient, fvk_energy_polar, gauss_curvature, homogeneous_fields,
    EConeConfig, PolarField, PolarGrid,
};
use fvk_core::error::Error;
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn annulus_bending_of_the_homogeneous_minimizer() {
    for big_delta in [0.5, 1.0] {
        let alpha = FourierCurve::minimizer(6, big_delta).unwrap();
        let grid = PolarGrid::annulus(0.5, 1.0, 129, 256).unwrap();
        let fields = homogeneous_fields(&alpha, &grid).unwrap();
        let h = 0.01;
        let e = fvk_energy_polar(&fields, big_delta, h, &grid).unwrap();
        let target = 6.0 * PI * big_delta * big_delta;
        assert!(rel(e.bend / (h * h * 2f64.ln()), target) <= 0.02, "{}", e.bend / (h * h * 2f64.ln()));
        // 1-homogeneous fields are membrane-free
        assert!(e.membrane_stretch <= 1e-6 * e.bend / (h * h));
    }
}

#[test]
fn dyadic_annuli_carry_equal_bending() {
    let alpha = FourierCurve::minimizer(6, 1.0).unwrap();
    let energies: Vec<f64> = (1..=4)
        .map(|n| {
            let outer = 0.5f64.powi(n - 1);
            let grid = PolarGrid::annulus(0.5 * outer, outer, 65, 256).unwrap();
            let fields = homogeneous_fields(&alpha, &grid).unwrap();
            bending_integral(&fields.w, &grid).unwrap()
        })
        .collect();
    for e in &energies[1..] {
        assert!(rel(*e, energies[0]) <= 0.01, "{energies:?}");
    }
}

fn random_constrained_curve(coeffs: &[f64], big_delta: f64) -> FourierCurve {
    let n = coeffs.len() / 2;
    let a: Vec<f64> = coeffs[..n].to_vec();
    let b: Vec<f64> = coeffs[n..].to_vec();
    // drop modes 0 and 1 (they do not help the constraint) and rescale onto it
    let mut a = a;
    let mut b = b;
    a[0] = 0.0;
    b[0] = 0.0;
    let c = FourierCurve::new(0.0, a, b).unwrap();
    let k = fvk_core::circle::circle_constraint(&c);
    c.scaled((2.0 * PI * big_delta * big_delta / k).sqrt())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn linear_additions_leave_bending_unchanged(
        coeffs in prop::collection::vec(0.1..1.0f64, 8),
        p in -2.0..2.0f64,
        q in -2.0..2.0f64,
    ) {
        let alpha = random_constrained_curve(&coeffs, 1.0);
        let grid = PolarGrid::annulus(0.25, 1.0, 65, 128).unwrap();
        let base = bending_integral(&homogeneous_fields(&alpha, &grid).unwrap().w, &grid).unwrap();
        let shifted = alpha.add_mode_one(p, q);
        let moved = bending_integral(&homogeneous_fields(&shifted, &grid).unwrap().w, &grid).unwrap();
        prop_assert!(rel(moved, base) <= 1e-8);
    }

    #[test]
    fn homogeneous_membrane_vanishes(coeffs in prop::collection::vec(0.1..1.0f64, 8), big_delta in 0.2..1.0f64) {
        let alpha = random_constrained_curve(&coeffs, big_delta);
        let grid = PolarGrid::annulus(0.25, 1.0, 33, 128).unwrap();
        let fields = homogeneous_fields(&alpha, &grid).unwrap();
        let e = fvk_energy_polar(&fields, big_delta, 1.0, &grid).unwrap();
        prop_assert!(e.membrane_stretch <= 1e-10 * e.bend);
    }
}

#[test]
fn curvature_of_the_homogeneous_cone() {
    for big_delta in [0.5, 1.0] {
        let alpha = FourierCurve::minimizer(6, big_delta).unwrap();
        let grid = PolarGrid::disk(100, 512).unwrap();
        let fields = homogeneous_fields(&alpha, &grid).unwrap();
        let target = -PI * big_delta * big_delta;
        for &r in grid.r().iter().filter(|&&r| r >= 0.2 - 1e-12) {
            let k = gauss_curvature(&fields.w, r, &grid).unwrap();
            assert!(rel(k, target) <= 0.02, "r = {r}: {k}");
        }
    }
}

#[test]
fn curvature_of_simple_fields() {
    let grid = PolarGrid::disk(64, 64).unwrap();
    let bowl = PolarField::from_fn(&grid, |r, _| r * r);
    let plane = PolarField::from_fn(&grid, |r, t| r * (0.3 * t.cos() - 1.2 * t.sin()) + 0.7);
    for &r in &grid.r()[4..60] {
        let k = gauss_curvature(&bowl, r, &grid).unwrap();
        assert!(rel(k, 4.0 * PI * r * r) <= 1e-10);
        assert!(gauss_curvature(&plane, r, &grid).unwrap().abs() <= 1e-10);
    }
}

#[test]
fn truncated_curvature_is_constant_outside_the_core() {
    let h = 1.0 / 32.0;
    let cfg = EConeConfig::minimizing(1.0, h, 6).unwrap();
    let grid = PolarGrid::resolving(h, 12, 0, 512).unwrap();
    let fields = build_econe_pair(&cfg, &grid).unwrap();
    let ks: Vec<f64> = grid
        .r()
        .iter()
        .filter(|&&r| r >= 2.0 * h)
        .map(|&r| gauss_curvature(&fields.w, r, &grid).unwrap())
        .collect();
    let lo = ks.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ks.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert!((hi - lo) / lo.abs() <= 0.02, "{lo} .. {hi}");
    assert!(rel(lo, -PI) <= 0.02);
}

#[test]
fn truncated_fields_vanish_in_the_core() {
    let h = 1.0 / 16.0;
    let cfg = EConeConfig::minimizing(0.5, h, 4).unwrap();
    let grid = PolarGrid::resolving(h, 12, 0, 64).unwrap();
    let fields = build_econe_pair(&cfg, &grid).unwrap();
    for (i, &r) in grid.r().iter().enumerate() {
        if r <= 0.5 * h {
            for f in [&fields.u_r, &fields.u_phi, &fields.w] {
                assert!(f.ring(i).iter().all(|&v| v == 0.0));
            }
            assert_eq!(gauss_curvature(&fields.w, r, &grid).unwrap(), 0.0);
        }
    }
}

#[test]
fn coarse_core_is_a_resolution_error() {
    let cfg = EConeConfig::minimizing(1.0, 1.0 / 16.0, 4).unwrap();
    let grid = PolarGrid::disk(64, 64).unwrap();
    assert!(matches!(build_econe_pair(&cfg, &grid), Err(Error::Resolution(_))));
}

#[test]
fn off_constraint_curve_is_rejected() {
    let alpha = FourierCurve::cosine(4, 2, 0.5).unwrap();
    assert!(matches!(EConeConfig::new(alpha, 1.0, 0.1), Err(Error::Precondition(_))));
}

#[test]
fn log_fit_recovers_exact_model() {
    let samples: Vec<(f64, f64)> = (4..=10)
        .map(|k| {
            let h = 0.5f64.powi(k);
            (h, h * h * (5.0 * (1.0 / h).ln() + 2.0))
        })
        .collect();
    let fit = fit_log_coefficient(&samples).unwrap();
    assert!((fit.c1 - 5.0).abs() <= 1e-10);
    assert!((fit.c2 - 2.0).abs() <= 1e-10);
    assert!(fit.max_rel_residual <= 1e-12);
    assert!(fit_log_coefficient(&samples[..3]).is_err());
}
