use std::f64::consts::PI;

use num_complex::Complex64;
use ortho_asym::compare::{default_edge_delta, zero_counts, Predictor};
use ortho_asym::equilibrium::solve_one_cut;
use ortho_asym::genus0::{fit_bulk_constants, Genus0Asymptotics, BULK_ALPHA};
use ortho_asym::{ExactEngine, JoukowskiMap, Potential, RegimeTag};
use proptest::prelude::*;

fn gaussian(n: usize) -> (Genus0Asymptotics, ExactEngine) {
    let m = solve_one_cut(&Potential::gaussian(), 1.0).unwrap();
    let e = ExactEngine::new(&Potential::gaussian(), n, n + 1, 40).unwrap();
    (Genus0Asymptotics::new(m, n).unwrap(), e)
}

fn quartic() -> Potential {
    Potential::even_quartic(1.0, 1.0).unwrap()
}

#[test]
fn outside_error_shrinks_with_n() {
    let mut errs = Vec::new();
    for n in [10, 20, 40] {
        let (asym, exact) = gaussian(n);
        let p = asym.predict(n, 2.5, 0.0).unwrap();
        assert_eq!(p.regime, RegimeTag::Outside);
        let e = exact.eval_wave(n, 2.5).unwrap().psi;
        errs.push((p.psi_pred / e - 1.0).abs());
    }
    assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    assert!(errs[2] <= 0.15, "{errs:?}");
    // Roughly O(1/N): each doubling halves the error, within 30%.
    for w in errs.windows(2) {
        let r = w[0] / w[1];
        assert!((1.4..2.6).contains(&r), "{errs:?}");
    }
}

#[test]
fn ratio_of_consecutive_predictions() {
    for n in [10, 20, 40] {
        let (asym, exact) = gaussian(n);
        let xi = 2.5;
        let pred = asym.predict(n, xi, 0.0).unwrap().psi_pred
            / asym.predict(n - 1, xi, 0.0).unwrap().psi_pred;
        let p = asym.map().map_to_p(Complex64::new(xi, 0.0)).unwrap();
        assert!((p - 2.0).norm() < 1e-14);
        assert!((pred - p.re).abs() < 1e-12);
        let ex = exact.eval_wave(n, xi).unwrap().psi / exact.eval_wave(n - 1, xi).unwrap().psi;
        assert!(
            (pred / ex - 1.0).abs() <= 2.0 / n as f64,
            "N = {n}: {pred} vs {ex}"
        );
    }
}

#[test]
fn bulk_zero_counts_and_locations() {
    let pots = [Potential::gaussian(), quartic()];
    for pot in &pots {
        for n in [10, 20, 30, 40] {
            let meas = solve_one_cut(pot, 1.0).unwrap();
            let delta = default_edge_delta(&meas, n);
            let exact = ExactEngine::new(pot, n, n, 40).unwrap();
            let pred = Predictor::new(meas, &[], n).unwrap();
            let counts = zero_counts(&exact, &pred, n, delta).unwrap();
            let all = exact.table().zeros(n);
            for c in &counts {
                assert!(
                    c.delta() <= 1,
                    "N = {n}: {} vs {}",
                    c.exact.len(),
                    c.predicted.len()
                );
                let off = c.max_offset(&all).unwrap();
                assert!(off <= 0.2, "N = {n}: offset {off} of the spacing");
            }
        }
    }
}

#[test]
fn parity_of_the_bulk_prediction() {
    let (asym, _) = gaussian(30);
    for n in [29, 30] {
        for xi in [0.3, 1.1] {
            let a = asym.predict(n, xi, 0.1).unwrap().psi_pred;
            let b = asym.predict(n, -xi, 0.1).unwrap().psi_pred;
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert!((a - sign * b).abs() < 1e-12 * a.abs().max(1.0));
        }
    }
}

#[test]
fn zero_spacing_at_the_centre() {
    let n = 40;
    let (asym, _) = gaussian(n);
    // dθ/dξ = Nπρ, so spacing ≈ 1/(Nρ(0)) = π/N.
    let h = 1e-4;
    let d = (asym.predict(n, h, 0.1).unwrap().phase.unwrap()
        - asym.predict(n, -h, 0.1).unwrap().phase.unwrap())
        / (2.0 * h);
    assert!((d.abs() - n as f64).abs() < 1.0, "{d}");
}

#[test]
fn fitted_bulk_constants_match_the_closed_form() {
    let n = 40;
    let (asym, exact) = gaussian(n);
    let samples = [-0.37, 0.52].map(|x| (x, exact.eval_wave(n, x).unwrap().psi));
    let (c, alpha) = fit_bulk_constants(&asym, n, samples).unwrap();
    assert!((c / asym.envelope_constant() - 1.0).abs() < 0.05, "C = {c}");
    let da = (alpha - BULK_ALPHA + PI).rem_euclid(2.0 * PI) - PI;
    assert!(da.abs() < 0.1, "α = {alpha}");
    assert!((asym.envelope_constant() - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-15);
}

#[test]
fn joukowski_closed_forms() {
    let j = JoukowskiMap::new(-2.0, 2.0).unwrap();
    let (l, h) = j.lambda_h(Complex64::new(2.0, 0.0)).unwrap();
    assert!((l - 2.0).norm() < 1e-15 && (h - 4.0 / 3.0).norm() < 1e-15);
    assert!((j.x_of(Complex64::new(1.0, 0.0)) - 2.0).norm() < 1e-15);
    assert!(j.map_to_p(Complex64::new(2.0, 0.0)).is_err());
    let p0 = j.map_to_p(Complex64::new(0.0, 0.0)).unwrap();
    assert!((p0 - Complex64::i()).norm() < 1e-15);
}

proptest! {
    #[test]
    fn map_to_p_inverts_the_joukowski_map(
        a in -3.0..0.0f64,
        w in 0.5..4.0f64,
        re in -6.0..6.0f64,
        im in 0.01..3.0f64,
        lower in any::<bool>(),
    ) {
        let j = JoukowskiMap::new(a, a + w).unwrap();
        let xi = Complex64::new(re, if lower { -im } else { im });
        let p = j.map_to_p(xi).unwrap();
        prop_assert!(p.norm() >= 1.0);
        prop_assert!((j.x_of(p) - xi).norm() < 1e-12 * xi.norm().max(1.0));
        // The other root of the quadratic is 1/p.
        prop_assert!((j.x_of(1.0 / p) - xi).norm() < 1e-12 * xi.norm().max(1.0));
        let (l, h) = j.lambda_h(p).unwrap();
        prop_assert!((h * (1.0 - 1.0 / (p * p)) - 1.0).norm() < 1e-12);
        prop_assert!((l / ((w) / 4.0) - p).norm() < 1e-12 * p.norm());
    }
}
