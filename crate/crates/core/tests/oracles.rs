use std::f64::consts::PI;

use diffmourre::lap::{spectrum_summary, SpectralResolvent};
use diffmourre::mourre::{commutator_symbol, delta_free, EnergyWindow};
use diffmourre::operators::DEFAULT_DENSE_CAP;
use diffmourre::potentials::{build_potential, decay_fit, difference_fields, PotentialSpec};
use diffmourre::{make_grid, Field};

/// Even ground state of `-½u'' + V0·1_{|x|<a} u`: root of `k tan(ka) = κ` with
/// `k = √(2(E + V0))`, `κ = √(-2E)`.
fn square_well_ground_state(depth: f64, a: f64) -> f64 {
    let f = |e: f64| {
        let (k, kappa) = ((2.0 * (e + depth)).sqrt(), (-2.0 * e).sqrt());
        k * (k * a).tan() - kappa
    };
    // the even ground state has ka < π/2
    let top = (0.5 * (PI / (2.0 * a)).powi(2) - depth).min(0.0) - 1e-12;
    let (mut lo, mut hi) = (-depth + 1e-12, top);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn square_well_ground_state_matches_transcendental_root() {
    let exact = square_well_ground_state(5.0, 1.0);
    assert!((exact + 4.2964).abs() < 1e-3, "{exact}");
    let g = make_grid(1, 16.0, 512, 1.0).unwrap();
    let v = build_potential(&PotentialSpec::Well { depth: -5.0, width: 2.0 }, &g).unwrap();
    let res = SpectralResolvent::new(&g, &v, DEFAULT_DENSE_CAP).unwrap();
    let e0 = res.eigenvalues()[0];
    // 33 samples of spacing 1/16 lie in |x| <= 1, so the sampled well is 2 + h wide
    let sampled = square_well_ground_state(5.0, 1.0 + 1.0 / 32.0);
    assert!((e0 - sampled).abs() < 2e-3, "grid {e0} vs {sampled}");
    assert!(e0 < exact && (e0 - exact).abs() < 0.05);
}

#[test]
fn free_eigenvalues_are_sampled_parabola() {
    let (l, n) = (8.0, 128usize);
    let g = make_grid(1, l, n, 1.0).unwrap();
    let res = SpectralResolvent::new(&g, &Field::zeros(&g), DEFAULT_DENSE_CAP).unwrap();
    let mut expected: Vec<f64> =
        (0..n as i64).map(|k| k - n as i64 / 2).map(|k| 0.5 * (PI * k as f64 / l).powi(2)).collect();
    expected.sort_by(f64::total_cmp);
    for (got, want) in res.eigenvalues().iter().zip(&expected) {
        assert!((got - want).abs() < 1e-10 * (1.0 + want), "{got} vs {want}");
    }
}

#[test]
fn free_constant_matches_dense_scan() {
    for (a, b, beta) in [(1.0, 2.0, 1.0), (0.5, 3.0, 1.0), (0.5, 1.5, 0.5)] {
        let w = EnergyWindow::new(a, b, 0.5, beta).unwrap();
        let (r0, r1) = ((2.0f64 * a).sqrt(), (2.0f64 * b).sqrt());
        let scan = (0..=200_000)
            .map(|k| r0 + (r1 - r0) * k as f64 / 200_000.0)
            .map(|r| commutator_symbol(&[r], beta))
            .fold(f64::INFINITY, f64::min);
        let delta = delta_free(&w, 1).unwrap();
        assert!((delta - scan).abs() < 1e-8, "{delta} vs {scan}");
    }
    // window [1, 2] at β = 1: r·sin r is increasing on [√2, 2]
    let w = EnergyWindow::new(1.0, 2.0, 0.5, 1.0).unwrap();
    let r = 2f64.sqrt();
    assert!((delta_free(&w, 1).unwrap() - r * r.sin()).abs() < 1e-9);
}

#[test]
fn symbol_vanishes_at_band_edge_and_is_positive_inside() {
    for beta in [0.5, 1.0, 2.0] {
        let edge = PI / beta;
        assert!(commutator_symbol(&[edge], beta).abs() < 1e-12);
        for k in 1..100 {
            let xi = edge * k as f64 / 100.0;
            assert!(commutator_symbol(&[xi], beta) > 0.0);
            assert!(commutator_symbol(&[xi, -xi * 0.5], beta) > 0.0);
        }
    }
}

#[test]
fn periodic_example_first_difference_decays_like_gamma() {
    let g = make_grid(1, 32.0, 512, 1.0).unwrap();
    let v = build_potential(&PotentialSpec::example5(2.0, 0.5), &g).unwrap();
    let first = &difference_fields(&v).first[0].1;
    let (p, r2) = decay_fit(first).unwrap();
    assert!((p - 2.0).abs() < 0.3 && r2 > 0.8, "p = {p}, R² = {r2}");
}

#[test]
fn zero_potential_has_no_bound_states() {
    let g = make_grid(1, 16.0, 256, 1.0).unwrap();
    let res = SpectralResolvent::new(&g, &Field::zeros(&g), DEFAULT_DENSE_CAP).unwrap();
    assert!(spectrum_summary(&res, 0.5, 2.0).iter().all(|s| !s.localized));
    assert!(res.eigenvalues()[0].abs() < 1e-12);
}
