use homdyn::correlation::*;
use homdyn::homspace::{make_flow, LatticePoint};
use homdyn::rng;
use proptest::prelude::*;
use rand::Rng;

fn observable() -> Observable {
    Observable::measured(0.9, 0.3, 2, 1000, 61).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn correlation_is_symmetric(t in 0.3f64..1.5, l in 0.3f64..1.5, s in 0.05f64..0.5) {
        let spec = make_flow(&[1.0], &[1.0]).unwrap();
        let x = LatticePoint::standard(2);
        let psi = observable();
        let f = |y: &LatticePoint| psi.eval(y);
        let a = correlation(&spec, &x, &f, s, 0, t, l, 4).unwrap();
        let b = correlation(&spec, &x, &f, s, 0, l, t, 4).unwrap();
        prop_assert!((a - b).abs() <= 1e-12);
        if t == l {
            prop_assert!(a.abs() <= (2.0 * psi.sup()).powi(2) * 2.0);
        }
    }

    #[test]
    fn small_shifts_obey_the_lipschitz_bound(t in 0.0f64..3.0, w in -1.0f64..1.0, s in 0.001f64..0.05) {
        let spec = make_flow(&[1.0], &[1.0]).unwrap();
        let x = LatticePoint::standard(2);
        let psi = observable();
        let value = psi_shifted(&spec, &x, &|y: &LatticePoint| psi.eval(y), s, 0, t, &[w]).unwrap();
        // u(s e_1) is at Frobenius distance s from the identity
        prop_assert!(value.abs() <= psi.lipschitz() * s);
    }
}

/// `ψ_l(s_1) = f(s_1) - f(s_1 + δ)` with `δ = s·e^{-lb}` and `0 ≤ f ≤ sup ψ`,
/// so a window of half-width `h` averages to at most `δ·sup ψ / (2h)`.
#[test]
fn window_averages_match_the_telescoping_bound() {
    let spec = make_flow(&[1.0], &[1.0]).unwrap();
    let b = spec.weights()[0];
    let x = LatticePoint::standard(2);
    let psi = observable();
    let f = |y: &LatticePoint| psi.eval(y);
    let (s, t) = (0.3, 1.0);
    for (k, l) in [1.5, 2.0, 2.5, 3.0].into_iter().enumerate() {
        for trial in 0..10u64 {
            let r = rng::stream(62, 10 * k as u64 + trial).gen_range(-0.9..0.9);
            let avg = window_average(&spec, &x, &f, s, t, l, r, 16).unwrap();
            let bound = s * psi.sup() / 2.0 * (-(l - t) * b / 2.0).exp();
            assert!(avg.abs() <= bound * 1.02 + 1e-12, "l={l} r={r}: {avg} > {bound}");
        }
    }
}

#[test]
fn birkhoff_averages_shrink() {
    let spec = make_flow(&[1.0], &[1.0]).unwrap();
    let x = LatticePoint::standard(2);
    let psi = observable();
    let f = |y: &LatticePoint| psi.eval(y);
    let horizons = [100.0, 200.0, 400.0, 800.0];
    let mut totals = [0.0; 4];
    for i in 0..20u64 {
        let w = [rng::stream(63, i).gen_range(-1.0..1.0)];
        let profile = birkhoff_profile(&spec, &x, &f, 0.3, 0, &w, &horizons, 0.01).unwrap();
        for (acc, v) in totals.iter_mut().zip(&profile) {
            *acc += v.abs() / 20.0;
        }
    }
    assert!(totals.windows(2).all(|p| p[1] < p[0]), "{totals:?}");
}
