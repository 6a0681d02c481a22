use homdyn::height::*;
use homdyn::homspace::{make_flow, FlowSpec, LatticePoint};
use homdyn::quadrature::Quadrature;
use homdyn::rng;
use homdyn::stats::linear_fit;
use homdyn::tensor::{binomial, Matrix, MultiVector};
use proptest::prelude::*;
use rand::Rng;

fn flows() -> Vec<FlowSpec> {
    vec![
        make_flow(&[1.0], &[1.0]).unwrap(),
        make_flow(&[2.0], &[1.0, 1.0]).unwrap(),
        make_flow(&[1.0, 1.0], &[1.0, 1.0]).unwrap(),
    ]
}

/// Product of random elementary integer column operations.
fn unimodular(d: usize, r: &mut rng::Rng) -> Matrix {
    let mut u = Matrix::identity(d, d);
    for _ in 0..12 {
        let j = r.gen_range(0..d);
        let k = (j + r.gen_range(1..d)) % d;
        let c = if r.gen::<bool>() { 1.0 } else { -1.0 };
        let col = u.column(j) + u.column(k) * c;
        u.set_column(j, &col);
    }
    u
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn phi_scales_exactly(which in 0usize..3, seed in any::<u64>(), c in prop_oneof![-50.0f64..-0.02, 0.02f64..50.0]) {
        let spec = &flows()[which];
        let params = make_height_params(spec, 0.3).unwrap();
        let d = spec.d();
        let mut r = rng::stream(seed, 0);
        for i in 1..d {
            let coords: Vec<f64> = (0..binomial(d, i)).map(|_| r.gen_range(-1.0..1.0)).collect();
            let v = MultiVector::new(d, i, coords).unwrap();
            let lhs = phi(&params, &v.scale(c)).unwrap();
            let rhs = c.abs().powf(-1.0 / params.delta_eta()[i - 1]) * phi(&params, &v).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs);
        }
    }

    #[test]
    fn alpha_ignores_the_basis(which in 0usize..3, seed in any::<u64>()) {
        let spec = &flows()[which];
        let params = make_height_params(spec, 0.5).unwrap();
        let d = spec.d();
        let mut r = rng::stream(seed, 1);
        let m = Matrix::from_fn(d, d, |_, _| r.gen_range(-1.0..1.0));
        prop_assume!(m.determinant().abs() > 1e-2);
        let x = LatticePoint::normalized(m).unwrap();
        let y = LatticePoint::new(x.basis() * unimodular(d, &mut r)).unwrap();
        let (a, b) = (alpha(&params, &x).unwrap(), alpha(&params, &y).unwrap());
        prop_assert!((a - b).abs() <= 1e-8 * a, "{} vs {}", a, b);
    }
}

#[test]
fn sublevel_measures_decay_polynomially() {
    let spec = make_flow(&[2.0], &[1.0, 1.0]).unwrap();
    let radii: Vec<f64> = (1..=8).map(|k| 2f64.powi(-k)).collect();
    for i in 1..spec.d() {
        let rep = Representation::new(RepKind::Exterior(i), spec.d()).unwrap();
        for trial in 0..50u64 {
            let v = random_unit(rep.dim(), &mut rng::stream(31, trial));
            let measures: Vec<f64> = radii
                .iter()
                .map(|&r| good_sublevel_measure(&spec, &rep, &v, r, 8000, 32 + trial).unwrap())
                .collect();
            // measures shrink with r; a zero measure satisfies any bound C·r^θ0
            assert!(measures.windows(2).all(|p| p[1] <= p[0]), "degree {i} trial {trial}: {measures:?}");
            let (xs, ys): (Vec<f64>, Vec<f64>) =
                radii.iter().zip(&measures).filter(|(_, m)| **m > 0.0).map(|(r, m)| (r.ln(), m.ln())).unzip();
            if xs.len() < 3 {
                continue;
            }
            let fit = linear_fit(&xs, &ys).unwrap();
            assert!(fit.slope > 0.0 && fit.r2 >= 0.9, "degree {i} trial {trial}: {fit:?}");
        }
    }
}

#[test]
fn averaged_height_contracts() {
    let theta = 0.5;
    for spec in flows().iter().take(2) {
        let params = make_height_params(spec, 0.5).unwrap();
        let grid = if spec.chart_dim() == 1 {
            Quadrature::Midpoint { per_axis: 1024 }
        } else {
            Quadrature::Midpoint { per_axis: 128 }
        };
        for i in 1..spec.d() {
            let rep = Representation::new(RepKind::Exterior(i), spec.d()).unwrap();
            // φ^θ(v) ∝ ‖v‖^{-θ/δη}, with the ε-factor common to both sides
            let power = theta / params.delta_eta()[i - 1];
            for trial in 0..20u64 {
                let mut r = rng::stream(33, trial);
                let scale = r.gen_range(0.1..10.0);
                let v: Vec<f64> = random_unit(rep.dim(), &mut r).iter().map(|x| x * scale).collect();
                let at_zero = scale.powf(-power);
                let values: Vec<f64> = [4.0, 6.0, 8.0]
                    .iter()
                    .map(|&t| contraction_integral_at(spec, &rep, &v, t, power, &grid).unwrap())
                    .collect();
                assert!(values[0] <= at_zero, "d={} i={i} trial {trial}: {values:?} vs {at_zero}", spec.d());
                assert!(values.windows(2).all(|p| p[1] < p[0]), "d={} i={i}: {values:?}", spec.d());
            }
        }
    }
}
