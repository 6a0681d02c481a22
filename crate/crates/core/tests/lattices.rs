use homdyn::homspace::*;
use homdyn::rng;
use homdyn::tensor::{binomial, exterior_action, operator_norm, Matrix, MultiVector};
use proptest::prelude::*;
use rand::Rng;

fn matrix(d: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-2.0f64..2.0, d * d).prop_map(move |v| Matrix::from_row_slice(d, d, &v))
}

fn orthogonal(d: usize, seed: u64) -> Matrix {
    let mut r = rng::stream(seed, 0);
    let m = Matrix::from_fn(d, d, |_, _| r.gen_range(-1.0..1.0));
    m.qr().q()
}

/// A unimodular lattice with a random basis of condition number at most `1e3`.
fn random_lattice(d: usize, seed: u64, trial: u64) -> LatticePoint {
    let mut r = rng::stream(seed, trial);
    loop {
        let m = Matrix::from_fn(d, d, |_, _| r.gen_range(-1.0..1.0));
        let sv = m.singular_values();
        let cond = sv.max() / sv.min();
        if cond.is_finite() && cond <= 1e3 {
            return LatticePoint::normalized(m).unwrap();
        }
    }
}

fn gram_det(vs: &[&nalgebra::DVector<f64>]) -> f64 {
    let k = vs.len();
    Matrix::from_fn(k, k, |i, j| vs[i].dot(vs[j])).determinant()
}

/// Greedy pairwise size reduction, repeated until no column shrinks.
fn pairwise_reduce(b: &Matrix) -> Matrix {
    let mut b = b.clone();
    let d = b.ncols();
    loop {
        let mut changed = false;
        for j in 0..d {
            for k in 0..d {
                if j == k {
                    continue;
                }
                let q = (b.column(j).dot(&b.column(k)) / b.column(k).norm_squared()).round();
                if q != 0.0 {
                    let new = b.column(j) - b.column(k) * q;
                    if new.norm() < b.column(j).norm() * (1.0 - 1e-12) {
                        b.set_column(j, &new);
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            return b;
        }
    }
}

/// Minimal `‖v_1 ∧ .. ∧ v_i‖` over the coefficient box `[-5, 5]^d` of a
/// pairwise-reduced basis, scanning `i`-subsets of the shortest box vectors.
fn brute_minima(x: &LatticePoint, i: usize) -> f64 {
    let d = x.dim();
    let b = &pairwise_reduce(x.basis());
    let mut vectors = Vec::new();
    let total = 11usize.pow(d as u32);
    for mut idx in 0..total {
        let c: Vec<f64> = (0..d)
            .map(|_| {
                let k = idx % 11;
                idx /= 11;
                k as f64 - 5.0
            })
            .collect();
        if c.iter().all(|v| *v == 0.0) {
            continue;
        }
        let v = b * nalgebra::DVector::from_vec(c);
        vectors.push((v.norm(), v));
    }
    vectors.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
    // every c with ‖Bc‖ ≤ λ_1 has |c_k| ≤ ‖B^{-1}‖·λ_1, so the box must hold that ball
    let reach = 1.0 / b.singular_values().min() * vectors[0].0;
    assert!(reach < 6.0, "box does not cover the shortest vector ball: {reach}");
    if i == 1 {
        return vectors[0].0;
    }
    let pool: Vec<&nalgebra::DVector<f64>> = vectors.iter().take(80).map(|p| &p.1).collect();
    let mut best = f64::INFINITY;
    let n = pool.len();
    for a in 0..n {
        for c in a + 1..n {
            if i == 2 {
                let g = gram_det(&[pool[a], pool[c]]);
                if g > 1e-12 {
                    best = best.min(g.sqrt());
                }
                continue;
            }
            for e in c + 1..n {
                let g = gram_det(&[pool[a], pool[c], pool[e]]);
                if g > 1e-12 {
                    best = best.min(g.sqrt());
                }
            }
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exterior_power_is_multiplicative(d in 2usize..=4, seed in any::<u64>()) {
        let mut r = rng::stream(seed, 1);
        let a = Matrix::from_fn(d, d, |_, _| r.gen_range(-2.0..2.0));
        let b = Matrix::from_fn(d, d, |_, _| r.gen_range(-2.0..2.0));
        for i in 1..=d {
            let lhs = exterior_action(&(&a * &b), i).unwrap();
            let ea = exterior_action(&a, i).unwrap();
            let eb = exterior_action(&b, i).unwrap();
            let rhs = &ea * &eb;
            let scale = ea.norm() * eb.norm() + 1e-300;
            prop_assert!((lhs - rhs).norm() <= 1e-10 * scale);
        }
    }

    #[test]
    fn exterior_determinant(m in (2usize..=4).prop_flat_map(matrix)) {
        let d = m.nrows();
        let det = m.determinant();
        for i in 1..=d {
            let lhs = exterior_action(&m, i).unwrap().determinant();
            let rhs = det.powi(binomial(d - 1, i - 1) as i32);
            prop_assert!((lhs - rhs).abs() <= 1e-8 * rhs.abs().max(1e-12), "i={} {} vs {}", i, lhs, rhs);
        }
    }

    #[test]
    fn rotations_preserve_wedge_norms(d in 2usize..=4, seed in any::<u64>()) {
        let q = orthogonal(d, seed);
        let mut r = rng::stream(seed, 2);
        for i in 1..=d {
            let coords: Vec<f64> = (0..binomial(d, i)).map(|_| r.gen_range(-1.0..1.0)).collect();
            let v = MultiVector::new(d, i, coords).unwrap();
            let w = v.transform(&q).unwrap();
            prop_assert!((w.norm() - v.norm()).abs() <= 1e-10 * v.norm().max(1.0));
        }
    }

    #[test]
    fn flow_cocycle(t in -2.0f64..2.0, s in -2.0f64..2.0, w in -1.0f64..1.0, w2 in -1.0f64..1.0) {
        let spec = make_flow(&[1.0, 0.5], &[1.5]).unwrap();
        let x = LatticePoint::standard(3);
        let w = [w, w2];
        let direct = apply_flow_raw(&spec, &x, t + s, &w).unwrap();
        let composed = apply_flow_raw(&spec, &apply_flow_raw(&spec, &x, s, &w).unwrap(), t, &[0.0, 0.0]).unwrap();
        let scale = direct.basis().norm();
        prop_assert!((direct.basis() - composed.basis()).norm() <= 1e-8 * scale);
    }

    #[test]
    fn minima_obey_operator_norm_bound(d in 2usize..=4, seed in any::<u64>()) {
        let x = random_lattice(d, seed, 0);
        let mut r = rng::stream(seed, 3);
        let m = Matrix::from_fn(d, d, |_, _| r.gen_range(-1.5..1.5));
        let det = m.determinant().abs();
        prop_assume!(det > 1e-3);
        let g = m / det.powf(1.0 / d as f64);
        let y = LatticePoint::new(&g * x.basis()).unwrap();
        for i in 1..d {
            let bound = operator_norm(&exterior_action(&g, i).unwrap()) * minima(&x, i).unwrap();
            prop_assert!(minima(&y, i).unwrap() <= bound * (1.0 + 1e-8), "i={}", i);
        }
    }
}

#[test]
fn minima_match_brute_force() {
    for trial in 0..200u64 {
        let d = 2 + (trial % 3) as usize;
        let x = random_lattice(d, 21, trial);
        for i in 1..d {
            let fast = minima(&x, i).unwrap();
            let slow = brute_minima(&x, i);
            assert!((fast - slow).abs() <= 1e-8 * slow, "d={d} i={i} trial {trial}: {fast} vs {slow}");
        }
    }
}

#[test]
fn renormalized_orbits_stay_unimodular() {
    let spec = make_flow(&[1.0, 0.5], &[1.5]).unwrap();
    let mut x = LatticePoint::standard(3);
    let w = [0.3, -0.2];
    x = apply_flow(&spec, &x, 0.0, &w).unwrap();
    for _ in 0..100_000 {
        x = apply_flow(&spec, &x, 0.01, &[0.0, 0.0]).unwrap().reduced();
    }
    assert!((x.covolume() - 1.0).abs() <= 1e-8, "covolume {}", x.covolume());
}

#[test]
fn siegel_counts_on_the_standard_lattice() {
    let z2 = LatticePoint::standard(2);
    assert_eq!(siegel_count(&z2, 0.5), 0);
    assert_eq!(siegel_count(&z2, 1.0), 4);
    assert_eq!(siegel_count(&z2, 1.5), 8);
}
