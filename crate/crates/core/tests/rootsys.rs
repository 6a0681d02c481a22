use homdyn::rng;
use homdyn::rootsys::exact::{rat, Rational};
use homdyn::rootsys::*;
use num_traits::Signed;
use rand::Rng;

fn random_dominated(system: &RootSystem, seed: u64, trial: u64) -> Vec<Rational> {
    let mut r = rng::stream(seed, trial);
    let f: Vec<Rational> = (0..system.rank()).map(|_| rat(r.gen_range(0..=6))).collect();
    system.from_fundamental_coordinates(&f).unwrap()
}

#[test]
fn random_dominated_vectors_decompose() {
    for (family, rank) in admissible_systems(8) {
        let system = build_root_system(family, rank).unwrap();
        for trial in 0..100 {
            let alpha = random_dominated(&system, 11, trial);
            let dec = decompose_dominated(&system, &alpha)
                .unwrap_or_else(|e| panic!("{} trial {trial}: {e}", system.name()));
            let v = verify_decomposition(&system, &dec);
            assert!(v.passed(), "{} trial {trial}: {:?}", system.name(), v.failures);
        }
    }
}

#[test]
fn brute_force_agrees_in_low_rank() {
    for (family, rank) in admissible_systems(3) {
        let system = build_root_system(family, rank).unwrap();
        for trial in 0..20 {
            let alpha = random_dominated(&system, 12, trial);
            let dec = decompose_dominated(&system, &alpha).unwrap();
            assert!(brute_force_feasible(&system, &alpha), "{} trial {trial}", system.name());
            // independent solve of the linear system for the returned roots
            let c = exact::coordinates(&dec.betas, &alpha).unwrap();
            assert_eq!(c, dec.coeffs, "{} trial {trial}", system.name());
        }
    }
}

#[test]
fn inverse_cartan_is_positive() {
    for (family, rank) in admissible_systems(8) {
        let system = build_root_system(family, rank).unwrap();
        let inv = inverse_cartan(&system);
        assert!(inv.iter().flatten().all(|q| q.is_positive()), "{}", system.name());
    }
}

#[test]
fn strongly_orthogonal_bases() {
    for (family, rank) in admissible_systems(8) {
        if !has_strongly_orthogonal_basis(family, rank) {
            continue;
        }
        let system = build_root_system(family, rank).unwrap();
        let so = strongly_orthogonal(&system).unwrap();
        assert_eq!(so.len(), rank, "{}", system.name());
        for i in 0..so.len() {
            assert!(system.is_positive(&so[i]));
            for j in i + 1..so.len() {
                assert!(strongly_orthogonal_pair(&system, &so[i], &so[j]), "{}", system.name());
            }
        }
    }
}

#[test]
fn positive_roots_have_integral_same_sign_coordinates() {
    for (family, rank) in admissible_systems(8) {
        let system = build_root_system(family, rank).unwrap();
        for root in system.roots() {
            let c = system.simple_coordinates(root).unwrap();
            assert!(c.iter().all(|x| x.is_integer()), "{}", system.name());
            let pos = c.iter().all(|x| !x.is_negative());
            let neg = c.iter().all(|x| !x.is_positive());
            assert!(pos ^ neg, "{}", system.name());
            let minus: Vec<Rational> = root.iter().map(|x| -x).collect();
            assert!(system.contains(&minus));
        }
    }
}

#[test]
fn random_expanding_constructions() {
    for trial in 0..50u64 {
        let mut r = rng::stream(13, trial);
        let d = r.gen_range(2..=5);
        let mut z: Vec<f64> = (0..d).map(|_| r.gen_range(-3.0..3.0)).collect();
        let mean = z.iter().sum::<f64>() / d as f64;
        z.iter_mut().for_each(|x| *x -= mean);
        let con = build_expanding(&z, true).unwrap();
        assert!(con.reconstruction_error() < 1e-10, "trial {trial}");
        let report = check_construction(&con).unwrap();
        assert!(report.verdict.passed, "trial {trial}: {:?}", report.verdict);
        assert_eq!(report.abelian_residual, 0.0);
        assert!(report.sl2_residual < 1e-12);
        assert!(report.killing_min_singular > 1e-6, "trial {trial}");
    }
}

#[test]
fn block_unipotents_in_sl() {
    for (m, n) in [(1usize, 1usize), (1, 2), (2, 2)] {
        let d = m + n;
        let z = homdyn::tensor::Matrix::from_fn(d, d, |i, j| {
            if i != j {
                0.0
            } else if i < m {
                1.0 / m as f64
            } else {
                -1.0 / n as f64
            }
        });
        let gens: Vec<_> = (0..m)
            .flat_map(|i| (m..d).map(move |j| (i, j)))
            .map(|(i, j)| {
                let mut e = homdyn::tensor::Matrix::zeros(d, d);
                e[(i, j)] = 1.0;
                e
            })
            .collect();
        let (verdict, witness) = check_in_sl(&z, &gens).unwrap();
        assert!(verdict.passed, "({m}, {n})");
        assert!(witness.is_none());
    }
}
