use homdyn::correlation::Observable;
use homdyn::height::make_height_params;
use homdyn::homspace::{make_flow, LatticePoint};
use homdyn::returns::*;
use homdyn::rng;
use homdyn::stats::linear_fit;
use rand::Rng;

#[test]
fn boxes_refine_and_partition() {
    for spec in [make_flow(&[1.0], &[1.0]).unwrap(), make_flow(&[2.0], &[1.0, 1.0]).unwrap()] {
        let m = spec.chart_dim();
        for trial in 0..5000u64 {
            let mut r = rng::stream(41, trial);
            let t = r.gen_range(0.3..1.5);
            let n = r.gen_range(0..6);
            let w: Vec<f64> = (0..m).map(|_| r.gen_range(-1.0..1.0)).collect();
            let outer = box_of(&spec, t, n, &w).unwrap();
            let inner = box_of(&spec, t, n + 1, &w).unwrap();
            assert!(outer.contains_box(&inner));
            let (lo, hi, ilo, ihi) = (outer.lower(), outer.upper(), inner.lower(), inner.upper());
            for a in 0..m {
                assert!(lo[a] <= ilo[a] + 1e-12 && ihi[a] <= hi[a] + 1e-12);
                assert!(lo[a] <= w[a] + 1e-12 && w[a] <= hi[a] + 1e-12);
            }
            // a point well inside the box shares it, a point beyond it does not
            let inside: Vec<f64> =
                (0..m).map(|a| lo[a] + (hi[a] - lo[a]) * r.gen_range(0.01..0.99)).collect();
            assert!(box_of(&spec, t, n, &inside).unwrap().same_box(&outer));
            let axis = r.gen_range(0..m);
            let mut outside = w.clone();
            let gap = 0.01 * (hi[axis] - lo[axis]);
            outside[axis] = if hi[axis] + gap <= 1.0 { hi[axis] + gap } else { lo[axis] - gap };
            if (-1.0..=1.0).contains(&outside[axis]) {
                assert!(!box_of(&spec, t, n, &outside).unwrap().same_box(&outer));
            }
        }
    }
}

#[test]
fn points_in_one_box_are_unipotent_translates() {
    let spec = make_flow(&[2.0], &[1.0, 1.0]).unwrap();
    let m = spec.chart_dim();
    for trial in 0..500u64 {
        let mut r = rng::stream(42, trial);
        let t = 0.5;
        let n = r.gen_range(1..=3);
        let w: Vec<f64> = (0..m).map(|_| r.gen_range(-1.0..1.0)).collect();
        let cell = box_of(&spec, t, n, &w).unwrap();
        let (lo, hi) = (cell.lower(), cell.upper());
        let w2: Vec<f64> = (0..m).map(|a| r.gen_range(lo[a]..hi[a])).collect();
        let time = n as f64 * t;
        let h = spec.flow_matrix(time, &w2).unwrap() * spec.flow_matrix(time, &w).unwrap().try_inverse().unwrap();
        let xi: Vec<f64> =
            (0..m).map(|a| (w2[a] - w[a]) * (time * spec.weights()[a]).exp()).collect();
        assert!(xi.iter().all(|x| x.abs() <= 2.0), "trial {trial}: {xi:?}");
        let u = spec.unipotent(&xi).unwrap();
        assert!((h - u).norm() <= 1e-9, "trial {trial}");
    }
}

#[test]
fn shadowing_holds_on_random_boxes() {
    let spec = make_flow(&[1.0], &[1.0]).unwrap();
    let x = LatticePoint::standard(2);
    for trial in 0..12u64 {
        let mut r = rng::stream(43, trial);
        let t = r.gen_range(0.4..1.0);
        let n = r.gen_range(0..=3);
        let w = [r.gen_range(-1.0..1.0)];
        let psi = Observable::new(r.gen_range(0.7..1.2), r.gen_range(0.1..0.5), 0.0).unwrap();
        let cell = box_of(&spec, t, n, &w).unwrap();
        let (lhs, rhs) =
            shadowing_check(&spec, &x, t, n, &cell.lower(), &cell.upper(), &|y| psi.eval(y), 8).unwrap();
        assert!(lhs <= rhs + 1e-6, "trial {trial}: {lhs} > {rhs}");
    }
}

#[test]
fn pooled_gaps_have_exponential_tails() {
    let spec = make_flow(&[1.0], &[1.0]).unwrap();
    let params = make_height_params(&spec, 0.5).unwrap();
    let x = LatticePoint::standard(2);
    let l0 = 2.0 * homdyn::height::alpha(&params, &x).unwrap();
    let slack = homdyn::height::height_slack(&spec, &params, 0.0, 2.0, 9).unwrap();
    let traces: Vec<ReturnTrace> = (0..150u64)
        .map(|i| {
            let w = [rng::stream(44, i).gen_range(-1.0..1.0)];
            return_times(&spec, &params, &x, 2.0, l0, slack, 100, &w).unwrap()
        })
        .collect();
    let rows = gap_statistics(&traces).unwrap();
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        rows.iter().filter(|r| r.count >= 30).map(|r| (r.q as f64, r.tail.ln())).unzip();
    assert!(xs.len() >= 3, "{rows:?}");
    let fit = linear_fit(&xs, &ys).unwrap();
    assert!(fit.slope < 0.0 && fit.r2 >= 0.9, "{fit:?}");
}

#[test]
fn occupancy_of_sublevels_grows_with_level() {
    let spec = make_flow(&[1.0], &[1.0]).unwrap();
    let params = make_height_params(&spec, 0.5).unwrap();
    let x = LatticePoint::standard(2);
    let mut last = 0.0;
    for level in [0.6, 1.0, 2.0, 8.0] {
        let k = HeightSublevel { params: params.clone(), level };
        let f = occupancy_continuous(&spec, &x, 50.0, &k, &[0.37], 0.01).unwrap();
        assert!(f >= last);
        last = f;
    }
    let discrete = occupancy_discrete(&spec, &x, 0.5, &Everything, 20, &[0.37]).unwrap();
    assert_eq!(discrete, 1.0);
}
