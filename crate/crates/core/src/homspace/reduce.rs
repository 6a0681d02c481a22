//! Basis reduction on column bases.

use crate::tensor::Matrix;

fn dot_cols(b: &Matrix, i: usize, j: usize) -> f64 {
    b.column(i).dot(&b.column(j))
}

/// Lagrange–Gauss reduction of a rank-2 basis: afterwards
/// `‖b_1‖ ≤ ‖b_2‖` and `|⟨b_1, b_2⟩| ≤ ‖b_1‖²/2`, so `b_1` is a shortest vector.
pub fn gauss_reduce(basis: &Matrix) -> Matrix {
    assert_eq!(basis.ncols(), 2, "Lagrange–Gauss reduction needs two columns");
    let mut b = basis.clone();
    if dot_cols(&b, 0, 0) > dot_cols(&b, 1, 1) {
        b.swap_columns(0, 1);
    }
    for _ in 0..10_000 {
        let n0 = dot_cols(&b, 0, 0);
        let mu = (dot_cols(&b, 0, 1) / n0).round();
        if mu != 0.0 {
            let c0 = b.column(0).clone_owned();
            let mut c1 = b.column_mut(1);
            c1 -= c0 * mu;
        }
        if dot_cols(&b, 1, 1) < n0 {
            b.swap_columns(0, 1);
        } else {
            break;
        }
    }
    b
}

/// Gram–Schmidt data: squared norms of `b*_k` and the coefficients `μ_{kj}`.
fn gram_schmidt(b: &Matrix) -> (Vec<f64>, Matrix) {
    let k = b.ncols();
    let mut star = b.clone();
    let mut mu = Matrix::zeros(k, k);
    let mut norms = vec![0.0; k];
    for i in 0..k {
        for j in 0..i {
            let m = b.column(i).dot(&star.column(j)) / norms[j];
            mu[(i, j)] = m;
            let sj = star.column(j).clone_owned();
            let mut si = star.column_mut(i);
            si -= sj * m;
        }
        norms[i] = star.column(i).norm_squared();
    }
    (norms, mu)
}

/// Floating-point LLL reduction with parameter `delta` (columns are the basis).
///
/// Gram–Schmidt data is recomputed from scratch after every swap, which is
/// wasteful asymptotically and irrelevant for `d ≤ 8`.
pub fn lll_reduce(basis: &Matrix, delta: f64) -> Matrix {
    let d = basis.ncols();
    let mut b = basis.clone();
    if d < 2 {
        return b;
    }
    let (mut norms, mut mu) = gram_schmidt(&b);
    let mut k = 1;
    let mut guard = 0usize;
    while k < d && guard < 100_000 {
        guard += 1;
        // size-reduce b_k against b_{k-1}, .., b_0
        for j in (0..k).rev() {
            let q = mu[(k, j)].round();
            if q != 0.0 {
                let bj = b.column(j).clone_owned();
                let mut bk = b.column_mut(k);
                bk -= bj * q;
                for i in 0..j {
                    mu[(k, i)] -= q * mu[(j, i)];
                }
                mu[(k, j)] -= q;
            }
        }
        let lovasz = (delta - mu[(k, k - 1)] * mu[(k, k - 1)]) * norms[k - 1];
        if norms[k] >= lovasz {
            k += 1;
        } else {
            b.swap_columns(k, k - 1);
            (norms, mu) = gram_schmidt(&b);
            k = (k - 1).max(1);
        }
    }
    b
}
