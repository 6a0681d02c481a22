//! Small dense linear algebra over the rationals.

use num_rational::Ratio;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Rational = Ratio<i64>;
pub type RVec = Vec<Rational>;

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(n)
}

pub fn half(n: i64) -> Rational {
    Rational::new(n, 2)
}

pub fn dot(u: &[Rational], v: &[Rational]) -> Rational {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

pub fn add(u: &[Rational], v: &[Rational]) -> RVec {
    u.iter().zip(v).map(|(a, b)| a + b).collect()
}

pub fn sub(u: &[Rational], v: &[Rational]) -> RVec {
    u.iter().zip(v).map(|(a, b)| a - b).collect()
}

pub fn scale(c: Rational, v: &[Rational]) -> RVec {
    v.iter().map(|a| c * a).collect()
}

pub fn is_zero(v: &[Rational]) -> bool {
    v.iter().all(Zero::is_zero)
}

/// `Σ c_i v_i`; `vectors` must be nonempty.
pub fn combination(coeffs: &[Rational], vectors: &[RVec]) -> RVec {
    let mut out = vec![Rational::zero(); vectors[0].len()];
    for (c, v) in coeffs.iter().zip(vectors) {
        for (o, x) in out.iter_mut().zip(v) {
            *o += c * x;
        }
    }
    out
}

/// Row echelon form in place; returns the pivot columns.
fn echelon(rows: &mut [RVec]) -> Vec<usize> {
    let ncols = rows.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = rows[r][c].recip();
        for x in rows[r].iter_mut() {
            *x *= inv;
        }
        for i in 0..rows.len() {
            if i != r && !rows[i][c].is_zero() {
                let f = rows[i][c];
                let pivot_row = rows[r].clone();
                for (x, y) in rows[i].iter_mut().zip(&pivot_row) {
                    *x -= f * y;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    pivots
}

pub fn rank(vectors: &[RVec]) -> usize {
    let mut rows = vectors.to_vec();
    echelon(&mut rows).len()
}

/// Exact inverse of a square matrix given by rows.
pub fn inverse(m: &[RVec]) -> Result<Vec<RVec>> {
    let n = m.len();
    let mut aug: Vec<RVec> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { Rational::one() } else { Rational::zero() }));
            r
        })
        .collect();
    let pivots = echelon(&mut aug);
    if pivots.len() < n || pivots.iter().enumerate().any(|(i, &p)| p != i) {
        return Err(Error::Singular);
    }
    Ok(aug.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Coordinates `c` with `Σ c_i basis_i = v`, or `None` when `v` is outside
/// the span. `basis` must be linearly independent.
pub fn coordinates(basis: &[RVec], v: &[Rational]) -> Option<RVec> {
    let k = basis.len();
    let gram: Vec<RVec> = basis.iter().map(|a| basis.iter().map(|b| dot(a, b)).collect()).collect();
    let inv = inverse(&gram).ok()?;
    let rhs: RVec = basis.iter().map(|a| dot(a, v)).collect();
    let c: RVec = (0..k).map(|i| dot(&inv[i], &rhs)).collect();
    (combination(&c, basis) == v).then_some(c)
}

pub fn format(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn to_f64(q: &Rational) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

pub fn is_nonnegative(q: &Rational) -> bool {
    !q.is_negative()
}
