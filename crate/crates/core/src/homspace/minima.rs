//! Minimal covolumes of rank-`i` sublattices and primitive point counts.

use num_integer::Integer;

use super::reduce::gauss_reduce;
use super::LatticePoint;
use crate::error::{Error, Result};
use crate::tensor::Matrix;

/// Enumeration nodes visited before giving up on a single search.
pub const ENUMERATION_BUDGET: u64 = 4_000_000;

/// Hermite constant bound for rank two: a reduced basis of a rank-2 lattice
/// of covolume `A` has `‖v_1‖‖v_2‖ ≤ (2/√3)·A`.
const RANK_TWO_FACTOR: f64 = 1.154_700_538_379_251_5;

struct ShortVector {
    coeffs: Vec<i64>,
    vector: nalgebra::DVector<f64>,
    norm: f64,
}

/// All nonzero `Bc` with `‖Bc‖ ≤ radius`, one from each `±` pair.
///
/// Schnorr–Euchner style depth-first search over the triangular factor of
/// `B`, so the visited region is exactly the ellipsoid, not a bounding box.
fn short_vectors(basis: &Matrix, radius: f64, budget: u64) -> Result<Vec<ShortVector>> {
    let d = basis.ncols();
    let r = basis.clone().qr().r();
    let bound = radius * radius * (1.0 + 1e-12) + 1e-300;
    let mut out = Vec::new();
    let mut coeffs = vec![0i64; d];
    let mut visited = 0u64;

    // partial[k] = squared length contributed by levels k..d
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        level: usize,
        r: &Matrix,
        bound: f64,
        partial: f64,
        coeffs: &mut Vec<i64>,
        visited: &mut u64,
        budget: u64,
        hits: &mut Vec<Vec<i64>>,
    ) -> Result<()> {
        let d = coeffs.len();
        let rkk = r[(level, level)].abs();
        let mut center = 0.0;
        for j in level + 1..d {
            center += r[(level, j)] * coeffs[j] as f64;
        }
        let center = if rkk > 0.0 { -center / r[(level, level)] } else { 0.0 };
        let room = ((bound - partial).max(0.0)).sqrt() / rkk;
        let lo = (center - room).ceil() as i64;
        let hi = (center + room).floor() as i64;
        for c in lo..=hi {
            *visited += 1;
            if *visited > budget {
                return Err(Error::EnumerationBudget(*visited));
            }
            let y = r[(level, level)] * (c as f64 - center);
            let p = partial + y * y;
            if p > bound {
                continue;
            }
            coeffs[level] = c;
            if level == 0 {
                hits.push(coeffs.clone());
            } else {
                recurse(level - 1, r, bound, p, coeffs, visited, budget, hits)?;
            }
        }
        coeffs[level] = 0;
        Ok(())
    }

    let mut hits = Vec::new();
    recurse(d - 1, &r, bound, 0.0, &mut coeffs, &mut visited, budget, &mut hits)?;
    for c in hits {
        // keep the representative whose last nonzero coefficient is positive
        match c.iter().rev().find(|&&v| v != 0) {
            Some(&v) if v > 0 => {}
            _ => continue,
        }
        let cf = nalgebra::DVector::from_iterator(d, c.iter().map(|&v| v as f64));
        let vector = basis * cf;
        let norm = vector.norm();
        if norm <= radius * (1.0 + 1e-12) {
            out.push(ShortVector { coeffs: c, vector, norm });
        }
    }
    Ok(out)
}

fn reduce(x: &LatticePoint) -> Matrix {
    x.reduced().basis().clone()
}

fn min_column_norm(b: &Matrix) -> f64 {
    (0..b.ncols()).map(|c| b.column(c).norm()).fold(f64::INFINITY, f64::min)
}

fn shortest(b: &Matrix) -> Result<f64> {
    if b.ncols() == 2 {
        return Ok(gauss_reduce(b).column(0).norm());
    }
    let radius = min_column_norm(b);
    let found = short_vectors(b, radius, ENUMERATION_BUDGET)?;
    Ok(found.iter().map(|v| v.norm).fold(radius, f64::min))
}

fn area(u: &nalgebra::DVector<f64>, v: &nalgebra::DVector<f64>) -> f64 {
    let g = u.norm_squared() * v.norm_squared() - u.dot(v).powi(2);
    g.max(0.0).sqrt()
}

fn independent(a: &[i64], b: &[i64]) -> bool {
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            if a[i] as i128 * b[j] as i128 != a[j] as i128 * b[i] as i128 {
                return true;
            }
        }
    }
    false
}

/// Smallest covolume of a rank-2 sublattice of a reduced basis `b`.
fn smallest_plane(b: &Matrix) -> Result<f64> {
    let d = b.ncols();
    let mut best = f64::INFINITY;
    for j in 0..d {
        for k in j + 1..d {
            best = best.min(area(&b.column(j).clone_owned(), &b.column(k).clone_owned()));
        }
    }
    let lambda1 = shortest(b)?;
    let radius = RANK_TWO_FACTOR * best / lambda1;
    let mut list = short_vectors(b, radius, ENUMERATION_BUDGET)?;
    list.sort_by(|p, q| p.norm.partial_cmp(&q.norm).unwrap());
    for (i, v1) in list.iter().enumerate() {
        if v1.norm * v1.norm > RANK_TWO_FACTOR * best * (1.0 + 1e-12) {
            break;
        }
        let limit = RANK_TWO_FACTOR * best / v1.norm * (1.0 + 1e-12);
        for v2 in &list[i + 1..] {
            if v2.norm > limit {
                break;
            }
            if !independent(&v1.coeffs, &v2.coeffs) {
                continue;
            }
            best = best.min(area(&v1.vector, &v2.vector));
        }
    }
    Ok(best)
}

/// Minimal norm of `v_1 ∧ .. ∧ v_i` over independent lattice vectors, that is
/// the smallest covolume of a rank-`i` sublattice.
///
/// Degrees above `d/2` go through the dual lattice, using
/// `covol(Λ ∩ V) = covol(Λ)·covol(Λ* ∩ V^⊥)` for rational subspaces `V`.
pub fn minima(x: &LatticePoint, i: usize) -> Result<f64> {
    let d = x.dim();
    if i == 0 || i >= d {
        return Err(Error::DegreeOutOfRange { degree: i, dim: d });
    }
    if d > 5 {
        return Err(Error::InvalidParameter(format!(
            "sublattice minima are implemented for d ≤ 5, got {d}"
        )));
    }
    if d == 2 {
        return Ok(gauss_reduce(x.basis()).column(0).norm());
    }
    let (lattice, degree, scale) = if 2 * i > d {
        (x.dual()?, d - i, x.covolume())
    } else {
        (x.clone(), i, 1.0)
    };
    let b = reduce(&lattice);
    let value = match degree {
        1 => shortest(&b)?,
        2 => smallest_plane(&b)?,
        _ => unreachable!("degree ≤ d/2 ≤ 2 for d ≤ 5"),
    };
    Ok(scale * value)
}

/// `minima(x, i)` for `i = 1, .., d-1`.
pub fn minima_all(x: &LatticePoint) -> Result<Vec<f64>> {
    (1..x.dim()).map(|i| minima(x, i)).collect()
}

/// Number of primitive lattice vectors with `‖v‖ ≤ r`.
pub fn siegel_count(x: &LatticePoint, r: f64) -> u64 {
    if !(r > 0.0) {
        return 0;
    }
    let b = reduce(x);
    let found = short_vectors(&b, r, u64::MAX).expect("unbounded enumeration");
    let primitive = found
        .iter()
        .filter(|v| v.coeffs.iter().fold(0i64, |g, c| g.gcd(c)) == 1)
        .count() as u64;
    2 * primitive
}
