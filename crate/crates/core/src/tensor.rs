//! Small dense linear algebra and exterior powers.
//!
//! `∧^i R^d` carries the basis `e_S = e_{s_1} ∧ ... ∧ e_{s_i}` indexed by
//! `i`-subsets `S = {s_1 < ... < s_i}` of `{0, ..., d-1}` in lexicographic
//! order. Every module shares this ordering, so coordinates of a
//! [`MultiVector`] are reproducible bit for bit across the crate.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Dense row-major-semantics real matrix. Backed by `nalgebra`.
pub type Matrix = DMatrix<f64>;

/// Largest dimension supported by the exterior-power layer.
pub const MAX_DIM: usize = 8;

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for j in 0..k {
        acc = acc * (n - j) / (j + 1);
    }
    acc
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(binomial(n, k));
    if k > n {
        return out;
    }
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        // advance to the next combination
        let mut pos = k;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            if cur[pos] < n - k + pos {
                break;
            }
            if pos == 0 {
                return out;
            }
        }
        if cur[pos] >= n - k + pos {
            return out;
        }
        cur[pos] += 1;
        for j in pos + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// Position of a sorted subset in the lexicographic order of `k`-subsets of `0..n`.
pub fn subset_index(n: usize, subset: &[usize]) -> usize {
    let k = subset.len();
    let mut idx = 0;
    let mut prev: usize = 0;
    for (pos, &s) in subset.iter().enumerate() {
        let start = if pos == 0 { 0 } else { prev + 1 };
        for skipped in start..s {
            idx += binomial(n - skipped - 1, k - pos - 1);
        }
        prev = s;
    }
    idx
}

fn check_degree(d: usize, i: usize) -> Result<()> {
    if i > d || d == 0 || d > MAX_DIM {
        return Err(Error::DegreeOutOfRange { degree: i, dim: d });
    }
    Ok(())
}

/// Determinant of a square submatrix selected by `rows` and `cols`.
fn minor(m: &Matrix, rows: &[usize], cols: &[usize]) -> f64 {
    let k = rows.len();
    match k {
        0 => 1.0,
        1 => m[(rows[0], cols[0])],
        2 => {
            m[(rows[0], cols[0])] * m[(rows[1], cols[1])]
                - m[(rows[0], cols[1])] * m[(rows[1], cols[0])]
        }
        _ => {
            let sub = Matrix::from_fn(k, k, |r, c| m[(rows[r], cols[c])]);
            sub.determinant()
        }
    }
}

/// Matrix of `∧^i M` in the lexicographic wedge basis.
///
/// Entry `(S, T)` is the minor of `M` with rows `S` and columns `T`, so that
/// `(∧^i M) e_T = Σ_S det(M[S, T]) e_S`.
pub fn exterior_action(m: &Matrix, i: usize) -> Result<Matrix> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "exterior action needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let d = m.nrows();
    check_degree(d, i)?;
    let basis = subsets(d, i);
    let n = basis.len();
    let mut out = Matrix::zeros(n, n);
    for (c, t) in basis.iter().enumerate() {
        for (r, s) in basis.iter().enumerate() {
            out[(r, c)] = minor(m, s, t);
        }
    }
    Ok(out)
}

/// Element of `∧^degree R^dim` in the lexicographic wedge basis.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiVector {
    dim: usize,
    degree: usize,
    coords: Vec<f64>,
}

impl MultiVector {
    pub fn new(dim: usize, degree: usize, coords: Vec<f64>) -> Result<Self> {
        check_degree(dim, degree)?;
        let expected = binomial(dim, degree);
        if coords.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "∧^{degree} R^{dim} has {expected} coordinates, got {}",
                coords.len()
            )));
        }
        Ok(Self { dim, degree, coords })
    }

    pub fn zero(dim: usize, degree: usize) -> Result<Self> {
        Self::new(dim, degree, vec![0.0; binomial(dim, degree)])
    }

    /// Basis vector `e_S` for a sorted subset `S`.
    pub fn basis(dim: usize, subset: &[usize]) -> Result<Self> {
        let degree = subset.len();
        check_degree(dim, degree)?;
        if subset.windows(2).any(|w| w[0] >= w[1]) || subset.iter().any(|&s| s >= dim) {
            return Err(Error::InvalidParameter(format!(
                "basis subset {subset:?} is not a sorted subset of 0..{dim}"
            )));
        }
        let mut mv = Self::zero(dim, degree)?;
        mv.coords[subset_index(dim, subset)] = 1.0;
        Ok(mv)
    }

    /// A vector of `R^dim` as a degree-one multivector.
    pub fn from_vector(v: &[f64]) -> Result<Self> {
        Self::new(v.len(), 1, v.to_vec())
    }

    /// `v_1 ∧ ... ∧ v_k` for the columns of `vectors`.
    pub fn decomposable(vectors: &Matrix) -> Result<Self> {
        let d = vectors.nrows();
        let k = vectors.ncols();
        check_degree(d, k)?;
        let cols: Vec<usize> = (0..k).collect();
        let coords = subsets(d, k).iter().map(|s| minor(vectors, s, &cols)).collect();
        Self::new(d, k, coords)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn norm(&self) -> f64 {
        self.coords.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&c| c == 0.0)
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            dim: self.dim,
            degree: self.degree,
            coords: self.coords.iter().map(|x| x * c).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim || self.degree != other.degree {
            return Err(Error::DimensionMismatch(
                "adding multivectors of different shape".into(),
            ));
        }
        let coords = self.coords.iter().zip(&other.coords).map(|(a, b)| a + b).collect();
        Ok(Self { dim: self.dim, degree: self.degree, coords })
    }

    /// Image under `∧^degree M`.
    pub fn transform(&self, m: &Matrix) -> Result<Self> {
        if m.nrows() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix acting on ∧ R^{}",
                m.nrows(),
                m.ncols(),
                self.dim
            )));
        }
        let action = exterior_action(m, self.degree)?;
        self.apply(&action)
    }

    /// Image under an already-computed exterior-power matrix.
    pub fn apply(&self, action: &Matrix) -> Result<Self> {
        if action.ncols() != self.coords.len() || action.nrows() != self.coords.len() {
            return Err(Error::DimensionMismatch("exterior action has wrong size".into()));
        }
        let v = nalgebra::DVector::from_column_slice(&self.coords);
        let w = action * v;
        Ok(Self { dim: self.dim, degree: self.degree, coords: w.as_slice().to_vec() })
    }
}

/// Sign of the shuffle that merges disjoint sorted `s` and `t` into sorted order.
fn merge_sign(s: &[usize], t: &[usize]) -> f64 {
    // count pairs (a in s, b in t) with a > b
    let mut inversions = 0usize;
    for &a in s {
        inversions += t.iter().filter(|&&b| b < a).count();
    }
    if inversions.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Exterior product `u ∧ v`.
pub fn wedge(u: &MultiVector, v: &MultiVector) -> Result<MultiVector> {
    if u.dim != v.dim {
        return Err(Error::DimensionMismatch(format!(
            "wedge of ∧ R^{} and ∧ R^{}",
            u.dim, v.dim
        )));
    }
    let d = u.dim;
    let degree = u.degree + v.degree;
    if degree > d {
        return Err(Error::DegreeOutOfRange { degree, dim: d });
    }
    let su = subsets(d, u.degree);
    let sv = subsets(d, v.degree);
    let mut out = MultiVector::zero(d, degree)?;
    let mut merged = Vec::with_capacity(degree);
    for (a, s) in su.iter().enumerate() {
        let cu = u.coords[a];
        if cu == 0.0 {
            continue;
        }
        for (b, t) in sv.iter().enumerate() {
            let cv = v.coords[b];
            if cv == 0.0 || s.iter().any(|x| t.contains(x)) {
                continue;
            }
            merged.clear();
            merged.extend_from_slice(s);
            merged.extend_from_slice(t);
            merged.sort_unstable();
            out.coords[subset_index(d, &merged)] += merge_sign(s, t) * cu * cv;
        }
    }
    Ok(out)
}

/// Spectral norm (largest singular value).
pub fn operator_norm(m: &Matrix) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.singular_values().max()
}

/// Lie bracket `[a, b] = ab - ba`.
pub fn bracket(a: &Matrix, b: &Matrix) -> Matrix {
    a * b - b * a
}
