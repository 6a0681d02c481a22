//! Expanding abelian subalgebras of `sl_d` built from a decomposition of a
//! diagonal element, and the fixed-vector criterion `V^U ⊂ V^+`.

use nalgebra::{DVector, SVD};

use super::decompose::chain_order;
use crate::error::{Error, Result};
use crate::height::sl_basis;
use crate::tensor::{bracket, Matrix};

/// `z = Σ_{i ∈ P} c_i z_i` with `z_i = E_jj − E_kk`, `w_i = E_jk`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpandingConstruction {
    pub d: usize,
    pub z: Vec<f64>,
    /// `β_i = e_j − e_k` as `(j, k)`, zero-based, in the original indexing.
    pub pairs: Vec<(usize, usize)>,
    pub coeffs: Vec<f64>,
    /// Indices `i` with `c_i > 0`.
    pub active: Vec<usize>,
}

fn unit_matrix(d: usize, j: usize, k: usize) -> Matrix {
    let mut m = Matrix::zeros(d, d);
    m[(j, k)] = 1.0;
    m
}

impl ExpandingConstruction {
    pub fn z_matrix(&self) -> Matrix {
        Matrix::from_diagonal(&DVector::from_vec(self.z.clone()))
    }

    pub fn z_part(&self, i: usize) -> Matrix {
        let (j, k) = self.pairs[i];
        unit_matrix(self.d, j, j) - unit_matrix(self.d, k, k)
    }

    pub fn w(&self, i: usize) -> Matrix {
        let (j, k) = self.pairs[i];
        unit_matrix(self.d, j, k)
    }

    /// Cartan involution `X ↦ −X^T`.
    pub fn theta_w(&self, i: usize) -> Matrix {
        -self.w(i).transpose()
    }

    pub fn u_basis(&self) -> Vec<Matrix> {
        self.active.iter().map(|&i| self.w(i)).collect()
    }

    /// `{z_i, w_i, θ(w_i)}` for `i ∈ P`.
    pub fn triples(&self) -> Vec<[Matrix; 3]> {
        self.active.iter().map(|&i| [self.z_part(i), self.w(i), self.theta_w(i)]).collect()
    }

    pub fn reconstruct(&self) -> Matrix {
        let mut m = Matrix::zeros(self.d, self.d);
        for &i in &self.active {
            m += self.z_part(i) * self.coeffs[i];
        }
        m
    }

    pub fn reconstruction_error(&self) -> f64 {
        (self.reconstruct() - self.z_matrix()).norm()
    }
}

/// Decomposes the diagonal `z` along partial sums of simple roots of
/// `A_{d-1}`. Entries must be nonincreasing unless `sort` is set, in which
/// case the construction runs on the sorted entries and maps back.
pub fn build_expanding(z: &[f64], sort: bool) -> Result<ExpandingConstruction> {
    let d = z.len();
    if d < 2 {
        return Err(Error::InvalidParameter("need at least two diagonal entries".into()));
    }
    if z.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("entries must be finite".into()));
    }
    let scale = z.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return Err(Error::InvalidParameter("z = 0".into()));
    }
    let trace: f64 = z.iter().sum();
    if trace.abs() > 1e-9 * scale {
        return Err(Error::InvalidParameter(format!("trace of z is {trace}, not 0")));
    }
    let mut perm: Vec<usize> = (0..d).collect();
    if z.windows(2).any(|p| p[0] < p[1]) {
        if !sort {
            return Err(Error::Precondition("entries of z are not nonincreasing".into()));
        }
        perm.sort_by(|&i, &j| z[j].total_cmp(&z[i]));
    }
    let sorted: Vec<f64> = perm.iter().map(|&i| z[i]).collect();
    let a: Vec<f64> = sorted[..d - 1]
        .iter()
        .scan(0.0, |s, x| {
            *s += x;
            Some(*s)
        })
        .collect();
    let order = chain_order(&a);
    let (mut lo, mut hi) = (order[0], order[0]);
    let tol = 1e-12 * scale;
    let mut pairs = Vec::with_capacity(d - 1);
    let mut coeffs = Vec::with_capacity(d - 1);
    for (k, &j) in order.iter().enumerate() {
        lo = lo.min(j);
        hi = hi.max(j);
        pairs.push((perm[lo], perm[hi + 1]));
        let next = order.get(k + 1).map_or(0.0, |&i| a[i]);
        let mut c = a[j] - next;
        if c < 0.0 {
            if c < -tol {
                return Err(Error::BranchFailure { branch: "chain", detail: format!("coefficient {k} is {c}") });
            }
            c = 0.0;
        }
        coeffs.push(c);
    }
    let active = (0..coeffs.len()).filter(|&i| coeffs[i] > tol).collect();
    Ok(ExpandingConstruction { d, z: z.to_vec(), pairs, coeffs, active })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpandingVerdict {
    pub passed: bool,
    /// Sine of the largest principal angle between `V^U ⊖ V^fixed` and `V^+`.
    pub max_sine: f64,
    pub invariant_dim: usize,
    pub fixed_dim: usize,
    pub expanding_dim: usize,
    /// Coordinates of the vector of `V^U ⊖ V^fixed` farthest from `V^+`.
    pub witness: Option<Vec<f64>>,
}

pub const ANGLE_TOL: f64 = 1e-8;

/// Orthonormal basis (columns) of the kernel of `m`.
fn null_space(m: &Matrix, cols: usize) -> Matrix {
    if m.nrows() == 0 {
        return Matrix::identity(cols, cols);
    }
    let mut padded = Matrix::zeros(m.nrows().max(cols), cols);
    padded.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
    let svd = SVD::new(padded, false, true);
    let v_t = svd.v_t.expect("requested");
    let smax = svd.singular_values.max();
    let tol = 1e-9 * smax.max(1.0);
    let keep: Vec<usize> = (0..cols).filter(|&i| svd.singular_values[i] <= tol).collect();
    Matrix::from_fn(cols, keep.len(), |r, c| v_t[(keep[c], r)])
}

/// Orthonormal basis of the column span.
fn orthonormal_span(m: &Matrix) -> Matrix {
    if m.ncols() == 0 {
        return Matrix::zeros(m.nrows(), 0);
    }
    let svd = SVD::new(m.clone(), true, false);
    let u = svd.u.expect("requested");
    let smax = svd.singular_values.max();
    let keep: Vec<usize> =
        (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] > 1e-9 * smax.max(1.0)).collect();
    Matrix::from_fn(m.nrows(), keep.len(), |r, c| u[(r, keep[c])])
}

fn stack(ops: &[&Matrix], cols: usize) -> Matrix {
    let rows: usize = ops.iter().map(|m| m.nrows()).sum();
    let mut out = Matrix::zeros(rows, cols);
    let mut r = 0;
    for m in ops {
        out.view_mut((r, 0), (m.nrows(), cols)).copy_from(*m);
        r += m.nrows();
    }
    out
}

/// Sum of eigenspaces of `a` with eigenvalue above `tol`.
fn positive_eigenspace(a: &Matrix, tol: f64) -> Matrix {
    let n = a.nrows();
    let mut eig: Vec<f64> = a.complex_eigenvalues().iter().map(|c| c.re).collect();
    eig.sort_by(f64::total_cmp);
    let scale = a.norm().max(1.0);
    let mut clusters: Vec<Vec<f64>> = Vec::new();
    for e in eig {
        match clusters.last_mut() {
            Some(c) if (e - c[c.len() - 1]).abs() <= 1e-6 * scale => c.push(e),
            _ => clusters.push(vec![e]),
        }
    }
    let mut cols: Vec<DVector<f64>> = Vec::new();
    for c in clusters {
        let mu = c.iter().sum::<f64>() / c.len() as f64;
        if mu <= tol {
            continue;
        }
        let shifted = a - Matrix::identity(n, n) * mu;
        let svd = SVD::new(shifted, false, true);
        let v_t = svd.v_t.expect("requested");
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
        for &i in idx.iter().take(c.len()) {
            cols.push(v_t.row(i).transpose());
        }
    }
    if cols.is_empty() {
        return Matrix::zeros(n, 0);
    }
    orthonormal_span(&Matrix::from_columns(&cols))
}

/// Passes iff the `U`-fixed vectors outside the fixed vectors of every
/// supplied operator lie in the expanding eigenspace of `z_op`.
///
/// `V^U` is the joint kernel of `u_ops`; `V^fixed` the joint kernel of
/// `z_op`, `u_ops` and `extra_ops`.
pub fn expanding_check(z_op: &Matrix, u_ops: &[Matrix], extra_ops: &[Matrix]) -> Result<ExpandingVerdict> {
    let n = z_op.nrows();
    if z_op.ncols() != n {
        return Err(Error::DimensionMismatch("z operator is not square".into()));
    }
    if let Some(bad) = u_ops.iter().chain(extra_ops).find(|m| m.nrows() != n || m.ncols() != n) {
        return Err(Error::DimensionMismatch(format!(
            "operator of shape {}x{} for a space of dimension {n}",
            bad.nrows(),
            bad.ncols()
        )));
    }
    let u_refs: Vec<&Matrix> = u_ops.iter().collect();
    let invariant = null_space(&stack(&u_refs, n), n);
    let mut all: Vec<&Matrix> = vec![z_op];
    all.extend(u_ops.iter().chain(extra_ops));
    let fixed = null_space(&stack(&all, n), n);
    let fixed_t = fixed.transpose();
    let mut constraints = u_refs.clone();
    constraints.push(&fixed_t);
    let moving = null_space(&stack(&constraints, n), n);
    let plus = positive_eigenspace(z_op, 1e-9 * z_op.norm().max(1.0));
    let residual = &moving - &plus * (plus.transpose() * &moving);
    let (max_sine, witness) = if moving.ncols() == 0 {
        (0.0, None)
    } else {
        let svd = SVD::new(residual, false, true);
        let v_t = svd.v_t.expect("requested");
        let (imax, &smax) = svd
            .singular_values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty");
        let coords = &moving * v_t.row(imax).transpose();
        (smax, (smax > ANGLE_TOL).then(|| coords.iter().copied().collect()))
    };
    Ok(ExpandingVerdict {
        passed: max_sine <= ANGLE_TOL,
        max_sine,
        invariant_dim: invariant.ncols(),
        fixed_dim: fixed.ncols(),
        expanding_dim: plus.ncols(),
        witness,
    })
}

/// Matrices of `ad X` on the span of an orthonormal (Frobenius) `basis`.
pub fn adjoint_operators(basis: &[Matrix], elements: &[Matrix]) -> Result<Vec<Matrix>> {
    let n = basis.len();
    elements
        .iter()
        .map(|x| {
            let mut m = Matrix::zeros(n, n);
            for (k, b) in basis.iter().enumerate() {
                let image = bracket(x, b);
                let mut rest = image.clone();
                for (j, bj) in basis.iter().enumerate() {
                    let c = bj.dot(&image);
                    m[(j, k)] = c;
                    rest -= bj * c;
                }
                if rest.norm() > 1e-8 * (1.0 + image.norm()) {
                    return Err(Error::Precondition("subspace is not invariant under the bracket".into()));
                }
            }
            Ok(m)
        })
        .collect()
}

fn push_orthonormal(basis: &mut Vec<Matrix>, m: &Matrix) -> bool {
    let mut r = m.clone();
    for _ in 0..2 {
        for b in basis.iter() {
            let c = b.dot(&r);
            r -= b * c;
        }
    }
    let norm = r.norm();
    if norm > 1e-9 * (1.0 + m.norm()) {
        basis.push(r / norm);
        true
    } else {
        false
    }
}

/// Orthonormal basis of the smallest Lie subalgebra containing `gens`.
pub fn bracket_closure(gens: &[Matrix]) -> Vec<Matrix> {
    let mut basis = Vec::new();
    for g in gens {
        push_orthonormal(&mut basis, g);
    }
    let mut done = 0;
    while done < basis.len() {
        let i = done;
        for j in 0..i {
            let b = bracket(&basis[i], &basis[j]);
            push_orthonormal(&mut basis, &b);
        }
        done += 1;
    }
    basis
}

/// `B(X, Y) = tr(ad X ad Y)` on the span of `basis`.
pub fn killing_form(basis: &[Matrix]) -> Result<Matrix> {
    let ops = adjoint_operators(basis, basis)?;
    let n = basis.len();
    Ok(Matrix::from_fn(n, n, |j, k| (&ops[j] * &ops[k]).trace()))
}

/// Coordinates in `basis` turned back into a matrix.
pub fn from_coordinates(basis: &[Matrix], coords: &[f64]) -> Matrix {
    let mut m = Matrix::zeros(basis[0].nrows(), basis[0].ncols());
    for (b, c) in basis.iter().zip(coords) {
        m += b * *c;
    }
    m
}

/// The criterion on the adjoint representation of `sl_d`, with `V^fixed`
/// taken over all of `sl_d`. Returns the verdict and the witness as a matrix.
pub fn check_in_sl(z: &Matrix, gens: &[Matrix]) -> Result<(ExpandingVerdict, Option<Matrix>)> {
    let d = z.nrows();
    if z.ncols() != d || gens.iter().any(|g| g.nrows() != d || g.ncols() != d) {
        return Err(Error::DimensionMismatch("all matrices must be d x d".into()));
    }
    let basis = sl_basis(d);
    let z_op = adjoint_operators(&basis, std::slice::from_ref(z))?.remove(0);
    let u_ops = adjoint_operators(&basis, gens)?;
    let extra = adjoint_operators(&basis, &basis)?;
    let verdict = expanding_check(&z_op, &u_ops, &extra)?;
    let witness = verdict.witness.as_ref().map(|c| from_coordinates(&basis, c));
    Ok((verdict, witness))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstructionReport {
    pub verdict: ExpandingVerdict,
    pub closure_dim: usize,
    pub killing_min_singular: f64,
    pub killing_condition: f64,
    /// Largest `‖[w_i, w_j]‖`.
    pub abelian_residual: f64,
    /// Largest residual of `[h,e] = 2e`, `[h,f] = −2f`, `[e,f] = h` with
    /// `h = z_i`, `e = w_i`, `f = −θ(w_i)`.
    pub sl2_residual: f64,
    pub reconstruction_error: f64,
}

/// Checks the construction on the adjoint representation of the subalgebra
/// generated by its triples.
pub fn check_construction(con: &ExpandingConstruction) -> Result<ConstructionReport> {
    let triples = con.triples();
    let gens: Vec<Matrix> = triples.iter().flat_map(|t| t.iter().cloned()).collect();
    let closure = bracket_closure(&gens);
    let z_op = adjoint_operators(&closure, &[con.z_matrix()])?.remove(0);
    let u_ops = adjoint_operators(&closure, &con.u_basis())?;
    let extra = adjoint_operators(&closure, &gens)?;
    let verdict = expanding_check(&z_op, &u_ops, &extra)?;
    let killing = killing_form(&closure)?;
    let sv = killing.singular_values();
    let (smin, smax) = (sv.min(), sv.max());
    let u = con.u_basis();
    let mut abelian_residual = 0.0f64;
    for i in 0..u.len() {
        for j in i + 1..u.len() {
            abelian_residual = abelian_residual.max(bracket(&u[i], &u[j]).norm());
        }
    }
    let mut sl2_residual = 0.0f64;
    for [h, e, th] in &triples {
        let f = -th;
        sl2_residual = sl2_residual
            .max((bracket(h, e) - e * 2.0).norm())
            .max((bracket(h, &f) + &f * 2.0).norm())
            .max((bracket(e, &f) - h).norm());
    }
    Ok(ConstructionReport {
        verdict,
        closure_dim: closure.len(),
        killing_min_singular: smin,
        killing_condition: if smin > 0.0 { smax / smin } else { f64::INFINITY },
        abelian_residual,
        sl2_residual,
        reconstruction_error: con.reconstruction_error(),
    })
}
