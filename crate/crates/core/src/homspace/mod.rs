//! Diagonal flows `g_t u(w)` acting on unimodular lattices in `R^d`.
//!
//! A lattice is stored by a basis matrix whose columns generate it, so the
//! point `g·Z^d` has basis `g`. The flow is `g_t = diag(e^{a_1 t}, ..,
//! e^{a_m t}, e^{-b_1 t}, .., e^{-b_n t})` and the chart is
//! `u(w) = [[I_m, ξ(w)], [0, I_n]]` with `ξ_{ij} = w_{i·n + j}`.

mod minima;
mod reduce;

pub use minima::{minima, minima_all, siegel_count, ENUMERATION_BUDGET};
pub use reduce::{gauss_reduce, lll_reduce};

use crate::error::{Error, Result};
use crate::tensor::Matrix;

/// Largest `|t|·max(a, b)` accepted before entries leave the float range.
pub const OVERFLOW_GUARD: f64 = 500.0;

#[derive(Debug, Clone, PartialEq)]
pub struct FlowSpec {
    a: Vec<f64>,
    b: Vec<f64>,
    weights: Vec<f64>,
}

/// Builds the flow with expanding exponents `a` and contracting exponents `b`.
pub fn make_flow(a: &[f64], b: &[f64]) -> Result<FlowSpec> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidParameter("both exponent blocks must be nonempty".into()));
    }
    if a.iter().chain(b).any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "exponents must be positive and finite: a = {a:?}, b = {b:?}"
        )));
    }
    let sa: f64 = a.iter().sum();
    let sb: f64 = b.iter().sum();
    if (sa - sb).abs() > 1e-12 {
        return Err(Error::TraceMismatch { a: sa, b: sb });
    }
    if a.len() + b.len() > crate::tensor::MAX_DIM {
        return Err(Error::InvalidParameter(format!(
            "dimension {} exceeds {}",
            a.len() + b.len(),
            crate::tensor::MAX_DIM
        )));
    }
    let weights = a.iter().flat_map(|ai| b.iter().map(move |bj| ai + bj)).collect();
    Ok(FlowSpec { a: a.to_vec(), b: b.to_vec(), weights })
}

impl FlowSpec {
    pub fn m(&self) -> usize {
        self.a.len()
    }

    pub fn n(&self) -> usize {
        self.b.len()
    }

    pub fn d(&self) -> usize {
        self.a.len() + self.b.len()
    }

    /// Dimension of the chart, `m·n`.
    pub fn chart_dim(&self) -> usize {
        self.a.len() * self.b.len()
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// Log-eigenvalues of `g_1`: `(a_1, .., a_m, -b_1, .., -b_n)`.
    pub fn exponents(&self) -> Vec<f64> {
        self.a.iter().copied().chain(self.b.iter().map(|v| -v)).collect()
    }

    /// Expansion rate `a_i + b_j` of chart coordinate `i·n + j`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn max_rate(&self) -> f64 {
        self.a.iter().chain(&self.b).fold(0.0, |m, v| m.max(*v))
    }

    fn check_time(&self, t: f64) -> Result<()> {
        let s = t.abs() * self.max_rate();
        if !(s <= OVERFLOW_GUARD) {
            return Err(Error::FlowOverflow(s));
        }
        Ok(())
    }

    fn check_chart(&self, w: &[f64]) -> Result<()> {
        if w.len() != self.chart_dim() {
            return Err(Error::DimensionMismatch(format!(
                "chart point has {} coordinates, expected {}",
                w.len(),
                self.chart_dim()
            )));
        }
        Ok(())
    }

    /// `g_t` as a matrix.
    pub fn diagonal(&self, t: f64) -> Result<Matrix> {
        self.check_time(t)?;
        let diag: Vec<f64> = self.exponents().iter().map(|v| (v * t).exp()).collect();
        Ok(Matrix::from_diagonal(&nalgebra::DVector::from_vec(diag)))
    }

    /// `u(w)` as a matrix.
    pub fn unipotent(&self, w: &[f64]) -> Result<Matrix> {
        self.check_chart(w)?;
        let (m, n) = (self.m(), self.n());
        let mut u = Matrix::identity(m + n, m + n);
        for i in 0..m {
            for j in 0..n {
                u[(i, m + j)] = w[i * n + j];
            }
        }
        Ok(u)
    }

    /// `g_t u(w)` as a matrix.
    pub fn flow_matrix(&self, t: f64, w: &[f64]) -> Result<Matrix> {
        Ok(self.diagonal(t)? * self.unipotent(w)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticePoint {
    basis: Matrix,
}

impl LatticePoint {
    /// Lattice generated by the columns of `basis`; requires `|det| = 1` to 1e-9.
    pub fn new(basis: Matrix) -> Result<Self> {
        check_basis(&basis)?;
        let det = basis.determinant().abs();
        if (det - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "basis has |det| = {det}, expected 1"
            )));
        }
        Ok(Self { basis })
    }

    /// Rescales a nonsingular basis to covolume one.
    pub fn normalized(basis: Matrix) -> Result<Self> {
        check_basis(&basis)?;
        let det = basis.determinant().abs();
        if !(det > 0.0 && det.is_finite()) {
            return Err(Error::Singular);
        }
        let d = basis.nrows() as f64;
        Ok(Self { basis: basis / det.powf(1.0 / d) })
    }

    /// The standard lattice `Z^d`.
    pub fn standard(d: usize) -> Self {
        Self { basis: Matrix::identity(d, d) }
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn covolume(&self) -> f64 {
        self.basis.determinant().abs()
    }

    /// Same lattice with a reduced basis (Lagrange–Gauss for `d = 2`, LLL otherwise).
    pub fn reduced(&self) -> Self {
        let basis = if self.dim() == 2 {
            gauss_reduce(&self.basis)
        } else {
            lll_reduce(&self.basis, 0.99)
        };
        Self { basis }
    }

    /// The lattice `g·Λ` without renormalization.
    pub fn transformed(&self, g: &Matrix) -> Result<Self> {
        if g.nrows() != self.dim() || g.ncols() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix acting on a rank-{} lattice",
                g.nrows(),
                g.ncols(),
                self.dim()
            )));
        }
        Ok(Self { basis: g * &self.basis })
    }

    /// Dual lattice, generated by the columns of `B^{-T}`.
    pub fn dual(&self) -> Result<Self> {
        let inv = self.basis.clone().try_inverse().ok_or(Error::Singular)?;
        Ok(Self { basis: inv.transpose() })
    }
}

fn check_basis(basis: &Matrix) -> Result<()> {
    if !basis.is_square() || basis.nrows() < 2 {
        return Err(Error::DimensionMismatch(format!(
            "lattice basis must be square of size ≥ 2, got {}x{}",
            basis.nrows(),
            basis.ncols()
        )));
    }
    if basis.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("basis has non-finite entries".into()));
    }
    Ok(())
}

fn check_dims(spec: &FlowSpec, x: &LatticePoint) -> Result<()> {
    if spec.d() != x.dim() {
        return Err(Error::DimensionMismatch(format!(
            "flow on R^{} applied to a lattice in R^{}",
            spec.d(),
            x.dim()
        )));
    }
    Ok(())
}

/// `g_t u(w) x` with its basis rescaled to unit covolume.
///
/// The rescaling factor is `|det B|·det(g_t)`, which is known in closed form;
/// a numerically computed determinant of `g_t u(w) B` would lose all accuracy
/// once `e^{t·max rate}` approaches the inverse machine epsilon.
pub fn apply_flow(spec: &FlowSpec, x: &LatticePoint, t: f64, w: &[f64]) -> Result<LatticePoint> {
    let raw = apply_flow_raw(spec, x, t, w)?;
    let trace: f64 = spec.exponents().iter().sum();
    let det = x.covolume() * (trace * t).exp();
    let d = spec.d() as f64;
    Ok(LatticePoint { basis: raw.basis / det.powf(1.0 / d) })
}

/// `g_t u(w) x` without renormalization.
pub fn apply_flow_raw(spec: &FlowSpec, x: &LatticePoint, t: f64, w: &[f64]) -> Result<LatticePoint> {
    check_dims(spec, x)?;
    let g = spec.flow_matrix(t, w)?;
    Ok(LatticePoint { basis: g * &x.basis })
}

/// A discretized orbit `t ↦ g_t u(w) x`.
///
/// Each step scales the rows of the basis by `e^{v_k dt}` and reduces it
/// again, so the basis stays well conditioned for arbitrarily long times.
/// Rounding makes the computed path a pseudo-orbit once `t` exceeds a few
/// multiples of `ln(1/eps)/max rate`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    exponents: Vec<f64>,
    basis: Matrix,
    time: f64,
}

impl Trajectory {
    pub fn new(spec: &FlowSpec, x: &LatticePoint, w: &[f64]) -> Result<Self> {
        check_dims(spec, x)?;
        let start = x.transformed(&spec.unipotent(w)?)?.reduced();
        Ok(Self { exponents: spec.exponents(), basis: start.basis, time: 0.0 })
    }

    /// Starts from `x` itself (chart point `0`).
    pub fn from_lattice(spec: &FlowSpec, x: &LatticePoint) -> Result<Self> {
        let w = vec![0.0; spec.chart_dim()];
        Self::new(spec, x, &w)
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn lattice(&self) -> LatticePoint {
        LatticePoint { basis: self.basis.clone() }
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    /// Advances by `dt`, which may be any size; long jumps are split so that
    /// no single factor exceeds `e^{8}`.
    pub fn advance(&mut self, dt: f64) {
        let rate = self.exponents.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let pieces = ((dt.abs() * rate) / 8.0).ceil().max(1.0) as usize;
        let h = dt / pieces as f64;
        let scale: Vec<f64> = self.exponents.iter().map(|v| (v * h).exp()).collect();
        for _ in 0..pieces {
            for (r, s) in scale.iter().enumerate() {
                let mut row = self.basis.row_mut(r);
                row *= *s;
            }
            self.basis = if self.basis.nrows() == 2 {
                gauss_reduce(&self.basis)
            } else {
                lll_reduce(&self.basis, 0.99)
            };
        }
        // drift in the determinant comes only from rounding; remove it
        let d = self.basis.nrows() as f64;
        let det = self.basis.determinant().abs();
        self.basis /= det.powf(1.0 / d);
        self.time += dt;
    }
}
