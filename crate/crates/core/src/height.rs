//! The height function `α_ε` on unimodular lattices and the inequalities it obeys.
//!
//! For `SL_d` every exterior power `∧^i R^d` with `0 < i < d` is irreducible
//! with no trivial summand, so `φ_ε(v) = ε^{δ_i/δη_i}·‖v‖^{-1/δη_i}` and
//! `α_ε(x) = max_i φ_ε` evaluated at the shortest integral `i`-vector.

use nalgebra::DVector;
use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::homspace::{apply_flow, minima_all, FlowSpec, LatticePoint};
use crate::quadrature::{unit_box, Quadrature};
use crate::rng;
use crate::tensor::{binomial, exterior_action, operator_norm, subsets, Matrix, MultiVector};

#[derive(Debug, Clone, PartialEq)]
pub struct HeightParams {
    d: usize,
    epsilon: f64,
    delta_i: Vec<usize>,
    delta_eta: Vec<f64>,
    sigma: f64,
    sigma1: f64,
}

/// Indices of the height function for a flow, for degrees `1..d`.
pub fn make_height_params(spec: &FlowSpec, epsilon: f64) -> Result<HeightParams> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon = {epsilon} is not in (0, 1)")));
    }
    let d = spec.d();
    let mut exps = spec.exponents();
    exps.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let delta_i: Vec<usize> = (1..d).map(|i| (d - i) * i).collect();
    let delta_eta: Vec<f64> = (1..d).map(|i| exps[..i].iter().sum()).collect();
    if let Some(bad) = delta_eta.iter().position(|v| *v <= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "flow does not expand ∧^{} R^{d}: top exponent {}",
            bad + 1,
            delta_eta[bad]
        )));
    }
    let lo = delta_eta.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = delta_eta.iter().cloned().fold(0.0, f64::max);
    Ok(HeightParams { d, epsilon, delta_i, delta_eta, sigma: 1.0 / lo, sigma1: 1.0 / hi })
}

impl HeightParams {
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `δ_i = (d - i)·i` for `i = 1..d`.
    pub fn delta_i(&self) -> &[usize] {
        &self.delta_i
    }

    /// Log of the top eigenvalue of `g_1` on `∧^i`, for `i = 1..d`.
    pub fn delta_eta(&self) -> &[f64] {
        &self.delta_eta
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn sigma1(&self) -> f64 {
        self.sigma1
    }

    /// `φ_ε` of a vector of norm `norm` in degree `i`.
    pub fn phi_of_norm(&self, i: usize, norm: f64) -> f64 {
        if norm == 0.0 {
            return f64::INFINITY;
        }
        let de = self.delta_eta[i - 1];
        self.epsilon.powf(self.delta_i[i - 1] as f64 / de) * norm.powf(-1.0 / de)
    }

    /// `α_ε` from the minima `m_1, .., m_{d-1}`.
    pub fn alpha_from_minima(&self, minima: &[f64]) -> f64 {
        minima
            .iter()
            .enumerate()
            .map(|(k, m)| self.phi_of_norm(k + 1, *m))
            .fold(0.0, f64::max)
    }
}

pub fn phi(params: &HeightParams, v: &MultiVector) -> Result<f64> {
    let i = v.degree();
    if v.dim() != params.d {
        return Err(Error::DimensionMismatch(format!(
            "multivector over R^{} for a height on R^{}",
            v.dim(),
            params.d
        )));
    }
    if i == 0 || i >= params.d {
        return Err(Error::DegreeOutOfRange { degree: i, dim: params.d });
    }
    Ok(params.phi_of_norm(i, v.norm()))
}

pub fn alpha(params: &HeightParams, x: &LatticePoint) -> Result<f64> {
    if x.dim() != params.d {
        return Err(Error::DimensionMismatch(format!(
            "lattice in R^{} for a height on R^{}",
            x.dim(),
            params.d
        )));
    }
    Ok(params.alpha_from_minima(&minima_all(x)?))
}

/// Which representation of `SL_d` an integral is taken in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RepKind {
    Exterior(usize),
    Adjoint,
}

/// A representation of `SL_d` in an orthonormal basis of weight vectors for
/// the diagonal torus. For `∧^i` the basis is the lexicographic wedge basis;
/// for the adjoint it is `E_{jk}` (`j ≠ k`, lexicographic) followed by
/// orthonormal traceless diagonal matrices.
#[derive(Debug, Clone)]
pub struct Representation {
    kind: RepKind,
    d: usize,
    adjoint_basis: Vec<Matrix>,
}

impl Representation {
    pub fn new(kind: RepKind, d: usize) -> Result<Self> {
        let adjoint_basis = match kind {
            RepKind::Exterior(i) => {
                if i == 0 || i >= d {
                    return Err(Error::DegreeOutOfRange { degree: i, dim: d });
                }
                Vec::new()
            }
            RepKind::Adjoint => sl_basis(d),
        };
        Ok(Self { kind, d, adjoint_basis })
    }

    pub fn kind(&self) -> RepKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            RepKind::Exterior(i) => binomial(self.d, i),
            RepKind::Adjoint => self.d * self.d - 1,
        }
    }

    /// Matrix of `ρ(g)`.
    pub fn action(&self, g: &Matrix) -> Result<Matrix> {
        match self.kind {
            RepKind::Exterior(i) => exterior_action(g, i),
            RepKind::Adjoint => {
                let inv = g.clone().try_inverse().ok_or(Error::Singular)?;
                let n = self.adjoint_basis.len();
                let mut out = Matrix::zeros(n, n);
                for (c, bc) in self.adjoint_basis.iter().enumerate() {
                    let img = g * bc * &inv;
                    for (r, br) in self.adjoint_basis.iter().enumerate() {
                        out[(r, c)] = img.dot(br);
                    }
                }
                Ok(out)
            }
        }
    }

    /// Log-eigenvalue of `g_1` on each basis vector.
    pub fn log_weights(&self, spec: &FlowSpec) -> Vec<f64> {
        let v = spec.exponents();
        match self.kind {
            RepKind::Exterior(i) => {
                subsets(self.d, i).iter().map(|s| s.iter().map(|k| v[*k]).sum()).collect()
            }
            RepKind::Adjoint => {
                let mut w = Vec::with_capacity(self.dim());
                for j in 0..self.d {
                    for k in 0..self.d {
                        if j != k {
                            w.push(v[j] - v[k]);
                        }
                    }
                }
                w.extend(std::iter::repeat_n(0.0, self.d - 1));
                w
            }
        }
    }
}

/// Orthonormal (Frobenius) basis of `sl_d`.
pub fn sl_basis(d: usize) -> Vec<Matrix> {
    let mut basis = Vec::with_capacity(d * d - 1);
    for j in 0..d {
        for k in 0..d {
            if j != k {
                let mut e = Matrix::zeros(d, d);
                e[(j, k)] = 1.0;
                basis.push(e);
            }
        }
    }
    for l in 1..d {
        let mut h = Matrix::zeros(d, d);
        let norm = ((l * (l + 1)) as f64).sqrt();
        for k in 0..l {
            h[(k, k)] = 1.0 / norm;
        }
        h[(l, l)] = -(l as f64) / norm;
        basis.push(h);
    }
    basis
}

fn check_rep(spec: &FlowSpec, rep: &Representation) -> Result<()> {
    if rep.d != spec.d() {
        return Err(Error::DimensionMismatch(format!(
            "representation of SL_{} used with a flow on R^{}",
            rep.d,
            spec.d()
        )));
    }
    Ok(())
}

/// `ρ(u(w))` at every node of a quadrature on `I^m`.
fn chart_actions(spec: &FlowSpec, rep: &Representation, grid: &Quadrature) -> Result<Vec<Matrix>> {
    let (lo, hi) = unit_box(spec.chart_dim());
    grid.nodes(&lo, &hi)
        .par_iter()
        .map(|w| rep.action(&spec.unipotent(w)?))
        .collect()
}

/// `∫_{I^m} ‖ρ(g_t u(w)) v‖^{-θ} dw` for a fixed vector `v`.
pub fn contraction_integral_at(
    spec: &FlowSpec,
    rep: &Representation,
    v: &[f64],
    t: f64,
    theta: f64,
    grid: &Quadrature,
) -> Result<f64> {
    check_rep(spec, rep)?;
    let actions = chart_actions(spec, rep, grid)?;
    Ok(integral_for(&actions, &scales(spec, rep, t), v, theta, spec.chart_dim()))
}

fn scales(spec: &FlowSpec, rep: &Representation, t: f64) -> Vec<f64> {
    rep.log_weights(spec).iter().map(|w| (w * t).exp()).collect()
}

fn integral_for(actions: &[Matrix], scale: &[f64], v: &[f64], theta: f64, m: usize) -> f64 {
    let v = DVector::from_column_slice(v);
    let volume = 2f64.powi(m as i32);
    let sum: f64 = actions
        .iter()
        .map(|a| {
            let img = a * &v;
            let n2: f64 = img.iter().zip(scale).map(|(x, s)| (x * s) * (x * s)).sum();
            n2.sqrt().powf(-theta)
        })
        .sum();
    volume * sum / actions.len() as f64
}

/// Estimate of `sup_{‖v‖=1} ∫_{I^m} ‖ρ(g_t u(w)) v‖^{-θ} dw`.
///
/// The supremum is taken over the coordinate directions and `v_samples`
/// uniform points on the sphere drawn from `seed`.
pub fn contraction_integral(
    spec: &FlowSpec,
    rep: &Representation,
    t: f64,
    theta: f64,
    grid: &Quadrature,
    v_samples: usize,
    seed: u64,
) -> Result<f64> {
    check_rep(spec, rep)?;
    if !(theta > 0.0 && t > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "contraction integral needs t > 0 and theta > 0, got t = {t}, theta = {theta}"
        )));
    }
    let dim = rep.dim();
    let mut directions: Vec<Vec<f64>> = (0..dim)
        .map(|k| {
            let mut e = vec![0.0; dim];
            e[k] = 1.0;
            e
        })
        .collect();
    directions.extend((0..v_samples).map(|s| random_unit(dim, &mut rng::stream(seed, s as u64))));
    let actions = chart_actions(spec, rep, grid)?;
    let scale = scales(spec, rep, t);
    let values: Vec<f64> = directions
        .par_iter()
        .map(|v| integral_for(&actions, &scale, v, theta, spec.chart_dim()))
        .collect();
    Ok(values.iter().cloned().fold(0.0, f64::max))
}

/// Uniform point on the unit sphere of `R^dim`.
pub fn random_unit(dim: usize, r: &mut rng::Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| r.sample::<f64, _>(StandardNormal)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.iter().map(|x| x / n).collect();
        }
    }
}

/// Monte Carlo estimate of `|{w ∈ I^m : ‖π_+(ρ(u(w)) v)‖ ≤ r}| / 2^m`, where
/// `π_+` keeps the coordinates on which `g_1` expands.
pub fn good_sublevel_measure(
    spec: &FlowSpec,
    rep: &Representation,
    v: &[f64],
    r: f64,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    check_rep(spec, rep)?;
    if v.len() != rep.dim() {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} in a representation of dimension {}",
            v.len(),
            rep.dim()
        )));
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!("vector has norm {norm}, expected 1")));
    }
    if r < 0.0 {
        return Err(Error::InvalidParameter(format!("radius {r} is negative")));
    }
    let expanding: Vec<bool> = rep.log_weights(spec).iter().map(|w| *w > 1e-12).collect();
    let grid = Quadrature::MonteCarlo { samples, seed };
    let (lo, hi) = unit_box(spec.chart_dim());
    let vv = DVector::from_column_slice(v);
    let frac = grid.average(&lo, &hi, |w| {
        let a = spec.unipotent(w).and_then(|u| rep.action(&u)).expect("valid chart point");
        let img = a * &vv;
        let n2: f64 = img
            .iter()
            .zip(&expanding)
            .filter(|(_, e)| **e)
            .map(|(x, _)| x * x)
            .sum();
        if n2.sqrt() <= r {
            1.0
        } else {
            0.0
        }
    });
    Ok(frac)
}

/// Average of `α_ε(g_t u(w) x)` over `w ∈ I^m`, together with `α_ε(x)`.
pub fn drift_check(
    spec: &FlowSpec,
    params: &HeightParams,
    x: &LatticePoint,
    t: f64,
    grid: &Quadrature,
) -> Result<(f64, f64)> {
    let ax = alpha(params, x)?;
    let (lo, hi) = unit_box(spec.chart_dim());
    let nodes = grid.nodes(&lo, &hi);
    let values: Vec<f64> = nodes
        .par_iter()
        .map(|w| apply_flow(spec, x, t, w).and_then(|y| alpha(params, &y)))
        .collect::<Result<_>>()?;
    Ok((values.iter().sum::<f64>() / values.len() as f64, ax))
}

/// A constant `C` with `α(g_s u(ξ) y) ≤ C·α(y)` for `s` and `ξ` on grids of
/// `[0, s_max]` and `[-radius, radius]^{mn}` (endpoints included).
///
/// Each grid value is a rigorous ratio bound `max_i ‖∧^i h^{-1}‖^{1/δη_i}`;
/// the grid only approximates the supremum over the continuum.
pub fn height_slack(
    spec: &FlowSpec,
    params: &HeightParams,
    s_max: f64,
    radius: f64,
    per_axis: usize,
) -> Result<f64> {
    let m = spec.chart_dim();
    let k = per_axis.max(2);
    let s_nodes = if s_max > 0.0 { k } else { 1 };
    let mut worst = 1.0f64;
    for si in 0..s_nodes {
        let s = if s_nodes == 1 { 0.0 } else { s_max * si as f64 / (s_nodes - 1) as f64 };
        for mut idx in 0..k.pow(m as u32) {
            let mut xi = vec![0.0; m];
            for c in xi.iter_mut() {
                let j = idx % k;
                idx /= k;
                *c = -radius + 2.0 * radius * j as f64 / (k - 1) as f64;
            }
            // (g_s u(ξ))^{-1} = u(-ξ) g_{-s}
            let neg: Vec<f64> = xi.iter().map(|v| -v).collect();
            let inv = spec.unipotent(&neg)? * spec.diagonal(-s)?;
            for i in 1..spec.d() {
                let norm = operator_norm(&exterior_action(&inv, i)?);
                worst = worst.max(norm.powf(1.0 / params.delta_eta[i - 1]));
            }
        }
    }
    Ok(worst)
}
