//! Correlations of unipotent differences `ψ_t(w) = ψ(g_t u(w)x) − ψ(u(s e_i) g_t u(w) x)`.

use rand::Rng as _;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::homspace::{apply_flow, minima, FlowSpec, LatticePoint, Trajectory};
use crate::rng;
use crate::stats::linear_fit;
use crate::tensor::Matrix;

/// Smooth bump of the first minimum,
/// `ψ(Λ) = exp(-1 / (1 - ((λ_1(Λ) - center)/width)^2))` inside the window and
/// `0` outside. Requires `center > width`, so ψ vanishes near the cusp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observable {
    center: f64,
    width: f64,
    lipschitz: f64,
}

pub fn bump(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - x * x)).exp()
    }
}

impl Observable {
    /// Builds the bump with a declared Lipschitz constant.
    pub fn new(center: f64, width: f64, lipschitz: f64) -> Result<Self> {
        if !(width > 0.0 && center > width) {
            return Err(Error::InvalidParameter(format!(
                "bump window ({center} ± {width}) must stay away from 0"
            )));
        }
        if !(lipschitz >= 0.0) {
            return Err(Error::InvalidParameter("Lipschitz constant must be nonnegative".into()));
        }
        Ok(Self { center, width, lipschitz })
    }

    /// Builds the bump and declares twice the largest difference quotient
    /// found on `pairs` random perturbations in dimension `d`.
    pub fn measured(center: f64, width: f64, d: usize, pairs: usize, seed: u64) -> Result<Self> {
        let raw = Self::new(center, width, 0.0)?;
        let lip = measure_lipschitz(&|y: &LatticePoint| raw.eval(y), d, pairs, seed)?;
        Self::new(center, width, 2.0 * lip)
    }

    pub fn eval(&self, x: &LatticePoint) -> f64 {
        let l1 = minima(x, 1).expect("first minimum of a valid lattice");
        bump((l1 - self.center) / self.width)
    }

    /// `sup |ψ| = e^{-1}`.
    pub fn sup(&self) -> f64 {
        (-1.0f64).exp()
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
}

/// Largest `|ψ(hy) − ψ(y)| / ‖h − I‖_F` over random lattices `y` and random
/// `h = exp(X)` with small traceless `X`.
pub fn measure_lipschitz<F>(psi: &F, d: usize, pairs: usize, seed: u64) -> Result<f64>
where
    F: Fn(&LatticePoint) -> f64 + Sync,
{
    if d < 2 {
        return Err(Error::InvalidParameter("dimension must be at least 2".into()));
    }
    let ratios: Vec<f64> = (0..pairs as u64)
        .into_par_iter()
        .map(|k| {
            let mut r = rng::stream(seed, k);
            // random point: a random diagonal flow of a random shear of Z^d
            let mut g = Matrix::identity(d, d);
            for i in 0..d {
                for j in i + 1..d {
                    g[(i, j)] = r.gen_range(-1.0..1.0);
                }
            }
            let mut logs: Vec<f64> = (0..d).map(|_| r.gen_range(-0.6..0.6)).collect();
            let mean = logs.iter().sum::<f64>() / d as f64;
            logs.iter_mut().for_each(|v| *v -= mean);
            for (i, v) in logs.iter().enumerate() {
                let mut row = g.row_mut(i);
                row *= v.exp();
            }
            let y = LatticePoint::normalized(g).expect("nonsingular").reduced();
            let scale = 10f64.powf(r.gen_range(-5.0..-2.0));
            let mut x = Matrix::from_fn(d, d, |_, _| r.gen_range(-1.0..1.0) * scale);
            let tr = x.trace() / d as f64;
            for i in 0..d {
                x[(i, i)] -= tr;
            }
            let h = x.exp();
            let dist = (&h - Matrix::identity(d, d)).norm();
            let hy = y.transformed(&h).expect("square");
            (psi(&hy) - psi(&y)).abs() / dist
        })
        .collect();
    Ok(ratios.iter().cloned().fold(0.0, f64::max))
}

fn check_axis(spec: &FlowSpec, axis: usize) -> Result<()> {
    if axis >= spec.chart_dim() {
        return Err(Error::InvalidParameter(format!(
            "axis {axis} out of range for a chart of dimension {}",
            spec.chart_dim()
        )));
    }
    Ok(())
}

fn shift(spec: &FlowSpec, s: f64, axis: usize) -> Result<Matrix> {
    let mut e = vec![0.0; spec.chart_dim()];
    e[axis] = s;
    spec.unipotent(&e)
}

/// `ψ(g_t u(w) x) − ψ(u(s e_axis) g_t u(w) x)`; `axis` counts from `0`.
#[allow(clippy::too_many_arguments)]
pub fn psi_shifted<F>(
    spec: &FlowSpec,
    x: &LatticePoint,
    psi: &F,
    s: f64,
    axis: usize,
    t: f64,
    w: &[f64],
) -> Result<f64>
where
    F: Fn(&LatticePoint) -> f64 + ?Sized,
{
    check_axis(spec, axis)?;
    let y = apply_flow(spec, x, t, w)?.reduced();
    let z = y.transformed(&shift(spec, s, axis)?)?;
    Ok(psi(&y) - psi(&z))
}

/// Midpoint nodes per axis resolving the scale `e^{-time·b_k}` with
/// `per_unit` nodes, and never fewer than `per_unit` per axis.
fn resolving_counts(spec: &FlowSpec, time: f64, per_unit: usize, length: f64) -> Vec<usize> {
    spec.weights()
        .iter()
        .map(|b| ((length * (time * b).exp() * per_unit as f64).ceil() as usize).max(per_unit))
        .collect()
}

fn midpoint(lo: &[f64], hi: &[f64], counts: &[usize], mut idx: usize) -> Vec<f64> {
    (0..lo.len())
        .map(|a| {
            let j = idx % counts[a];
            idx /= counts[a];
            lo[a] + (hi[a] - lo[a]) * (j as f64 + 0.5) / counts[a] as f64
        })
        .collect()
}

/// `∫_{I^m} ψ_t(w) ψ_l(w) dw` by a midpoint rule fine enough to resolve both
/// factors (`per_unit` nodes per oscillation scale `e^{-max(t,l)·b}`).
#[allow(clippy::too_many_arguments)]
pub fn correlation<F>(
    spec: &FlowSpec,
    x: &LatticePoint,
    psi: &F,
    s: f64,
    axis: usize,
    t: f64,
    l: f64,
    per_unit: usize,
) -> Result<f64>
where
    F: Fn(&LatticePoint) -> f64 + Sync,
{
    check_axis(spec, axis)?;
    if !(t > 0.0 && l > 0.0) {
        return Err(Error::InvalidParameter(format!("times must be positive: t = {t}, l = {l}")));
    }
    let m = spec.chart_dim();
    let counts = resolving_counts(spec, t.max(l), per_unit, 2.0);
    let total: usize = counts.iter().product();
    let (lo, hi) = (vec![-1.0; m], vec![1.0; m]);
    let h = shift(spec, s, axis)?;
    let values: Vec<f64> = (0..total)
        .into_par_iter()
        .map(|idx| -> Result<f64> {
            let w = midpoint(&lo, &hi, &counts, idx);
            let yt = apply_flow(spec, x, t, &w)?.reduced();
            let yl = apply_flow(spec, x, l, &w)?.reduced();
            let a = psi(&yt) - psi(&yt.transformed(&h)?);
            let b = psi(&yl) - psi(&yl.transformed(&h)?);
            Ok(a * b)
        })
        .collect::<Result<_>>()?;
    Ok(2f64.powi(m as i32) * values.iter().sum::<f64>() / total as f64)
}

/// `(1/|I(r)|) ∫_{I(r)} ψ_l(s_1) ds_1` over the window
/// `I(r) = [r − e^{-(l+t)b/2}, r + e^{-(l+t)b/2}]` of a one-dimensional chart.
#[allow(clippy::too_many_arguments)]
pub fn window_average<F>(
    spec: &FlowSpec,
    x: &LatticePoint,
    psi: &F,
    s: f64,
    t: f64,
    l: f64,
    r: f64,
    per_unit: usize,
) -> Result<f64>
where
    F: Fn(&LatticePoint) -> f64 + Sync,
{
    if spec.chart_dim() != 1 {
        return Err(Error::InvalidParameter("window averages need a one-dimensional chart".into()));
    }
    let b = spec.weights()[0];
    let half = (-(l + t) * b / 2.0).exp();
    let counts = resolving_counts(spec, l, per_unit, 2.0 * half);
    let h = shift(spec, s, 0)?;
    let values: Vec<f64> = (0..counts[0])
        .into_par_iter()
        .map(|idx| -> Result<f64> {
            let w = midpoint(&[r - half], &[r + half], &counts, idx);
            let y = apply_flow(spec, x, l, &w)?.reduced();
            Ok(psi(&y) - psi(&y.transformed(&h)?))
        })
        .collect::<Result<_>>()?;
    Ok(values.iter().sum::<f64>() / counts[0] as f64)
}

/// Time averages `(1/T) ∫_0^T ψ_τ(w) dτ` for several horizons along one orbit.
#[allow(clippy::too_many_arguments)]
pub fn birkhoff_profile<F>(
    spec: &FlowSpec,
    x: &LatticePoint,
    psi: &F,
    s: f64,
    axis: usize,
    w: &[f64],
    horizons: &[f64],
    dt: f64,
) -> Result<Vec<f64>>
where
    F: Fn(&LatticePoint) -> f64 + ?Sized,
{
    check_axis(spec, axis)?;
    if !(dt > 0.0) || horizons.iter().any(|h| !(*h > 0.0)) {
        return Err(Error::InvalidParameter("horizons and dt must be positive".into()));
    }
    let steps: Vec<usize> = horizons.iter().map(|h| ((h / dt).round() as usize).max(1)).collect();
    let total = *steps.iter().max().unwrap();
    let h = shift(spec, s, axis)?;
    let mut orbit = Trajectory::new(spec, x, w)?;
    let mut partial = Vec::with_capacity(total + 1);
    partial.push(0.0);
    let mut acc = 0.0;
    for i in 0..total {
        if i > 0 {
            orbit.advance(dt);
        }
        let y = orbit.lattice();
        acc += psi(&y) - psi(&y.transformed(&h)?);
        partial.push(acc);
    }
    Ok(steps.iter().map(|&k| partial[k] / k as f64).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Points dropped because the value was zero.
    pub dropped: usize,
    /// Every value was zero; reported as perfect decay.
    pub degenerate: bool,
}

/// Least squares of `log|corr|` against the gap.
pub fn decay_fit(values: &[(f64, f64)]) -> Result<DecayFit> {
    if values.len() < 4 {
        return Err(Error::InsufficientData(format!("{} gaps, at least 4 needed", values.len())));
    }
    let kept: Vec<(f64, f64)> =
        values.iter().filter(|(_, c)| c.abs() > 0.0).map(|(g, c)| (*g, c.abs().ln())).collect();
    let dropped = values.len() - kept.len();
    if kept.is_empty() {
        return Ok(DecayFit {
            slope: f64::NEG_INFINITY,
            intercept: f64::NEG_INFINITY,
            r2: 1.0,
            dropped,
            degenerate: true,
        });
    }
    let xs: Vec<f64> = kept.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = kept.iter().map(|p| p.1).collect();
    let fit = linear_fit(&xs, &ys)?;
    Ok(DecayFit { slope: fit.slope, intercept: fit.intercept, r2: fit.r2, dropped, degenerate: false })
}
