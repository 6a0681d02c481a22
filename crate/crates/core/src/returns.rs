//! Nested box partitions of `I^m`, return times to height sublevels,
//! occupation statistics and the shadowing inequality.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::height::{alpha, HeightParams};
use crate::homspace::{apply_flow, minima, FlowSpec, LatticePoint, Trajectory};

/// A level-`n` box of the nested partition of `I^m` along the flow.
///
/// On each axis the level-`k` box is cut into cells of side `e^{-k·t·b_i}`
/// starting from its left end; the last cell absorbs the remainder and is
/// shorter than two sides. Cells are recorded by their digit on each level,
/// so nesting and equality are exact. The position of the defining point
/// inside the box is tracked in units of the current side, which keeps the
/// offset meaningful long after the side itself underflows.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxIndex {
    level: usize,
    growth: Vec<f64>,
    digits: Vec<Vec<u64>>,
    offset: Vec<f64>,
    length: Vec<f64>,
}

impl BoxIndex {
    fn root(spec: &FlowSpec, t: f64, w: &[f64]) -> Self {
        BoxIndex {
            level: 0,
            growth: spec.weights().iter().map(|b| (t * b).exp()).collect(),
            digits: vec![Vec::new(); w.len()],
            offset: w.iter().map(|x| x + 1.0).collect(),
            length: vec![2.0; w.len()],
        }
    }

    /// Descends one level towards the defining point.
    fn refine(&mut self) {
        for a in 0..self.growth.len() {
            let g = self.growth[a];
            let u = self.offset[a] * g;
            let cells = ((self.length[a] * g).floor() as u64).max(1);
            let k = (u.floor().max(0.0) as u64).min(cells - 1);
            self.offset[a] = u - k as f64;
            self.length[a] = if k == cells - 1 { self.length[a] * g - k as f64 } else { 1.0 };
            self.digits[a].push(k);
        }
        self.level += 1;
    }

    pub fn level(&self) -> usize {
        self.level
    }

    /// Cell digits per axis, one per level.
    pub fn digits(&self) -> &[Vec<u64>] {
        &self.digits
    }

    /// Side `e^{-n·t·b_i}` per axis (zero once it underflows).
    pub fn sides(&self) -> Vec<f64> {
        self.growth.iter().map(|g| g.powi(-(self.level as i32))).collect()
    }

    /// Offset of the defining point from the lower corner, in units of the side.
    pub fn relative_offset(&self) -> &[f64] {
        &self.offset
    }

    /// Length of the box in units of the side; in `[1, 2)` for `n ≥ 1`.
    pub fn relative_length(&self) -> &[f64] {
        &self.length
    }

    /// Lower corner, accurate to absolute rounding error.
    pub fn lower(&self) -> Vec<f64> {
        (0..self.growth.len())
            .map(|a| {
                let mut lo = -1.0;
                let mut side = 1.0;
                for &k in &self.digits[a] {
                    side /= self.growth[a];
                    lo += k as f64 * side;
                }
                lo
            })
            .collect()
    }

    /// Upper corner; the last cell of each level ends exactly at `1`.
    pub fn upper(&self) -> Vec<f64> {
        let sides = self.sides();
        self.lower()
            .iter()
            .enumerate()
            .map(|(a, lo)| if self.level == 0 { 1.0 } else { (lo + self.length[a] * sides[a]).min(1.0) })
            .collect()
    }

    /// True when `other` is this box or one of its sub-boxes.
    pub fn contains_box(&self, other: &BoxIndex) -> bool {
        other.level >= self.level
            && self
                .digits
                .iter()
                .zip(&other.digits)
                .all(|(a, b)| b.len() >= a.len() && a[..] == b[..a.len()])
    }

    /// Same level and same digits.
    pub fn same_box(&self, other: &BoxIndex) -> bool {
        self.level == other.level && self.digits == other.digits
    }
}

fn check_point(spec: &FlowSpec, w: &[f64]) -> Result<()> {
    if w.len() != spec.chart_dim() {
        return Err(Error::DimensionMismatch(format!(
            "chart point has {} coordinates, expected {}",
            w.len(),
            spec.chart_dim()
        )));
    }
    if w.iter().any(|x| !(-1.0..=1.0).contains(x)) {
        return Err(Error::OutsideBox(format!("{w:?}")));
    }
    Ok(())
}

/// The level-`n` box of the partition at step `t` that contains `w`.
pub fn box_of(spec: &FlowSpec, t: f64, n: usize, w: &[f64]) -> Result<BoxIndex> {
    check_point(spec, w)?;
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("step t = {t} must be positive")));
    }
    let mut b = BoxIndex::root(spec, t, w);
    for _ in 0..n {
        b.refine();
    }
    Ok(b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReturnTrace {
    pub w: Vec<f64>,
    pub t: f64,
    pub l0: f64,
    pub horizon: u64,
    /// Return indices, starting with `0`.
    pub sigma: Vec<u64>,
}

impl ReturnTrace {
    /// Completed gaps `σ_i - σ_{i-1}`.
    pub fn gaps(&self) -> Vec<u64> {
        self.sigma.windows(2).map(|p| p[1] - p[0]).collect()
    }

    /// Lower bound on the open gap after the last return, if the horizon cut it.
    pub fn censored_gap(&self) -> Option<u64> {
        let last = *self.sigma.last().expect("sigma starts at 0");
        (last < self.horizon).then(|| self.horizon - last)
    }
}

/// Return indices of `w` to `{α ≤ l0}` along `g_{nt} u(w) x`, `n ≤ horizon`.
///
/// Index `n` counts as a return when the lower corner `w_1` of the level-`n`
/// box of `w` satisfies `α(g_{nt} u(w_1) x) ≤ slack·l0`. The corner lattice
/// is `u(ξ) g_{nt} u(w) x` with `ξ = (w_1 - w)·e^{ntb} ∈ (-2, 0]`, which is
/// evaluated from the running orbit and the box's relative offset, so no
/// quantity of size `e^{ntb}` ever appears.
#[allow(clippy::too_many_arguments)]
pub fn return_times(
    spec: &FlowSpec,
    params: &HeightParams,
    x: &LatticePoint,
    t: f64,
    l0: f64,
    slack: f64,
    horizon: u64,
    w: &[f64],
) -> Result<ReturnTrace> {
    check_point(spec, w)?;
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("step t = {t} must be positive")));
    }
    if !(slack >= 1.0) {
        return Err(Error::InvalidParameter(format!("slack {slack} must be at least 1")));
    }
    let ax = alpha(params, x)?;
    if ax > l0 {
        return Err(Error::Precondition(format!("alpha(x) = {ax} exceeds l0 = {l0}")));
    }
    let mut orbit = Trajectory::new(spec, x, w)?;
    let mut cell = BoxIndex::root(spec, t, w);
    let mut sigma = vec![0u64];
    let threshold = slack * l0;
    for n in 1..=horizon {
        orbit.advance(t);
        cell.refine();
        let xi: Vec<f64> = cell.relative_offset().iter().map(|f| -f).collect();
        let corner = orbit.lattice().transformed(&spec.unipotent(&xi)?)?;
        if alpha(params, &corner)? <= threshold {
            sigma.push(n);
        }
    }
    Ok(ReturnTrace { w: w.to_vec(), t, l0, horizon, sigma })
}

/// One row of an empirical tail table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailRow {
    pub q: u64,
    /// Number of gaps `≥ q`.
    pub count: u64,
    pub total: u64,
    pub tail: f64,
}

/// Empirical `P(gap ≥ q)` for `q = 1, .., max gap + 1`.
pub fn gap_tail(gaps: &[u64]) -> Result<Vec<TailRow>> {
    if gaps.is_empty() {
        return Err(Error::InsufficientData("no gaps".into()));
    }
    let total = gaps.len() as u64;
    let max = *gaps.iter().max().unwrap();
    let mut hist = vec![0u64; max as usize + 2];
    for &g in gaps {
        hist[g as usize] += 1;
    }
    let mut rows = Vec::with_capacity(max as usize + 1);
    let mut at_least = total;
    for q in 1..=max + 1 {
        at_least -= hist[q as usize - 1];
        rows.push(TailRow { q, count: at_least, total, tail: at_least as f64 / total as f64 });
    }
    Ok(rows)
}

/// Pooled tail of the completed gaps of many traces. Censored gaps are left out.
pub fn gap_statistics(traces: &[ReturnTrace]) -> Result<Vec<TailRow>> {
    let gaps: Vec<u64> = traces.iter().flat_map(|tr| tr.gaps()).collect();
    if gaps.len() < 100 {
        return Err(Error::InsufficientData(format!(
            "{} uncensored gaps, at least 100 needed",
            gaps.len()
        )));
    }
    gap_tail(&gaps)
}

/// A set of lattices given by a membership test.
pub trait Region: Sync {
    fn contains(&self, x: &LatticePoint) -> Result<bool>;
}

pub struct Everything;

impl Region for Everything {
    fn contains(&self, _: &LatticePoint) -> Result<bool> {
        Ok(true)
    }
}

pub struct Nowhere;

impl Region for Nowhere {
    fn contains(&self, _: &LatticePoint) -> Result<bool> {
        Ok(false)
    }
}

/// `{α_ε ≤ level}`.
pub struct HeightSublevel {
    pub params: HeightParams,
    pub level: f64,
}

impl Region for HeightSublevel {
    fn contains(&self, x: &LatticePoint) -> Result<bool> {
        Ok(alpha(&self.params, x)? <= self.level)
    }
}

/// `{λ_1 < radius}`.
pub struct ShortVectorBelow {
    pub radius: f64,
}

impl Region for ShortVectorBelow {
    fn contains(&self, x: &LatticePoint) -> Result<bool> {
        Ok(minima(x, 1)? < self.radius)
    }
}

/// Fraction of `i = 0, .., n-1` with `g_{it} u(w) x ∈ K`.
pub fn occupancy_discrete<K: Region + ?Sized>(
    spec: &FlowSpec,
    x: &LatticePoint,
    t: f64,
    k: &K,
    n: usize,
    w: &[f64],
) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("occupancy needs n ≥ 1".into()));
    }
    let mut orbit = Trajectory::new(spec, x, w)?;
    let mut inside = 0usize;
    for i in 0..n {
        if i > 0 {
            orbit.advance(t);
        }
        if k.contains(&orbit.lattice())? {
            inside += 1;
        }
    }
    Ok(inside as f64 / n as f64)
}

/// Left Riemann sum for `(1/T) ∫_0^T 1_K(g_s u(w) x) ds` with step `dt`.
pub fn occupancy_continuous<K: Region + ?Sized>(
    spec: &FlowSpec,
    x: &LatticePoint,
    horizon: f64,
    k: &K,
    w: &[f64],
    dt: f64,
) -> Result<f64> {
    Ok(occupancy_profile(spec, x, &[horizon], k, w, dt)?[0])
}

/// Occupation fractions for several horizons from a single orbit.
pub fn occupancy_profile<K: Region + ?Sized>(
    spec: &FlowSpec,
    x: &LatticePoint,
    horizons: &[f64],
    k: &K,
    w: &[f64],
    dt: f64,
) -> Result<Vec<f64>> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("step dt = {dt} must be positive")));
    }
    if horizons.iter().any(|h| !(*h > 0.0)) {
        return Err(Error::InvalidParameter("horizons must be positive".into()));
    }
    let steps: Vec<usize> = horizons.iter().map(|h| ((h / dt).round() as usize).max(1)).collect();
    let total = *steps.iter().max().unwrap();
    let mut orbit = Trajectory::new(spec, x, w)?;
    let mut cumulative = Vec::with_capacity(total + 1);
    cumulative.push(0usize);
    let mut inside = 0usize;
    for i in 0..total {
        if i > 0 {
            orbit.advance(dt);
        }
        if k.contains(&orbit.lattice())? {
            inside += 1;
        }
        cumulative.push(inside);
    }
    Ok(steps.iter().map(|&s| cumulative[s] as f64 / s as f64).collect())
}

/// Both sides of the shadowing inequality on the box `J = [lo, hi]`:
/// `∫_J ψ(g_{(n+1)t} u(w) x) dw` and
/// `∫_J ∫_{I^m} ψ(g_t u(w_1) g_{nt} u(w) x) dw_1 dw`.
///
/// Midpoint rules are refined so that each axis gets at least `per_unit`
/// nodes per unit of the oscillation scale `e^{-(n+1)t b_i}`.
#[allow(clippy::too_many_arguments)]
pub fn shadowing_check<F>(
    spec: &FlowSpec,
    x: &LatticePoint,
    t: f64,
    n: usize,
    lo: &[f64],
    hi: &[f64],
    psi: &F,
    per_unit: usize,
) -> Result<(f64, f64)>
where
    F: Fn(&LatticePoint) -> f64 + Sync,
{
    let m = spec.chart_dim();
    if lo.len() != m || hi.len() != m {
        return Err(Error::DimensionMismatch("box corners must have m·n coordinates".into()));
    }
    let growth: Vec<f64> = spec.weights().iter().map(|b| (t * b).exp()).collect();
    for a in 0..m {
        let need = growth[a].powi(-(n as i32));
        if hi[a] - lo[a] < need * (1.0 - 1e-12) {
            return Err(Error::BoxTooSmall(format!(
                "axis {a} has length {} < e^(-n t b) = {need}",
                hi[a] - lo[a]
            )));
        }
        if lo[a] < -1.0 || hi[a] > 1.0 {
            return Err(Error::OutsideBox(format!("box [{lo:?}, {hi:?}]")));
        }
    }
    let outer_nodes = |a: usize| -> usize {
        let scale = growth[a].powi(n as i32 + 1);
        ((hi[a] - lo[a]) * scale * per_unit as f64).ceil().max(per_unit as f64) as usize
    };
    let outer = tensor_midpoints(lo, hi, &(0..m).map(outer_nodes).collect::<Vec<_>>());
    let inner_counts: Vec<usize> =
        (0..m).map(|a| (2.0 * growth[a] * per_unit as f64).ceil() as usize).collect();
    let (ilo, ihi) = crate::quadrature::unit_box(m);
    let inner = tensor_midpoints(&ilo, &ihi, &inner_counts);
    let cell: f64 = (0..m).map(|a| (hi[a] - lo[a]) / outer_nodes(a) as f64).product();
    let inner_cell: f64 = inner_counts.iter().map(|c| 2.0 / *c as f64).product();

    let pairs: Vec<(f64, f64)> = outer
        .par_iter()
        .map(|w| -> Result<(f64, f64)> {
            let left = psi(&apply_flow(spec, x, (n as f64 + 1.0) * t, w)?);
            let y = apply_flow(spec, x, n as f64 * t, w)?.reduced();
            let mut right = 0.0;
            for w1 in &inner {
                right += psi(&apply_flow(spec, &y, t, w1)?);
            }
            Ok((left, right * inner_cell))
        })
        .collect::<Result<_>>()?;
    let lhs = pairs.iter().map(|p| p.0).sum::<f64>() * cell;
    let rhs = pairs.iter().map(|p| p.1).sum::<f64>() * cell;
    Ok((lhs, rhs))
}

fn tensor_midpoints(lo: &[f64], hi: &[f64], counts: &[usize]) -> Vec<Vec<f64>> {
    let total: usize = counts.iter().product();
    (0..total)
        .map(|mut idx| {
            (0..lo.len())
                .map(|a| {
                    let j = idx % counts[a];
                    idx /= counts[a];
                    lo[a] + (hi[a] - lo[a]) * (j as f64 + 0.5) / counts[a] as f64
                })
                .collect()
        })
        .collect()
}

/// Constants turning a discrete tail `2^m a0^n` into a continuous tail `C a^T`:
/// `a = a0^{1/t}`, `C = 2^m / a0`, `T0 = 2t / eps0`.
pub fn tail_to_continuous(a0: f64, t: f64, m: usize, eps0: f64) -> Result<(f64, f64, f64)> {
    if !(a0 > 0.0 && a0 < 1.0) {
        return Err(Error::InvalidParameter(format!("a0 = {a0} is not in (0, 1)")));
    }
    if !(eps0 > 0.0 && eps0 < 0.5) {
        return Err(Error::InvalidParameter(format!("eps0 = {eps0} is not in (0, 1/2)")));
    }
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("t = {t} must be positive")));
    }
    Ok((a0.powf(1.0 / t), 2f64.powi(m as i32) / a0, 2.0 * t / eps0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::height::make_height_params;
    use crate::homspace::make_flow;

    fn flow2() -> FlowSpec {
        make_flow(&[1.0], &[1.0]).unwrap()
    }

    #[test]
    fn level_zero_is_everything() {
        let b = box_of(&flow2(), 1.0, 0, &[0.3]).unwrap();
        assert_eq!(b.lower(), vec![-1.0]);
        assert_eq!(b.upper(), vec![1.0]);
    }

    #[test]
    fn explicit_boxes() {
        let t = 4f64.ln() / 2.0;
        let b = box_of(&flow2(), t, 1, &[0.0]).unwrap();
        assert_eq!(b.digits()[0], vec![4]);
        assert!((b.lower()[0] - 0.0).abs() < 1e-15);
        assert!((b.upper()[0] - 0.25).abs() < 1e-15);
        let c = box_of(&flow2(), t, 2, &[0.1]).unwrap();
        assert!((c.lower()[0] - 0.0625).abs() < 1e-15);
        assert!((c.upper()[0] - 0.125).abs() < 1e-15);
    }

    #[test]
    fn last_cell_absorbs() {
        // sides 0.3: cells [-1,-0.7), .., [0.5, 1] with the last of length 0.5
        let t = (1.0f64 / 0.3).ln() / 2.0;
        let b = box_of(&flow2(), t, 1, &[1.0]).unwrap();
        assert!((b.lower()[0] - 0.5).abs() < 1e-12);
        assert!((b.upper()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn outside_point_rejected() {
        assert!(matches!(box_of(&flow2(), 1.0, 1, &[1.5]), Err(Error::OutsideBox(_))));
    }

    #[test]
    fn empty_horizon() {
        let spec = flow2();
        let p = make_height_params(&spec, 0.1).unwrap();
        let x = LatticePoint::standard(2);
        let tr = return_times(&spec, &p, &x, 2.0, 0.2, 1.0, 0, &[0.0]).unwrap();
        assert_eq!(tr.sigma, vec![0]);
        assert!(matches!(
            return_times(&spec, &p, &x, 2.0, 0.05, 1.0, 3, &[0.0]),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn always_inside() {
        let spec = flow2();
        let p = make_height_params(&spec, 0.1).unwrap();
        let x = LatticePoint::standard(2);
        let tr = return_times(&spec, &p, &x, 1.0, 1e9, 1.0, 6, &[0.2]).unwrap();
        assert_eq!(tr.sigma, (0..=6).collect::<Vec<u64>>());
        assert_eq!(tr.censored_gap(), None);
    }

    #[test]
    fn tails() {
        let rows = gap_tail(&[1, 1, 1, 1]).unwrap();
        assert_eq!(rows[0].tail, 1.0);
        assert_eq!(rows[1].tail, 0.0);
    }

    #[test]
    fn trivial_regions() {
        let spec = flow2();
        let x = LatticePoint::standard(2);
        assert_eq!(occupancy_discrete(&spec, &x, 1.0, &Everything, 5, &[0.1]).unwrap(), 1.0);
        assert_eq!(occupancy_discrete(&spec, &x, 1.0, &Nowhere, 5, &[0.1]).unwrap(), 0.0);
        assert_eq!(occupancy_continuous(&spec, &x, 2.0, &Everything, &[0.1], 0.01).unwrap(), 1.0);
        assert_eq!(occupancy_continuous(&spec, &x, 2.0, &Nowhere, &[0.1], 0.01).unwrap(), 0.0);
    }

    #[test]
    fn continuous_tail_constants() {
        let (a, c, t0) = tail_to_continuous(0.5, 1.0, 1, 0.25).unwrap();
        assert_eq!((a, c, t0), (0.5, 4.0, 8.0));
        let (a, _, _) = tail_to_continuous(0.25, 2.0, 1, 0.25).unwrap();
        assert!((a - 0.5).abs() < 1e-15);
        let (_, _, t0) = tail_to_continuous(0.5, 3.0, 2, 0.5 - 1e-12).unwrap();
        assert!((t0 - 12.0).abs() < 1e-9);
        assert!(tail_to_continuous(1.0, 1.0, 1, 0.25).is_err());
        assert!(tail_to_continuous(0.5, 1.0, 1, 0.5).is_err());
    }

    #[test]
    fn constant_observables() {
        let spec = flow2();
        let x = LatticePoint::standard(2);
        let (l, r) = shadowing_check(&spec, &x, 1.0, 1, &[-0.5], &[0.0], &|_| 1.0, 8).unwrap();
        assert!((l - 0.5).abs() < 1e-12);
        assert!((r - 1.0).abs() < 1e-12);
        let (l, r) = shadowing_check(&spec, &x, 1.0, 1, &[-0.5], &[0.0], &|_| 0.0, 8).unwrap();
        assert_eq!((l, r), (0.0, 0.0));
        assert!(matches!(
            shadowing_check(&spec, &x, 1.0, 2, &[0.0], &[0.01], &|_| 1.0, 8),
            Err(Error::BoxTooSmall(_))
        ));
    }
}
