//! Writing a dominated vector as a nonnegative combination of a basis of
//! positive roots, no two of which sum to a root.

use num_traits::{Signed, Zero};

use super::exact::{self, dot, rat, RVec, Rational};
use super::{reduced_positive, strongly_orthogonal_among, Family, RootSystem};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Type A: partial sums along a path in the Dynkin diagram.
    Chain,
    /// A basis of pairwise strongly orthogonal roots.
    StronglyOrthogonal,
    /// Type D with odd rank.
    DOdd,
    /// Type E6: highest root, then nested connected components.
    E6,
}

impl Branch {
    pub fn name(&self) -> &'static str {
        match self {
            Branch::Chain => "chain",
            Branch::StronglyOrthogonal => "strongly-orthogonal",
            Branch::DOdd => "d-odd",
            Branch::E6 => "e6",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominatedDecomposition {
    pub alpha: RVec,
    pub betas: Vec<RVec>,
    pub coeffs: Vec<Rational>,
    pub branch: Branch,
}

/// Visiting order of a path diagram `0 - 1 - .. - n-1`: start at the largest
/// entry and repeatedly extend toward the larger neighbour. Ties go to the
/// lower index.
pub(crate) fn chain_order<T: PartialOrd + Copy>(a: &[T]) -> Vec<usize> {
    let n = a.len();
    let mut start = 0;
    for i in 1..n {
        if a[i] > a[start] {
            start = i;
        }
    }
    let (mut lo, mut hi) = (start, start);
    let mut order = vec![start];
    while order.len() < n {
        let left = lo.checked_sub(1);
        let right = (hi + 1 < n).then_some(hi + 1);
        let next = match (left, right) {
            (Some(l), Some(r)) => {
                if a[r] > a[l] {
                    r
                } else {
                    l
                }
            }
            (Some(l), None) => l,
            (None, Some(r)) => r,
            (None, None) => unreachable!(),
        };
        lo = lo.min(next);
        hi = hi.max(next);
        order.push(next);
    }
    order
}

fn failure(branch: Branch, detail: impl Into<String>) -> Error {
    Error::BranchFailure { branch: branch.name(), detail: detail.into() }
}

fn check_nonnegative(branch: Branch, c: &[Rational]) -> Result<()> {
    match c.iter().position(|x| x.is_negative()) {
        Some(i) => Err(failure(branch, format!("coefficient {i} is {}", exact::format(&c[i])))),
        None => Ok(()),
    }
}

fn decompose_chain(system: &RootSystem, a: &[Rational]) -> Result<(Vec<RVec>, RVec)> {
    let order = chain_order(a);
    let n = a.len();
    let mut coords = vec![Rational::zero(); n];
    let mut betas = Vec::with_capacity(n);
    let mut coeffs = Vec::with_capacity(n);
    for (k, &j) in order.iter().enumerate() {
        coords[j] = rat(1);
        betas.push(system.from_simple_coordinates(&coords));
        let next = order.get(k + 1).map_or(Rational::zero(), |&i| a[i]);
        coeffs.push(a[j] - next);
    }
    check_nonnegative(Branch::Chain, &coeffs)?;
    Ok((betas, coeffs))
}

fn decompose_strongly_orthogonal(system: &RootSystem, alpha: &[Rational]) -> Result<(Vec<RVec>, RVec)> {
    let candidates = if system.family() == Family::BC { reduced_positive(system) } else { system.positive().to_vec() };
    let betas = strongly_orthogonal_among(system, &candidates, system.rank()).ok_or_else(|| {
        failure(Branch::StronglyOrthogonal, format!("no strongly orthogonal basis in {}", system.name()))
    })?;
    for i in 0..betas.len() {
        for j in i + 1..betas.len() {
            if !dot(&betas[i], &betas[j]).is_zero() {
                return Err(failure(Branch::StronglyOrthogonal, "strongly orthogonal roots are not orthogonal"));
            }
        }
    }
    let coeffs: RVec = betas.iter().map(|b| dot(alpha, b) / dot(b, b)).collect();
    check_nonnegative(Branch::StronglyOrthogonal, &coeffs)?;
    Ok((betas, coeffs))
}

fn decompose_d_odd(system: &RootSystem, a: &[Rational]) -> Result<(Vec<RVec>, RVec)> {
    let br = Branch::DOdd;
    let n = a.len();
    // swap the fork nodes so that a_{n-1} ≥ a_n
    let mut sigma: Vec<usize> = (0..n).collect();
    if a[n - 2] < a[n - 1] {
        sigma.swap(n - 2, n - 1);
    }
    let av: RVec = sigma.iter().map(|&k| a[k]).collect();
    let root = |coef: &[Rational]| -> RVec {
        let mut c = vec![Rational::zero(); n];
        for (k, x) in coef.iter().enumerate() {
            c[sigma[k]] = *x;
        }
        system.from_simple_coordinates(&c)
    };
    let at = |k: usize| -> Rational { if k == 0 { Rational::zero() } else { av[k - 1] } };
    let mut betas = Vec::with_capacity(n);
    let mut coeffs = Vec::with_capacity(n);
    for i in 1..=(n - 3) / 2 {
        let mut odd = vec![Rational::zero(); n];
        odd[2 * i - 2] = rat(1);
        let mut even = odd.clone();
        for x in even.iter_mut().take(n - 2).skip(2 * i - 1) {
            *x = rat(2);
        }
        even[n - 2] = rat(1);
        even[n - 1] = rat(1);
        let c_even = (at(2 * i) - at(2 * i - 2)) / rat(2);
        let c_odd = at(2 * i - 1) - (at(2 * i) + at(2 * i - 2)) / rat(2);
        betas.push(root(&odd));
        coeffs.push(c_odd);
        betas.push(root(&even));
        coeffs.push(c_even);
    }
    let b_n2 = at(n - 2) - at(n - 3);
    let b_n1 = at(n - 1) - at(n - 3) / rat(2);
    let b_n = at(n) - at(n - 3) / rat(2);
    let mut tail = |coef: [i64; 3]| {
        let mut c = vec![Rational::zero(); n];
        c[n - 3] = rat(coef[0]);
        c[n - 2] = rat(coef[1]);
        c[n - 1] = rat(coef[2]);
        betas.push(root(&c));
    };
    tail([1, 1, 1]);
    tail([1, 1, 0]);
    if b_n2 >= b_n1 {
        tail([1, 0, 0]);
        coeffs.extend([b_n, b_n1 - b_n, b_n2 - b_n1]);
    } else {
        tail([0, 1, 0]);
        coeffs.extend([b_n, b_n2 - b_n, b_n1 - b_n2]);
    }
    check_nonnegative(br, &coeffs)?;
    Ok((betas, coeffs))
}

/// Simple-root indices of E6 adjacent along the path `1 - 3 - 4 - 5 - 6`
/// (zero-based), i.e. the diagram without the branch node `2`.
fn e6_path_adjacent(i: usize, j: usize) -> bool {
    const EDGES: [(usize, usize); 4] = [(0, 2), (2, 3), (3, 4), (4, 5)];
    EDGES.iter().any(|&(p, q)| (p, q) == (i, j) || (q, p) == (i, j))
}

fn components(alive: &[usize]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; alive.len()];
    let mut out = Vec::new();
    for s in 0..alive.len() {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut comp = vec![alive[s]];
        let mut k = 0;
        while k < comp.len() {
            for t in 0..alive.len() {
                if !seen[t] && e6_path_adjacent(comp[k], alive[t]) {
                    seen[t] = true;
                    comp.push(alive[t]);
                }
            }
            k += 1;
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out.sort();
    out
}

fn decompose_e6(system: &RootSystem, a: &[Rational]) -> Result<(Vec<RVec>, RVec)> {
    let br = Branch::E6;
    let mut betas = Vec::with_capacity(6);
    let mut coeffs = Vec::with_capacity(6);
    let mut r = a.to_vec();
    let mut take = |coords: RVec, c: Rational, r: &mut RVec| -> Result<()> {
        for (x, y) in r.iter_mut().zip(&coords) {
            *x -= c * y;
        }
        if let Some(k) = r.iter().position(|x| x.is_negative()) {
            return Err(failure(br, format!("residual coefficient of simple root {} is negative", k + 1)));
        }
        betas.push(system.from_simple_coordinates(&coords));
        coeffs.push(c);
        Ok(())
    };
    let highest: RVec = [1, 2, 2, 3, 2, 1].iter().map(|&x| rat(x)).collect();
    let c1 = a[1] / rat(2);
    take(highest, c1, &mut r)?;
    let path = [0usize, 2, 3, 4, 5];
    let mut argmin = path[0];
    for &k in &path[1..] {
        if r[k] < r[argmin] {
            argmin = k;
        }
    }
    let mut coords = vec![Rational::zero(); 6];
    for &k in &path {
        coords[k] = rat(1);
    }
    let c2 = r[argmin];
    take(coords, c2, &mut r)?;
    let mut alive: Vec<usize> = path.iter().copied().filter(|&k| k != argmin).collect();
    while !alive.is_empty() {
        let comps = components(&alive);
        for comp in comps {
            let mut low = comp[0];
            for &k in &comp[1..] {
                if r[k] < r[low] {
                    low = k;
                }
            }
            let c = r[low];
            let mut coords = vec![Rational::zero(); 6];
            for &k in &comp {
                coords[k] = rat(1);
            }
            take(coords, c, &mut r)?;
            alive.retain(|&k| k != low);
        }
    }
    if !exact::is_zero(&r) {
        return Err(failure(br, "nonzero residual after all components"));
    }
    Ok((betas, coeffs))
}

/// Decomposes a dominated `alpha` (ambient coordinates) as `Σ c_i β_i` with
/// `c_i ≥ 0`, `β_i` a basis of positive roots and `β_i + β_j` never a root.
pub fn decompose_dominated(system: &RootSystem, alpha: &[Rational]) -> Result<DominatedDecomposition> {
    if alpha.len() != system.ambient() {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} for ambient dimension {}",
            alpha.len(),
            system.ambient()
        )));
    }
    let a = system
        .simple_coordinates(alpha)
        .ok_or_else(|| Error::InvalidParameter("vector is not in the span of the roots".into()))?;
    if let Some(b) = system.dominance_violation(alpha) {
        return Err(Error::NotDominated(format!(
            "<alpha, beta> < 0 for beta = ({})",
            b.iter().map(exact::format).collect::<Vec<_>>().join(", ")
        )));
    }
    let (branch, (betas, coeffs)) = match system.family() {
        Family::A => (Branch::Chain, decompose_chain(system, &a)?),
        Family::D if system.rank() % 2 == 1 => (Branch::DOdd, decompose_d_odd(system, &a)?),
        Family::E if system.rank() == 6 => (Branch::E6, decompose_e6(system, &a)?),
        _ => (Branch::StronglyOrthogonal, decompose_strongly_orthogonal(system, alpha)?),
    };
    let dec = DominatedDecomposition { alpha: alpha.to_vec(), betas, coeffs, branch };
    let check = verify_decomposition(system, &dec);
    if !check.passed() {
        return Err(failure(branch, check.failures.join("; ")));
    }
    Ok(dec)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verification {
    pub failures: Vec<String>,
}

impl Verification {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn show(v: &[Rational]) -> String {
    format!("({})", v.iter().map(exact::format).collect::<Vec<_>>().join(", "))
}

/// Checks every property of a decomposition exactly.
pub fn verify_decomposition(system: &RootSystem, dec: &DominatedDecomposition) -> Verification {
    let mut failures = Vec::new();
    let n = system.rank();
    if dec.betas.len() != n || dec.coeffs.len() != n {
        failures.push(format!(
            "expected {n} roots and coefficients, got {} and {}",
            dec.betas.len(),
            dec.coeffs.len()
        ));
        return Verification { failures };
    }
    if dec.betas.iter().chain([&dec.alpha]).any(|v| v.len() != system.ambient()) {
        failures.push("vector length differs from the ambient dimension".into());
        return Verification { failures };
    }
    for b in &dec.betas {
        if !system.is_positive(b) {
            failures.push(format!("{} is not a positive root", show(b)));
        }
    }
    if exact::rank(&dec.betas) != n {
        failures.push("roots are linearly dependent".into());
    }
    if exact::combination(&dec.coeffs, &dec.betas) != dec.alpha {
        failures.push("alpha differs from the combination".into());
    }
    for (i, c) in dec.coeffs.iter().enumerate() {
        if c.is_negative() {
            failures.push(format!("coefficient {i} = {} is negative", exact::format(c)));
        }
    }
    for i in 0..n {
        for j in i..n {
            let s = exact::add(&dec.betas[i], &dec.betas[j]);
            if system.contains(&s) {
                failures.push(format!("beta_{i} + beta_{j} = {} is a root", show(&s)));
            }
        }
    }
    Verification { failures }
}

/// Exhaustive search: some `rank`-subset of positive roots is linearly
/// independent, pairwise non-summable (including with itself) and carries
/// `alpha` with nonnegative coefficients.
pub fn brute_force_feasible(system: &RootSystem, alpha: &[Rational]) -> bool {
    fn go(system: &RootSystem, alpha: &[Rational], start: usize, chosen: &mut Vec<RVec>) -> bool {
        let pos = system.positive();
        if chosen.len() == system.rank() {
            return exact::rank(chosen) == system.rank()
                && exact::coordinates(chosen, alpha).is_some_and(|c| c.iter().all(|x| !x.is_negative()));
        }
        for (i, b) in pos.iter().enumerate().skip(start) {
            if system.contains(&exact::scale(rat(2), b)) {
                continue;
            }
            if chosen.iter().any(|c| system.contains(&exact::add(c, b))) {
                continue;
            }
            chosen.push(b.clone());
            if go(system, alpha, i + 1, chosen) {
                return true;
            }
            chosen.pop();
        }
        false
    }
    go(system, alpha, 0, &mut Vec::new())
}
