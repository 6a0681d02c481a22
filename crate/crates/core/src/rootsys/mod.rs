//! Root systems in orthonormal coordinates, decompositions of dominated
//! vectors into mutually non-summable positive roots, and expanding abelian
//! subalgebras of `sl_d`.

mod decompose;
pub mod exact;
mod expanding;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use exact::{dot, half, rat, RVec, Rational};

pub use decompose::{
    brute_force_feasible, decompose_dominated, verify_decomposition, Branch, DominatedDecomposition,
    Verification,
};
pub use expanding::{
    adjoint_operators, bracket_closure, build_expanding, check_construction, check_in_sl, expanding_check,
    killing_form, ExpandingConstruction, ExpandingVerdict,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    A,
    B,
    C,
    D,
    E,
    F,
    G,
    /// The nonreduced family.
    BC,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Family::A => "A",
            Family::B => "B",
            Family::C => "C",
            Family::D => "D",
            Family::E => "E",
            Family::F => "F",
            Family::G => "G",
            Family::BC => "BC",
        };
        f.write_str(s)
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_uppercase().as_str() {
            "A" => Family::A,
            "B" => Family::B,
            "C" => Family::C,
            "D" => Family::D,
            "E" => Family::E,
            "F" => Family::F,
            "G" => Family::G,
            "BC" => Family::BC,
            other => return Err(Error::InvalidParameter(format!("unknown root system family {other:?}"))),
        })
    }
}

/// Largest rank accepted by [`build_root_system`].
pub const MAX_RANK: usize = 16;

pub fn admissible(family: Family, rank: usize) -> bool {
    match family {
        Family::A | Family::BC => (1..=MAX_RANK).contains(&rank),
        Family::B | Family::C => (2..=MAX_RANK).contains(&rank),
        Family::D => (3..=MAX_RANK).contains(&rank),
        Family::E => (6..=8).contains(&rank),
        Family::F => rank == 4,
        Family::G => rank == 2,
    }
}

/// Every admissible `(family, rank)` with rank at most `max_rank`.
pub fn admissible_systems(max_rank: usize) -> Vec<(Family, usize)> {
    let families = [Family::A, Family::B, Family::C, Family::D, Family::E, Family::F, Family::G, Family::BC];
    families
        .iter()
        .flat_map(|&f| (1..=max_rank.min(MAX_RANK)).filter(move |&r| admissible(f, r)).map(move |r| (f, r)))
        .collect()
}

#[derive(Debug, Clone)]
pub struct RootSystem {
    family: Family,
    rank: usize,
    ambient: usize,
    roots: Vec<RVec>,
    lookup: HashSet<RVec>,
    simple: Vec<RVec>,
    positive: Vec<RVec>,
    cartan: Vec<Vec<i64>>,
    gram_inverse: Vec<RVec>,
}

fn unit(n: usize, i: usize, c: Rational) -> RVec {
    let mut v = vec![Rational::zero(); n];
    v[i] = c;
    v
}

fn pm_pairs(n: usize) -> Vec<RVec> {
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for (si, sj) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
                let mut v = vec![Rational::zero(); n];
                v[i] = rat(si);
                v[j] = rat(sj);
                out.push(v);
            }
        }
    }
    out
}

fn chain_simple(n: usize, count: usize) -> Vec<RVec> {
    (0..count)
        .map(|i| {
            let mut v = unit(n, i, rat(1));
            v[i + 1] = rat(-1);
            v
        })
        .collect()
}

fn half_spin(n: usize, parity: Option<usize>) -> Vec<RVec> {
    (0..1usize << n)
        .filter(|mask| parity.is_none_or(|p| mask.count_ones() as usize % 2 == p))
        .map(|mask| (0..n).map(|i| if mask >> i & 1 == 1 { half(-1) } else { half(1) }).collect())
        .collect()
}

fn e8_roots() -> Vec<RVec> {
    let mut roots = pm_pairs(8);
    roots.extend(half_spin(8, Some(0)));
    roots
}

fn e8_simple() -> Vec<RVec> {
    let mut a1: RVec = vec![half(-1); 8];
    a1[0] = half(1);
    a1[7] = half(1);
    let mut a2 = vec![Rational::zero(); 8];
    a2[0] = rat(1);
    a2[1] = rat(1);
    let mut simple = vec![a1, a2];
    for i in 0..6 {
        let mut v = unit(8, i + 1, rat(1));
        v[i] = rat(-1);
        simple.push(v);
    }
    simple
}

impl RootSystem {
    pub fn family(&self) -> Family {
        self.family
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn name(&self) -> String {
        format!("{}{}", self.family, self.rank)
    }

    pub fn roots(&self) -> &[RVec] {
        &self.roots
    }

    pub fn simple(&self) -> &[RVec] {
        &self.simple
    }

    pub fn positive(&self) -> &[RVec] {
        &self.positive
    }

    pub fn cartan(&self) -> &[Vec<i64>] {
        &self.cartan
    }

    pub fn contains(&self, v: &[Rational]) -> bool {
        self.lookup.contains(v)
    }

    pub fn is_positive(&self, v: &[Rational]) -> bool {
        self.contains(v) && self.simple_coordinates(v).is_some_and(|c| c.iter().all(|x| !x.is_negative()))
    }

    /// Coefficients of `v` in the simple roots, when `v` lies in their span.
    pub fn simple_coordinates(&self, v: &[Rational]) -> Option<RVec> {
        let rhs: RVec = self.simple.iter().map(|a| dot(a, v)).collect();
        let c: RVec = self.gram_inverse.iter().map(|row| dot(row, &rhs)).collect();
        (self.from_simple_coordinates(&c) == v).then_some(c)
    }

    /// `v = Σ c_i α_i`.
    pub fn from_simple_coordinates(&self, c: &[Rational]) -> RVec {
        exact::combination(c, &self.simple)
    }

    /// `ω_i = Σ_k (A^{-1})_{ik} α_k`.
    pub fn fundamental_weights(&self) -> Vec<RVec> {
        let inv = inverse_cartan(self);
        inv.iter().map(|row| self.from_simple_coordinates(row)).collect()
    }

    /// `Σ f_i ω_i`.
    pub fn from_fundamental_coordinates(&self, f: &[Rational]) -> Result<RVec> {
        if f.len() != self.rank {
            return Err(Error::DimensionMismatch(format!(
                "{} fundamental-weight coordinates for a rank {} system",
                f.len(),
                self.rank
            )));
        }
        Ok(exact::combination(f, &self.fundamental_weights()))
    }

    /// `⟨α, β⟩ ≥ 0` for every positive root `β`; the offending root otherwise.
    pub fn dominance_violation(&self, alpha: &[Rational]) -> Option<RVec> {
        self.positive.iter().find(|b| dot(alpha, b).is_negative()).cloned()
    }
}

pub fn build_root_system(family: Family, rank: usize) -> Result<RootSystem> {
    if !admissible(family, rank) {
        return Err(Error::Inadmissible { family: family.to_string(), rank });
    }
    let n = rank;
    let (ambient, roots, simple): (usize, Vec<RVec>, Vec<RVec>) = match family {
        Family::A => {
            let amb = n + 1;
            let mut roots = Vec::new();
            for i in 0..amb {
                for j in 0..amb {
                    if i != j {
                        let mut v = unit(amb, i, rat(1));
                        v[j] = rat(-1);
                        roots.push(v);
                    }
                }
            }
            (amb, roots, chain_simple(amb, n))
        }
        Family::B | Family::C | Family::BC => {
            let mut roots = pm_pairs(n);
            let mut simple = chain_simple(n, n - 1);
            for i in 0..n {
                for s in [1, -1] {
                    if family != Family::C {
                        roots.push(unit(n, i, rat(s)));
                    }
                    if family != Family::B {
                        roots.push(unit(n, i, rat(2 * s)));
                    }
                }
            }
            simple.push(unit(n, n - 1, rat(if family == Family::C { 2 } else { 1 })));
            (n, roots, simple)
        }
        Family::D => {
            let mut simple = chain_simple(n, n - 1);
            let mut last = unit(n, n - 1, rat(1));
            last[n - 2] = rat(1);
            simple.push(last);
            (n, pm_pairs(n), simple)
        }
        Family::E => {
            let e7_normal = {
                let mut v = vec![Rational::zero(); 8];
                v[6] = rat(1);
                v[7] = rat(1);
                v
            };
            let e6_normal = {
                let mut v = vec![Rational::zero(); 8];
                v[5] = rat(1);
                v[6] = rat(-1);
                v
            };
            let mut roots = e8_roots();
            if n <= 7 {
                roots.retain(|r| dot(r, &e7_normal).is_zero());
            }
            if n == 6 {
                roots.retain(|r| dot(r, &e6_normal).is_zero());
            }
            let mut simple = e8_simple();
            simple.truncate(n);
            (8, roots, simple)
        }
        Family::F => {
            let mut roots = pm_pairs(4);
            for i in 0..4 {
                roots.push(unit(4, i, rat(1)));
                roots.push(unit(4, i, rat(-1)));
            }
            roots.extend(half_spin(4, None));
            let mut a1 = unit(4, 1, rat(1));
            a1[2] = rat(-1);
            let mut a2 = unit(4, 2, rat(1));
            a2[3] = rat(-1);
            let a3 = unit(4, 3, rat(1));
            let a4 = vec![half(1), half(-1), half(-1), half(-1)];
            (4, roots, vec![a1, a2, a3, a4])
        }
        Family::G => {
            let mut roots = Vec::new();
            for i in 0..3 {
                for j in 0..3 {
                    if i != j {
                        let mut short = unit(3, i, rat(1));
                        short[j] = rat(-1);
                        roots.push(short);
                    }
                }
                let long: RVec = (0..3).map(|k| if k == i { rat(2) } else { rat(-1) }).collect();
                roots.push(long.iter().map(|x| -x).collect());
                roots.push(long);
            }
            let a1 = vec![rat(1), rat(-1), rat(0)];
            let a2 = vec![rat(-2), rat(1), rat(1)];
            (3, roots, vec![a1, a2])
        }
    };
    let lookup: HashSet<RVec> = roots.iter().cloned().collect();
    let cartan: Vec<Vec<i64>> = simple
        .iter()
        .map(|ai| {
            simple
                .iter()
                .map(|aj| {
                    let q = rat(2) * dot(ai, aj) / dot(aj, aj);
                    assert!(q.is_integer(), "non-integral Cartan entry");
                    q.to_integer()
                })
                .collect()
        })
        .collect();
    let gram: Vec<RVec> = simple.iter().map(|a| simple.iter().map(|b| dot(a, b)).collect()).collect();
    let gram_inverse = exact::inverse(&gram).expect("simple roots are independent");
    let mut sys = RootSystem {
        family,
        rank,
        ambient,
        roots,
        lookup,
        simple,
        positive: Vec::new(),
        cartan,
        gram_inverse,
    };
    let positive: Vec<RVec> = sys
        .roots
        .iter()
        .filter(|r| {
            let c = sys.simple_coordinates(r).expect("roots lie in the span of the simple roots");
            c.iter().all(|x| !x.is_negative())
        })
        .cloned()
        .collect();
    sys.positive = positive;
    Ok(sys)
}

/// Exact inverse of the Cartan matrix.
pub fn inverse_cartan(system: &RootSystem) -> Vec<RVec> {
    let a: Vec<RVec> = system.cartan.iter().map(|row| row.iter().map(|&x| rat(x)).collect()).collect();
    exact::inverse(&a).expect("Cartan matrices of root systems are invertible")
}

/// Number of roots by classification.
pub fn expected_root_count(family: Family, rank: usize) -> usize {
    let n = rank;
    match family {
        Family::A => n * (n + 1),
        Family::B | Family::C => 2 * n * n,
        Family::D => 2 * n * (n - 1),
        Family::E => match n {
            6 => 72,
            7 => 126,
            _ => 240,
        },
        Family::F => 48,
        Family::G => 12,
        Family::BC => 2 * n * n + 2 * n,
    }
}

/// Neither `β + γ` nor `β − γ` is a root.
pub fn strongly_orthogonal_pair(system: &RootSystem, b: &[Rational], c: &[Rational]) -> bool {
    !system.contains(&exact::add(b, c)) && !system.contains(&exact::sub(b, c))
}

/// Positive roots of height `Σ` simple coefficients, highest first, ties in
/// descending lexicographic order of coordinates.
fn by_height(system: &RootSystem, roots: &[RVec]) -> Vec<RVec> {
    let mut keyed: Vec<(Rational, RVec)> = roots
        .iter()
        .map(|r| (system.simple_coordinates(r).unwrap().iter().sum(), r.clone()))
        .collect();
    keyed.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| b.1.cmp(&a.1)));
    keyed.into_iter().map(|(_, r)| r).collect()
}

/// Backtracking search for `size` pairwise strongly orthogonal roots among
/// `candidates`, membership tested against the whole system.
pub(crate) fn strongly_orthogonal_among(system: &RootSystem, candidates: &[RVec], size: usize) -> Option<Vec<RVec>> {
    fn go(system: &RootSystem, cand: &[RVec], start: usize, size: usize, chosen: &mut Vec<usize>) -> bool {
        if chosen.len() == size {
            return true;
        }
        for i in start..cand.len() {
            if cand.len() - i < size - chosen.len() {
                return false;
            }
            if chosen.iter().all(|&j| strongly_orthogonal_pair(system, &cand[i], &cand[j])) {
                chosen.push(i);
                if go(system, cand, i + 1, size, chosen) {
                    return true;
                }
                chosen.pop();
            }
        }
        false
    }
    let ordered = by_height(system, candidates);
    let mut chosen = Vec::new();
    go(system, &ordered, 0, size, &mut chosen).then(|| chosen.iter().map(|&i| ordered[i].clone()).collect())
}

/// Families known to carry `rank` pairwise strongly orthogonal roots.
pub fn has_strongly_orthogonal_basis(family: Family, rank: usize) -> bool {
    match family {
        Family::B | Family::C => rank >= 2,
        Family::D => rank >= 4 && rank.is_multiple_of(2),
        Family::E => rank == 7 || rank == 8,
        Family::F | Family::G => true,
        Family::A | Family::BC => false,
    }
}

/// A set of `rank` pairwise strongly orthogonal positive roots.
pub fn strongly_orthogonal(system: &RootSystem) -> Result<Vec<RVec>> {
    if !has_strongly_orthogonal_basis(system.family, system.rank) {
        return Err(Error::Inadmissible { family: system.family.to_string(), rank: system.rank });
    }
    strongly_orthogonal_among(system, &system.positive, system.rank).ok_or_else(|| {
        Error::SearchFailed(format!("no strongly orthogonal basis found in {}", system.name()))
    })
}

/// Roots `β` with `2β` not a root, positive ones, for the nonreduced family.
pub(crate) fn reduced_positive(system: &RootSystem) -> Vec<RVec> {
    system
        .positive
        .iter()
        .filter(|b| !system.contains(&exact::scale(rat(2), b)))
        .cloned()
        .collect()
}
