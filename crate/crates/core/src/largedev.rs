//! Large deviations for sums of truncated gaps of an increasing sequence.
//!
//! If `P(ξ_i - ξ_{i-1} ≥ q | past) ≤ C0·e^{-qθ0}` for all `q, i ≥ 1`, then
//! `P((1/n) Σ 1_Q(ξ_i - ξ_{i-1}) ≥ ε) ≤ e^{-θn}` with `θ = εθ0/4` and `Q` given
//! by [`derive_constants`]. This module computes those constants and checks
//! the bound by simulation.

use rand::Rng as _;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{self, Rng};
use crate::stats::binomial_stderr;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LdConstants {
    pub theta: f64,
    pub q: u64,
    /// The real lower bound that `q` rounds up.
    pub q_bound: f64,
}

pub fn derive_constants(c0: f64, theta0: f64, eps: f64) -> Result<LdConstants> {
    if !(c0 >= 1.0 && c0.is_finite()) {
        return Err(Error::InvalidParameter(format!("C0 = {c0} must be at least 1")));
    }
    if !(theta0 > 0.0 && theta0.is_finite()) {
        return Err(Error::InvalidParameter(format!("theta0 = {theta0} must be positive")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("eps = {eps} is not in (0, 1)")));
    }
    let theta = eps * theta0 / 4.0;
    let inner = ((eps * theta0 / 4.0).exp_m1() * (-(-theta0 / 2.0).exp_m1())) / c0;
    let q_bound = 2.0 * inner.ln() / -theta0;
    let q = q_bound.ceil().max(1.0) as u64;
    Ok(LdConstants { theta, q, q_bound })
}

/// `q` if `q ≥ Q`, otherwise `0`.
pub fn truncate(cut: u64, q: u64) -> u64 {
    if q >= cut {
        q
    } else {
        0
    }
}

/// Per-step base `(1 - e^{-θ0/2} + C0 e^{-Qθ0/2}) / (e^{εθ0/2} (1 - e^{-θ0/2}))`.
pub fn rhs_base(c0: f64, theta0: f64, q: u64, eps: f64) -> f64 {
    let one_minus = -(-theta0 / 2.0).exp_m1();
    (one_minus + c0 * (-(q as f64) * theta0 / 2.0).exp()) / ((eps * theta0 / 2.0).exp() * one_minus)
}

/// A random increasing `N`-valued sequence, described by its gaps, with a
/// declared conditional tail certificate `(C0, θ0)`.
pub trait IncrementProcess: Sync {
    fn certificate(&self) -> (f64, f64);

    /// The first `n` gaps of one realization.
    fn sample_gaps(&self, n: usize, rng: &mut Rng) -> Vec<u64>;
}

/// Independent gaps with `P(gap ≥ q) = min(1, C0·e^{-qθ0})`.
#[derive(Debug, Clone, Copy)]
pub struct GeometricGaps {
    pub c0: f64,
    pub theta0: f64,
}

fn saturating_gap(c0: f64, theta0: f64, rng: &mut Rng) -> u64 {
    let u: f64 = 1.0 - rng.gen::<f64>();
    ((c0.ln() - u.ln()) / theta0).floor() as u64
}

impl IncrementProcess for GeometricGaps {
    fn certificate(&self) -> (f64, f64) {
        (self.c0, self.theta0)
    }

    fn sample_gaps(&self, n: usize, rng: &mut Rng) -> Vec<u64> {
        (0..n).map(|_| saturating_gap(self.c0, self.theta0, rng)).collect()
    }
}

/// Every gap equals `gap`; certified with `C0 = e^{gap·θ0}`.
#[derive(Debug, Clone, Copy)]
pub struct ConstantGaps {
    pub gap: u64,
    pub theta0: f64,
}

impl IncrementProcess for ConstantGaps {
    fn certificate(&self) -> (f64, f64) {
        ((self.gap as f64 * self.theta0).exp(), self.theta0)
    }

    fn sample_gaps(&self, n: usize, _: &mut Rng) -> Vec<u64> {
        vec![self.gap; n]
    }
}

/// Two-state chain: after a gap of at least `switch` the next gap is `0`;
/// otherwise it is drawn from the saturated tail `min(1, C0·e^{-qθ0})`.
/// The conditional tail given the past is either `0` or exactly the
/// certificate, so the chain sits on the boundary of the hypothesis.
#[derive(Debug, Clone, Copy)]
pub struct MarkovGaps {
    pub c0: f64,
    pub theta0: f64,
    pub switch: u64,
}

impl IncrementProcess for MarkovGaps {
    fn certificate(&self) -> (f64, f64) {
        (self.c0, self.theta0)
    }

    fn sample_gaps(&self, n: usize, rng: &mut Rng) -> Vec<u64> {
        let mut out = Vec::with_capacity(n);
        let mut rest = false;
        for _ in 0..n {
            let g = if rest { 0 } else { saturating_gap(self.c0, self.theta0, rng) };
            rest = g >= self.switch;
            out.push(g);
        }
        out
    }
}

/// Gap sequences recorded from return-time traces; a realization is a
/// uniformly chosen record. Gaps past the end of a record are unknown and
/// are reported as `u64::MAX`, which counts against the bound.
#[derive(Debug, Clone)]
pub struct RecordedGaps {
    pub records: Vec<Vec<u64>>,
    pub c0: f64,
    pub theta0: f64,
}

impl IncrementProcess for RecordedGaps {
    fn certificate(&self) -> (f64, f64) {
        (self.c0, self.theta0)
    }

    fn sample_gaps(&self, n: usize, rng: &mut Rng) -> Vec<u64> {
        if self.records.is_empty() {
            return vec![u64::MAX; n];
        }
        let rec = &self.records[rng.gen_range(0..self.records.len())];
        (0..n).map(|i| rec.get(i).copied().unwrap_or(u64::MAX)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LdRow {
    pub n: usize,
    pub empirical: f64,
    pub bound: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LdReport {
    pub constants: LdConstants,
    pub rows: Vec<LdRow>,
    /// Tails of the pooled sampled gaps that exceed the certificate by more
    /// than three standard errors.
    pub warnings: Vec<String>,
}

impl LdReport {
    /// Rows where the frequency exceeds `bound + 3·stderr`.
    pub fn violations(&self) -> Vec<LdRow> {
        self.rows
            .iter()
            .filter(|r| r.empirical > r.bound + 3.0 * r.stderr)
            .copied()
            .collect()
    }
}

/// Frequency of `(1/n) Σ_{i ≤ n} 1_Q(gap_i) ≥ ε` over `trials` realizations,
/// for `n = 1, .., n_max`, next to the bound `e^{-θn}`.
pub fn empirical_ld<P: IncrementProcess + ?Sized>(
    process: &P,
    eps: f64,
    n_max: usize,
    trials: u64,
    seed: u64,
) -> Result<LdReport> {
    let (c0, theta0) = process.certificate();
    let constants = derive_constants(c0, theta0, eps)?;
    if n_max == 0 || trials == 0 {
        return Err(Error::InvalidParameter("need n_max ≥ 1 and trials ≥ 1".into()));
    }
    const TAIL_BINS: usize = 64;
    let chunk = 1024u64;
    let chunks = trials.div_ceil(chunk);
    let partial: Vec<(Vec<u64>, Vec<u64>, u64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut events = vec![0u64; n_max];
            let mut tail = vec![0u64; TAIL_BINS];
            let mut pooled = 0u64;
            for trial in c * chunk..((c + 1) * chunk).min(trials) {
                let mut r = rng::stream(seed, trial);
                let gaps = process.sample_gaps(n_max, &mut r);
                let mut sum = 0f64;
                for (i, &g) in gaps.iter().enumerate() {
                    sum += truncate(constants.q, g) as f64;
                    if sum >= eps * (i + 1) as f64 {
                        events[i] += 1;
                    }
                    if g != u64::MAX {
                        pooled += 1;
                        for bin in tail.iter_mut().take((g as usize).min(TAIL_BINS - 1) + 1).skip(1) {
                            *bin += 1;
                        }
                    }
                }
            }
            (events, tail, pooled)
        })
        .collect();
    let mut events = vec![0u64; n_max];
    let mut tail = vec![0u64; TAIL_BINS];
    let mut pooled = 0u64;
    for (e, t, p) in partial {
        for (a, b) in events.iter_mut().zip(e) {
            *a += b;
        }
        for (a, b) in tail.iter_mut().zip(t) {
            *a += b;
        }
        pooled += p;
    }
    let rows = events
        .iter()
        .enumerate()
        .map(|(i, &count)| {
            let p = count as f64 / trials as f64;
            LdRow {
                n: i + 1,
                empirical: p,
                bound: (-constants.theta * (i + 1) as f64).exp(),
                stderr: binomial_stderr(p, trials),
            }
        })
        .collect();
    let mut warnings = Vec::new();
    if pooled > 0 {
        for (q, &count) in tail.iter().enumerate().skip(1) {
            let freq = count as f64 / pooled as f64;
            let cert = (c0 * (-(q as f64) * theta0).exp()).min(1.0);
            let se = binomial_stderr(cert, pooled);
            if freq > cert + 3.0 * se + 1e-12 {
                warnings.push(format!(
                    "P(gap >= {q}) = {freq:.6} exceeds certificate {cert:.6} (stderr {se:.2e})"
                ));
            }
        }
    }
    Ok(LdReport { constants, rows, warnings })
}
