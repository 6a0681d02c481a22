//! Integration over axis-aligned boxes in the chart.

use rand::Rng as _;
use rayon::prelude::*;

use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Quadrature {
    /// Tensor-product midpoint rule with this many nodes per axis.
    Midpoint { per_axis: usize },
    /// Uniform Monte Carlo with a fixed seed.
    MonteCarlo { samples: usize, seed: u64 },
}

impl Quadrature {
    /// Midpoint with 64 nodes per axis up to two axes, Monte Carlo with
    /// `10^4` samples beyond.
    pub fn default_for(dim: usize) -> Self {
        if dim <= 2 {
            Quadrature::Midpoint { per_axis: 64 }
        } else {
            Quadrature::MonteCarlo { samples: 10_000, seed: 0 }
        }
    }

    /// Nodes in the box `[lo, hi]`, each carrying the same weight.
    pub fn nodes(&self, lo: &[f64], hi: &[f64]) -> Vec<Vec<f64>> {
        assert_eq!(lo.len(), hi.len());
        let dim = lo.len();
        match *self {
            Quadrature::Midpoint { per_axis } => {
                let k = per_axis.max(1);
                let total = k.pow(dim as u32);
                (0..total)
                    .map(|mut idx| {
                        let mut p = vec![0.0; dim];
                        for a in 0..dim {
                            let j = idx % k;
                            idx /= k;
                            p[a] = lo[a] + (hi[a] - lo[a]) * (j as f64 + 0.5) / k as f64;
                        }
                        p
                    })
                    .collect()
            }
            Quadrature::MonteCarlo { samples, seed } => {
                let mut r = rng::stream(seed, 0);
                (0..samples.max(1))
                    .map(|_| (0..dim).map(|a| r.gen_range(lo[a]..hi[a])).collect())
                    .collect()
            }
        }
    }

    /// Mean of `f` over the box. Parallel evaluation, sequential summation.
    pub fn average<F>(&self, lo: &[f64], hi: &[f64], f: F) -> f64
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let nodes = self.nodes(lo, hi);
        let values: Vec<f64> = nodes.par_iter().map(|p| f(p)).collect();
        values.iter().sum::<f64>() / values.len() as f64
    }

    /// Integral of `f` over the box.
    pub fn integrate<F>(&self, lo: &[f64], hi: &[f64], f: F) -> f64
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let volume: f64 = lo.iter().zip(hi).map(|(l, h)| h - l).product();
        volume * self.average(lo, hi, f)
    }

    /// Same rule with a different seed (no effect on midpoint rules).
    pub fn reseeded(&self, seed: u64) -> Self {
        match *self {
            Quadrature::MonteCarlo { samples, .. } => Quadrature::MonteCarlo { samples, seed },
            q => q,
        }
    }
}

/// Lower and upper corners of `I^m = [-1, 1]^m`.
pub fn unit_box(dim: usize) -> (Vec<f64>, Vec<f64>) {
    (vec![-1.0; dim], vec![1.0; dim])
}
