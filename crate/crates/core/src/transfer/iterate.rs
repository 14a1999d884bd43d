use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::system::WeightedSystem;
use crate::error::{Error, Result};
use crate::funcspace::{convex_combination, FnKind, FunctionRep};
use crate::rng;

pub const DEFAULT_BRANCH_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IterateMethod {
    ExactTree,
    AlphaTable,
    MonteCarlo,
}

/// A value of `T^m h(x)`. `half_width` is the 95% interval half-width, zero
/// for the exact methods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterateEstimate {
    pub value: f64,
    pub half_width: f64,
    pub method: IterateMethod,
    pub m: usize,
}

/// `T h = Σ p_n h ∘ f_n`.
pub fn apply_transfer(sys: &WeightedSystem, h: &FunctionRep) -> FunctionRep {
    FunctionRep::from_kind(FnKind::Average {
        weights: sys.weights().to_vec(),
        maps: sys.maps().to_vec(),
        of: Box::new(h.clone()),
    })
    .expect("system maps and weights are already validated")
}

/// Weighted point masses reachable from a start point; branches that land on
/// the same point are merged.
#[derive(Debug, Clone)]
pub(crate) struct Support {
    pub(crate) atoms: Vec<(f64, f64)>,
}

impl Support {
    pub(crate) fn at(x: f64) -> Self {
        Support { atoms: vec![(x, 1.0)] }
    }

    /// One step of the chain: each atom splits over the letters.
    pub(crate) fn step(&mut self, sys: &WeightedSystem) {
        let mut next = Vec::with_capacity(self.atoms.len() * sys.len());
        for &(y, w) in &self.atoms {
            for (map, p) in sys.maps().iter().zip(sys.weights()) {
                if *p > 0.0 {
                    next.push((map.apply(y), w * p));
                }
            }
        }
        next.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(next.len());
        for (y, w) in next {
            match merged.last_mut() {
                Some(last) if last.0 == y => last.1 += w,
                _ => merged.push((y, w)),
            }
        }
        self.atoms = merged;
    }

    pub(crate) fn expect(&self, h: &FunctionRep) -> f64 {
        let weights: Vec<f64> = self.atoms.iter().map(|a| a.1).collect();
        let values: Vec<f64> = self.atoms.iter().map(|a| h.apply(a.0)).collect();
        convex_combination(&weights, &values)
    }
}

/// Exact `T^m h(x)` as the weighted sum over all `(N+1)^m` words
/// `f_{n_1}(…f_{n_m}(x)…)`. Words that reach the same point are summed
/// together, which leaves the value unchanged.
pub fn iterate_exact(
    sys: &WeightedSystem,
    h: &FunctionRep,
    m: usize,
    x: f64,
    branch_budget: u64,
) -> Result<IterateEstimate> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(x));
    }
    let branches = (sys.len() as f64).powi(m.min(i32::MAX as usize) as i32);
    if branches > branch_budget as f64 {
        return Err(Error::BudgetExceeded { branches, budget: branch_budget });
    }
    let mut support = Support::at(x);
    for _ in 0..m {
        support.step(sys);
    }
    Ok(IterateEstimate { value: support.expect(h), half_width: 0.0, method: IterateMethod::ExactTree, m })
}

/// Runs `steps` random letters from `x` on the given stream.
pub(crate) fn walk<R: rand::Rng>(sys: &WeightedSystem, x: f64, steps: usize, rng: &mut R) -> f64 {
    let mut y = x;
    for _ in 0..steps {
        if y == 0.0 || y == 1.0 {
            break;
        }
        y = sys.maps()[sys.sample_letter(rng)].apply(y);
    }
    y
}

pub(crate) fn mean_and_half_width(values: &[f64]) -> (f64, f64) {
    let first = values[0];
    if values.iter().all(|v| *v == first) {
        return (first, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, 1.96 * (var / n).sqrt())
}

/// Monte Carlo estimate of `T^m h(x) = E[h(f^m(x, ·))]`.
pub fn iterate_mc(
    sys: &WeightedSystem,
    h: &FunctionRep,
    m: usize,
    x: f64,
    samples: usize,
    seed: u64,
) -> Result<IterateEstimate> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(x));
    }
    if samples < 2 {
        return Err(Error::InvalidParams("Monte Carlo needs at least 2 samples".into()));
    }
    if m == 0 {
        return Ok(IterateEstimate { value: h.apply(x), half_width: 0.0, method: IterateMethod::MonteCarlo, m });
    }
    let key = rng::point_key(x);
    let values: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|s| {
            let mut r = rng::stream(seed, key, s);
            h.apply(walk(sys, x, m, &mut r))
        })
        .collect();
    let (value, half_width) = mean_and_half_width(&values);
    Ok(IterateEstimate { value, half_width, method: IterateMethod::MonteCarlo, m })
}
