//! Whole iterate sequences `(T^m h(x))_{m < len}` and partial sums
//! `(Σ_{l<k} T^l h(x))_{k ≥ 1}`, computed in one pass.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::alpha::{build_alpha_table, AlphaTable};
use super::iterate::{IterateMethod, Support};
use super::system::WeightedSystem;
use crate::error::{Error, Result};
use crate::funcspace::{convex_combination, FunctionRep};
use crate::rng;

const MC_BATCH: u64 = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodSelector {
    /// Alpha table for periodic systems, otherwise exact propagation while the
    /// merged support fits the budget, otherwise Monte Carlo.
    #[default]
    Auto,
    ExactTree,
    AlphaTable,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceConfig {
    pub selector: MethodSelector,
    /// Largest number of distinct support points exact propagation may hold.
    pub support_budget: usize,
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for SequenceConfig {
    fn default() -> Self {
        SequenceConfig { selector: MethodSelector::Auto, support_budget: 1 << 14, mc_samples: 10_000, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SequenceKind {
    /// `values[m] = T^m h(x)`.
    Iterates,
    /// `values[k−1] = Σ_{l<k} T^l h(x)`.
    PartialSums,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterateSequence {
    pub values: Vec<f64>,
    /// 95% half-widths; all zero for exact methods.
    pub half_widths: Vec<f64>,
    pub method: IterateMethod,
}

impl IterateSequence {
    pub fn max_half_width(&self) -> f64 {
        self.half_widths.iter().fold(0.0, |m, v| m.max(*v))
    }

    fn exact(values: Vec<f64>, method: IterateMethod) -> Self {
        let half_widths = vec![0.0; values.len()];
        IterateSequence { values, half_widths, method }
    }
}

fn prefix_sums(values: &mut [f64]) {
    let mut acc = 0.0;
    for v in values.iter_mut() {
        acc += *v;
        *v = acc;
    }
}

fn periodic_iterates(
    sys: &WeightedSystem,
    h: &FunctionRep,
    x: f64,
    len: usize,
    table: &AlphaTable,
) -> Result<Vec<f64>> {
    let orbit: Vec<f64> = sys.maps().iter().map(|f| h.apply(f.apply(x))).collect();
    (0..len).map(|m| Ok(convex_combination(table.row(m)?, &orbit))).collect()
}

/// `None` when the merged support outgrows `budget`.
fn propagated_iterates(sys: &WeightedSystem, h: &FunctionRep, x: f64, len: usize, budget: usize) -> Option<Vec<f64>> {
    let mut support = Support::at(x);
    let mut out = Vec::with_capacity(len);
    for m in 0..len {
        if m > 0 {
            support.step(sys);
            if support.atoms.len() > budget {
                return None;
            }
        }
        out.push(support.expect(h));
        // a single atom at a common fixed point never moves again
        if let [(y, _)] = support.atoms[..] {
            if y == 0.0 || y == 1.0 {
                out.resize(len, out[m]);
                break;
            }
        }
    }
    Some(out)
}

struct Moments {
    sum: Vec<f64>,
    sumsq: Vec<f64>,
    // contributions that stay constant from an index onwards
    tail_sum: Vec<f64>,
    tail_sumsq: Vec<f64>,
}

impl Moments {
    fn new(len: usize) -> Self {
        Moments {
            sum: vec![0.0; len],
            sumsq: vec![0.0; len],
            tail_sum: vec![0.0; len + 1],
            tail_sumsq: vec![0.0; len + 1],
        }
    }

    fn merge(&mut self, other: &Moments) {
        for (a, b) in [
            (&mut self.sum, &other.sum),
            (&mut self.sumsq, &other.sumsq),
            (&mut self.tail_sum, &other.tail_sum),
            (&mut self.tail_sumsq, &other.tail_sumsq),
        ] {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }
}

fn monte_carlo(
    sys: &WeightedSystem,
    h: &FunctionRep,
    x: f64,
    len: usize,
    kind: SequenceKind,
    samples: usize,
    seed: u64,
) -> Result<IterateSequence> {
    if samples < 2 {
        return Err(Error::InvalidParams("Monte Carlo needs at least 2 samples".into()));
    }
    let key = rng::point_key(x);
    let batches = (samples as u64).div_ceil(MC_BATCH);
    let parts: Vec<Moments> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut mo = Moments::new(len);
            let end = ((b + 1) * MC_BATCH).min(samples as u64);
            for s in b * MC_BATCH..end {
                let mut r = rng::stream(seed, key, s);
                let mut y = x;
                let mut acc = 0.0;
                for l in 0..len {
                    let hv = h.apply(y);
                    let v = match kind {
                        SequenceKind::Iterates => hv,
                        SequenceKind::PartialSums => {
                            acc += hv;
                            acc
                        }
                    };
                    let frozen = (y == 0.0 || y == 1.0) && (kind == SequenceKind::Iterates || hv == 0.0);
                    if frozen {
                        mo.tail_sum[l] += v;
                        mo.tail_sumsq[l] += v * v;
                        break;
                    }
                    mo.sum[l] += v;
                    mo.sumsq[l] += v * v;
                    y = sys.maps()[sys.sample_letter(&mut r)].apply(y);
                }
            }
            mo
        })
        .collect();
    let mut total = Moments::new(len);
    for p in &parts {
        total.merge(p);
    }
    let n = samples as f64;
    let (mut ts, mut tq) = (0.0, 0.0);
    let mut values = Vec::with_capacity(len);
    let mut half_widths = Vec::with_capacity(len);
    for l in 0..len {
        ts += total.tail_sum[l];
        tq += total.tail_sumsq[l];
        let s = total.sum[l] + ts;
        let q = total.sumsq[l] + tq;
        let mean = s / n;
        let var = ((q - s * mean) / (n - 1.0)).max(0.0);
        values.push(mean);
        half_widths.push(1.96 * (var / n).sqrt());
    }
    Ok(IterateSequence { values, half_widths, method: IterateMethod::MonteCarlo })
}

/// Computes the first `len` terms of the iterate (or partial-sum) sequence at `x`.
pub fn iterate_sequence(
    sys: &WeightedSystem,
    h: &FunctionRep,
    x: f64,
    len: usize,
    kind: SequenceKind,
    cfg: &SequenceConfig,
    table: Option<&AlphaTable>,
) -> Result<IterateSequence> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(x));
    }
    let finish = |mut values: Vec<f64>, method| {
        if kind == SequenceKind::PartialSums {
            prefix_sums(&mut values);
        }
        IterateSequence::exact(values, method)
    };
    let use_table = match cfg.selector {
        MethodSelector::AlphaTable => {
            sys.periodic_order().ok_or(Error::NotPeriodic)?;
            true
        }
        MethodSelector::Auto => sys.periodic_order().is_some(),
        _ => false,
    };
    if use_table {
        let owned;
        let table = match table {
            Some(t) if t.m_max() + 1 >= len && Some(t.order()) == sys.periodic_order() => t,
            _ => {
                owned = build_alpha_table(sys, len.max(2))?;
                &owned
            }
        };
        return Ok(finish(periodic_iterates(sys, h, x, len, table)?, IterateMethod::AlphaTable));
    }
    if matches!(cfg.selector, MethodSelector::Auto | MethodSelector::ExactTree) {
        match propagated_iterates(sys, h, x, len, cfg.support_budget) {
            Some(values) => return Ok(finish(values, IterateMethod::ExactTree)),
            None if cfg.selector == MethodSelector::ExactTree => {
                return Err(Error::BudgetExceeded { branches: f64::NAN, budget: cfg.support_budget as u64 })
            }
            None => {}
        }
    }
    monte_carlo(sys, h, x, len, kind, cfg.mc_samples, cfg.seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::{Interpolation, UnitMap};
    use crate::transfer::{iterate_exact, DEFAULT_BRANCH_BUDGET};

    fn martingale() -> WeightedSystem {
        WeightedSystem::new(vec![UnitMap::power(2.0).unwrap(), UnitMap::mirror_power(2.0).unwrap()], vec![0.5, 0.5])
            .unwrap()
    }

    #[test]
    fn exact_matches_pointwise_iterates() {
        let sys = martingale();
        let h = FunctionRep::poly(vec![0.0, 0.3, 1.0, -2.0]).unwrap();
        let seq =
            iterate_sequence(&sys, &h, 0.37, 12, SequenceKind::Iterates, &SequenceConfig::default(), None).unwrap();
        assert_eq!(seq.method, IterateMethod::ExactTree);
        for (m, v) in seq.values.iter().enumerate() {
            let e = iterate_exact(&sys, &h, m, 0.37, DEFAULT_BRANCH_BUDGET).unwrap();
            assert!((v - e.value).abs() < 1e-13);
        }
    }

    #[test]
    fn partial_sums_of_squaring() {
        let sys = WeightedSystem::new(vec![UnitMap::power(2.0).unwrap()], vec![1.0]).unwrap();
        let g = FunctionRep::poly(vec![0.0, 1.0, -1.0]).unwrap();
        let seq =
            iterate_sequence(&sys, &g, 0.5, 40, SequenceKind::PartialSums, &SequenceConfig::default(), None).unwrap();
        assert_eq!(seq.values[0], 0.25);
        assert!((seq.values[2] - 0.49609375).abs() < 1e-15);
        assert_eq!(seq.values[39], 0.5);
    }

    #[test]
    fn falls_back_to_monte_carlo() {
        let cfg = SequenceConfig { support_budget: 64, mc_samples: 4_000, seed: 3, ..SequenceConfig::default() };
        let id = FunctionRep::affine(0.0, 1.0);
        let seq = iterate_sequence(&martingale(), &id, 0.5, 300, SequenceKind::Iterates, &cfg, None).unwrap();
        assert_eq!(seq.method, IterateMethod::MonteCarlo);
        assert_eq!(seq.values[0], 0.5);
        for (v, hw) in seq.values.iter().zip(&seq.half_widths) {
            assert!((v - 0.5).abs() <= 2.0 * hw + 1e-12, "{v} ± {hw}");
        }
        // every path has absorbed by the end
        let last = *seq.values.last().unwrap();
        assert!(seq.values[250..].iter().all(|v| *v == last));

        let strict = SequenceConfig { selector: MethodSelector::ExactTree, ..cfg };
        assert!(iterate_sequence(&martingale(), &id, 0.5, 300, SequenceKind::Iterates, &strict, None).is_err());
    }

    #[test]
    fn periodic_partial_sums_grow_linearly() {
        let swap = UnitMap::point_swap(vec![(1.0 / 3.0, 2.0 / 3.0)]).unwrap();
        let sys = WeightedSystem::periodic(swap, vec![0.5, 0.5]).unwrap();
        let g = FunctionRep::grid_with_overrides(
            vec![0.0, 0.0],
            Interpolation::Linear,
            vec![(1.0 / 3.0, 1.0), (2.0 / 3.0, 1.0)],
        )
        .unwrap();
        let seq =
            iterate_sequence(&sys, &g, 1.0 / 3.0, 100, SequenceKind::PartialSums, &SequenceConfig::default(), None)
                .unwrap();
        assert_eq!(seq.method, IterateMethod::AlphaTable);
        assert_eq!(seq.values[3], 4.0);
        assert_eq!(seq.values[99], 100.0);
    }
}
