#![allow(dead_code)]

use iterfe_core::{FunctionRep, Interpolation, SampleGrid, UnitMap, WeightedSystem};
use proptest::prelude::*;

/// Lattice size; maps send `{j/K}` into itself, so iterates stay exact.
pub const K: usize = 8;

pub fn lattice_grid() -> SampleGrid {
    SampleGrid::unit(K)
}

/// Piecewise-linear map with knots at `j/K` rising by `incs[j]/K` on cell `j`.
pub fn lattice_map(incs: &[usize]) -> UnitMap {
    assert_eq!(incs.iter().sum::<usize>(), K);
    let mut knots = vec![(0.0, 0.0)];
    let mut acc = 0;
    for (j, &d) in incs.iter().enumerate() {
        acc += d;
        knots.push(((j + 1) as f64 / K as f64, acc as f64 / K as f64));
    }
    UnitMap::piecewise_linear(knots).unwrap()
}

fn counts(cells: &[usize]) -> Vec<usize> {
    let mut c = vec![0; K];
    for &j in cells {
        c[j] += 1;
    }
    c
}

fn normalise(w: &[u32]) -> Vec<f64> {
    let s: u32 = w.iter().sum();
    w.iter().map(|&v| v as f64 / s as f64).collect()
}

/// Nondecreasing lattice maps with random weights.
pub fn increasing_system() -> impl Strategy<Value = WeightedSystem> {
    (1usize..=3)
        .prop_flat_map(|n| {
            (prop::collection::vec(prop::collection::vec(0..K, K), n), prop::collection::vec(1u32..10, n))
        })
        .prop_map(|(cells, w)| {
            let maps = cells.iter().map(|c| lattice_map(&counts(c))).collect();
            WeightedSystem::new(maps, normalise(&w)).unwrap()
        })
}

/// `N` nondecreasing lattice maps with equal weights whose slopes on every
/// cell average to 1, so `Σ p_n f_n(x) = x` and (H₂) holds with equality.
pub fn mean_identity_system() -> impl Strategy<Value = WeightedSystem> {
    (2usize..=3).prop_flat_map(|n| (Just(n), prop::collection::vec((0..n, 0..n, 0..K, 0..K), 0..40))).prop_map(
        |(n, moves)| {
            let mut s = vec![vec![1usize; K]; n];
            for (a, b, i, j) in moves {
                if a != b && i != j && s[a][i] > 0 && s[b][j] > 0 {
                    s[a][i] -= 1;
                    s[a][j] += 1;
                    s[b][j] -= 1;
                    s[b][i] += 1;
                }
            }
            let maps = s.iter().map(|incs| lattice_map(incs)).collect();
            WeightedSystem::new(maps, vec![1.0 / n as f64; n]).unwrap()
        },
    )
}

/// Values on the lattice, linearly interpolated.
pub fn lattice_fn(values: Vec<f64>) -> FunctionRep {
    FunctionRep::grid(values, Interpolation::Linear).unwrap()
}

pub fn lattice_values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, K + 1)
}

pub fn nondecreasing_values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..1.0f64, K + 1).prop_map(|mut v| {
        v.sort_by(f64::total_cmp);
        v
    })
}

/// Lattice values vanishing at both endpoints.
pub fn interior_values() -> impl Strategy<Value = Vec<f64>> {
    lattice_values().prop_map(|mut v| {
        v[0] = 0.0;
        v[K] = 0.0;
        v
    })
}

pub fn squaring() -> WeightedSystem {
    WeightedSystem::new(vec![UnitMap::power(2.0).unwrap()], vec![1.0]).unwrap()
}

pub fn martingale_pair() -> WeightedSystem {
    WeightedSystem::new(vec![UnitMap::power(2.0).unwrap(), UnitMap::mirror_power(2.0).unwrap()], vec![0.5, 0.5])
        .unwrap()
}

pub fn swap() -> WeightedSystem {
    let s = UnitMap::point_swap(vec![(1.0 / 3.0, 2.0 / 3.0)]).unwrap();
    WeightedSystem::periodic(s, vec![0.5, 0.5]).unwrap().with_periodic_order(2).unwrap()
}

/// `x − x²`.
pub fn dyadic_g() -> FunctionRep {
    FunctionRep::poly(vec![0.0, 1.0, -1.0]).unwrap()
}

pub fn on_swap_points(u: f64, v: f64) -> FunctionRep {
    FunctionRep::grid_with_overrides(vec![0.0, 0.0], Interpolation::Linear, vec![(1.0 / 3.0, u), (2.0 / 3.0, v)])
        .unwrap()
}
