//! Fixture systems shared by the benchmarks.

use iterfe_core::{FunctionRep, Interpolation, UnitMap, WeightedSystem};

pub fn squaring() -> WeightedSystem {
    WeightedSystem::new(vec![UnitMap::power(2.0).unwrap()], vec![1.0]).unwrap()
}

/// `{x², 2x − x²}` with equal weights; its mean map is the identity.
pub fn martingale_pair() -> WeightedSystem {
    WeightedSystem::new(vec![UnitMap::power(2.0).unwrap(), UnitMap::mirror_power(2.0).unwrap()], vec![0.5, 0.5])
        .unwrap()
}

/// `{f⁰, …, f³}` for a 4-cycle swap `f`, with non-uniform weights.
pub fn four_cycle() -> WeightedSystem {
    // f cycles 0.2 -> 0.4 -> 0.6 -> 0.8 -> 0.2; as a piecewise description
    // this is the composition of three transpositions.
    let f = UnitMap::composition(vec![
        UnitMap::point_swap(vec![(0.2, 0.4)]).unwrap(),
        UnitMap::point_swap(vec![(0.2, 0.6)]).unwrap(),
        UnitMap::point_swap(vec![(0.2, 0.8)]).unwrap(),
    ])
    .unwrap();
    WeightedSystem::periodic(f, vec![0.1, 0.2, 0.3, 0.4]).unwrap()
}

pub fn bump() -> FunctionRep {
    FunctionRep::grid_with_overrides(vec![0.0, 0.0], Interpolation::Linear, vec![(0.2, 1.0), (0.6, -0.5)]).unwrap()
}
