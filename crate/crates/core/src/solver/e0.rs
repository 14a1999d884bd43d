use serde::{Deserialize, Serialize};

use super::{
    function_from_points, residual_sup, solve_on_points, undecided_points, PointSolution, PointValue, SolverParams,
};
use crate::almostlim::almost_limit_of_iterates;
use crate::error::Result;
use crate::funcspace::{FunctionRep, SampleGrid};
use crate::transfer::{build_alpha_table, AlphaTable, WeightedSystem};

/// `B_h` on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct E0Solution {
    pub phi: FunctionRep,
    pub points: Vec<PointSolution>,
    pub residual_sup: f64,
    pub undecided_points: Vec<f64>,
}

pub(crate) struct E0Eval<'a> {
    sys: &'a WeightedSystem,
    h: &'a FunctionRep,
    params: &'a SolverParams,
    table: Option<AlphaTable>,
}

impl<'a> E0Eval<'a> {
    pub(crate) fn new(sys: &'a WeightedSystem, h: &'a FunctionRep, params: &'a SolverParams) -> Result<Self> {
        params.validate()?;
        let table = match sys.periodic_order() {
            Some(_) => Some(build_alpha_table(sys, params.limit.m_max)?),
            None => None,
        };
        Ok(E0Eval { sys, h, params, table })
    }

    pub(crate) fn at(&self, y: f64) -> Result<PointValue> {
        let r = almost_limit_of_iterates(
            self.sys,
            self.h,
            y,
            &self.params.limit,
            &self.params.sequence,
            self.table.as_ref(),
        )?;
        Ok(PointValue::from_limit(&r))
    }
}

/// Solves `φ = Tφ` with `φ(0) = h(0)`, `φ(1) = h(1)` by `φ = B_h`.
///
/// `h` is any bounded function with the wanted boundary values. Points where
/// the iterates are not certified keep their running estimate and are listed
/// in `undecided_points`.
pub fn solve_e0(sys: &WeightedSystem, h: &FunctionRep, grid: &SampleGrid, params: &SolverParams) -> Result<E0Solution> {
    grid.validate()?;
    let eval = E0Eval::new(sys, h, params)?;
    let points = solve_on_points(sys, &grid.points(), None, |y| eval.at(y))?;
    let phi = function_from_points(grid, &points, h.apply(0.0), h.apply(1.0))?;
    Ok(E0Solution { phi, residual_sup: residual_sup(&points), undecided_points: undecided_points(&points), points })
}
