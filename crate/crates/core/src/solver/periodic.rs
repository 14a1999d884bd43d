use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcspace::{sort_dedup, FunctionRep, SampleGrid};
use crate::transfer::{apply_transfer, WeightedSystem};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum ClosedFormOutcome {
    /// `φ = (1/q) Σ_{n<q} h∘f^n + g`.
    Solved { phi: FunctionRep },
    /// Points whose orbit sum of `g` is not zero.
    NotSolvable { violations: Vec<(f64, f64)> },
}

/// Exact solution for a periodic system with uniform weights.
///
/// There `T` averages over the orbit of `f`, so `T² = T` and the equation is
/// solvable iff the orbit sums of `g` vanish. That condition is checked on the
/// grid and at the feature points of `f`.
pub fn periodic_closed_form(
    sys: &WeightedSystem,
    g: &FunctionRep,
    h: &FunctionRep,
    grid: &SampleGrid,
) -> Result<ClosedFormOutcome> {
    sys.periodic_order().ok_or(Error::NotPeriodic)?;
    if !sys.is_uniform() {
        return Err(Error::NotUniformWeights);
    }
    grid.validate()?;
    let mut probes = grid.points();
    probes.extend(sys.maps().iter().flat_map(|f| f.feature_points()));
    sort_dedup(&mut probes);
    let tol = 1e-12 * g.declared_bound().max(1.0);
    let violations: Vec<(f64, f64)> = probes
        .into_iter()
        .map(|x| (x, sys.maps().iter().map(|f| g.apply(f.apply(x))).sum::<f64>()))
        .filter(|(_, s)| s.abs() > tol)
        .collect();
    if !violations.is_empty() {
        return Ok(ClosedFormOutcome::NotSolvable { violations });
    }
    Ok(ClosedFormOutcome::Solved { phi: FunctionRep::sum(vec![apply_transfer(sys, h), g.clone()]) })
}
