//! Solution operators: `B_h` for the homogeneous equation, `B_*` for the
//! forcing term, and the diagnostics that decide solvability.
//!
//! Every solution is produced pointwise on a [`SampleGrid`]. Each point
//! carries the status of its almost-limit certificate, and certified points
//! carry the fixed-point residual `|φ(x) − Σ p_n φ(f_n(x)) − g(x)|`, where
//! the values at the images `f_n(x)` are computed by the same procedure
//! rather than interpolated.

mod admissibility;
mod e0;
mod particular;
mod periodic;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::almostlim::{AlmostLimitParams, AlmostLimitResult, LimitStatus};
use crate::error::{Error, Result};
use crate::funcspace::{EndpointPair, FunctionRep, SampleGrid};
use crate::transfer::{IterateMethod, SequenceConfig, WeightedSystem, DEFAULT_BRANCH_BUDGET};

pub(crate) use admissibility::modulus_near;
pub use admissibility::{admissibility_report, AdmissibilityVerdict, ClassSelector};
pub use e0::{solve_e0, E0Solution};
pub use particular::{
    bgk_surrogate, check_bg_zero, check_g_bounded, neumann_finite, neumann_uniform, partial_sum_gk, solve_particular,
    BgReport, GFamilyReport, NeumannFinite, NeumannUniform, ParticularMethod, ParticularSolutionReport,
};
pub use periodic::{periodic_closed_form, ClosedFormOutcome};

/// Threshold below which an iterate counts as exactly zero.
pub const ZERO_TERM: f64 = 1e-12;

/// Tolerance on `h(0) = a`, `h(1) = b` and `g(0) = g(1) = 0`.
pub const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverParams {
    pub limit: AlmostLimitParams,
    pub sequence: SequenceConfig,
    /// Budget on `(N+1)^m` for [`crate::transfer::iterate_exact`].
    pub branch_budget: u64,
    /// Truncation tolerance for the uniformly convergent Neumann series.
    pub series_tol: f64,
    /// Largest number of Neumann terms tried.
    pub l_max: usize,
    /// Largest `m` tried when looking for `T^m g = 0`.
    pub finite_m_cap: usize,
    /// Partial sums `g_1 … g_{k_max}` examined by the boundedness check.
    pub k_max: usize,
    /// Any `|g_k|` above this is taken as unbounded.
    pub g_cap: f64,
    /// Steady growth over the second half of `k` larger than this fraction of
    /// the level of `g_k` flags the family as unbounded.
    pub growth_ratio: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            limit: AlmostLimitParams::default(),
            sequence: SequenceConfig::default(),
            branch_budget: DEFAULT_BRANCH_BUDGET,
            series_tol: 1e-10,
            l_max: 4096,
            finite_m_cap: 6,
            k_max: 100,
            g_cap: 1e9,
            growth_ratio: 0.4,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        self.limit.validate()?;
        if self.k_max < 2 {
            return Err(Error::InvalidParams("k_max must be at least 2".into()));
        }
        if !(self.series_tol > 0.0) || self.l_max == 0 {
            return Err(Error::InvalidParams("series_tol and l_max must be positive".into()));
        }
        Ok(())
    }

    pub fn tol(&self) -> f64 {
        self.limit.tol
    }
}

/// A pointwise value with its certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointValue {
    pub value: f64,
    pub status: LimitStatus,
    /// Tolerance the certificate was issued at (or the Monte Carlo half-width).
    pub tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<IterateMethod>,
}

impl PointValue {
    pub fn exact(value: f64) -> Self {
        PointValue { value, status: LimitStatus::Convergent, tol: 0.0, method: None }
    }

    pub fn certified(&self) -> bool {
        self.status.is_certified()
    }

    fn from_limit(r: &AlmostLimitResult) -> Self {
        PointValue { value: r.value.unwrap_or(r.estimate), status: r.status, tol: r.tol, method: r.method }
    }

    /// Sum of two certified parts; the weaker status wins.
    fn plus(&self, other: &PointValue) -> PointValue {
        let status = match (self.status, other.status) {
            (LimitStatus::Unbounded, _) | (_, LimitStatus::Unbounded) => LimitStatus::Unbounded,
            (LimitStatus::Undecided, _) | (_, LimitStatus::Undecided) => LimitStatus::Undecided,
            (LimitStatus::Convergent, LimitStatus::Convergent) => LimitStatus::Convergent,
            _ => LimitStatus::AlmostConvergent,
        };
        let method = match (self.method, other.method) {
            (Some(IterateMethod::MonteCarlo), _) | (_, Some(IterateMethod::MonteCarlo)) => {
                Some(IterateMethod::MonteCarlo)
            }
            (a, b) => a.or(b),
        };
        PointValue { value: self.value + other.value, status, tol: self.tol + other.tol, method }
    }
}

/// One grid point of a solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSolution {
    pub x: f64,
    #[serde(flatten)]
    pub value: PointValue,
    /// `|φ(x) − Σ p_n φ(f_n(x)) − g(x)|`; present when `x` and all its
    /// images are certified.
    pub residual: Option<f64>,
    /// Values at `f_n(x)`, in map order.
    #[serde(skip)]
    pub(crate) images: Vec<PointValue>,
}

fn residual_of(sys: &WeightedSystem, own: &PointValue, images: &[PointValue], g_x: f64) -> Option<f64> {
    if !own.certified() || images.iter().any(|v| !v.certified()) {
        return None;
    }
    let mapped: f64 = sys.weights().iter().zip(images).map(|(p, v)| p * v.value).sum();
    Some((own.value - mapped - g_x).abs())
}

/// Evaluates `eval` at every grid point and at all images, and attaches residuals.
pub(crate) fn solve_on_points<F>(
    sys: &WeightedSystem,
    points: &[f64],
    g: Option<&FunctionRep>,
    eval: F,
) -> Result<Vec<PointSolution>>
where
    F: Fn(f64) -> Result<PointValue> + Sync,
{
    points
        .par_iter()
        .map(|&x| {
            let value = eval(x)?;
            let images = sys.maps().iter().map(|f| eval(f.apply(x))).collect::<Result<Vec<PointValue>>>()?;
            let g_x = g.map_or(0.0, |g| g.apply(x));
            let residual = residual_of(sys, &value, &images, g_x);
            Ok(PointSolution { x, value, residual, images })
        })
        .collect()
}

pub(crate) fn residual_sup(points: &[PointSolution]) -> f64 {
    points.iter().filter_map(|p| p.residual).fold(0.0, f64::max)
}

pub(crate) fn undecided_points(points: &[PointSolution]) -> Vec<f64> {
    points.iter().filter(|p| !p.value.certified()).map(|p| p.x).collect()
}

/// Grid function through the point values, with the boundary values pinned
/// exactly when 0 or 1 is not a grid point.
pub(crate) fn function_from_points(
    grid: &SampleGrid,
    points: &[PointSolution],
    at_zero: f64,
    at_one: f64,
) -> Result<FunctionRep> {
    let xs: Vec<f64> = points.iter().map(|p| p.x).collect();
    let vs: Vec<f64> = points.iter().map(|p| p.value.value).collect();
    let mut pinned = Vec::new();
    if xs.first() != Some(&0.0) {
        pinned.push((0.0, at_zero));
    }
    if xs.last() != Some(&1.0) {
        pinned.push((1.0, at_one));
    }
    grid.function_from_samples(&xs, &vs, &pinned)
}

pub(crate) fn check_boundary_zero(g: &FunctionRep) -> Result<()> {
    for at in [0.0, 1.0] {
        let value = g.apply(at);
        if value.abs() > BOUNDARY_TOL {
            return Err(Error::BoundaryViolation { at, value });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub phi: FunctionRep,
    pub e0_part: FunctionRep,
    pub particular: ParticularSolutionReport,
    pub points: Vec<PointSolution>,
    /// Sup of the residual over certified points.
    pub residual_sup: f64,
    pub boundary: EndpointPair,
    pub admissibility: AdmissibilityVerdict,
    pub undecided_points: Vec<f64>,
    /// Points where the Monte Carlo route was used.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl SolveReport {
    pub fn undecided_fraction(&self) -> f64 {
        if self.points.is_empty() {
            0.0
        } else {
            self.undecided_points.len() as f64 / self.points.len() as f64
        }
    }
}

pub(crate) fn check_endpoints(h: &FunctionRep, endpoints: &EndpointPair) -> Result<()> {
    let (h0, h1) = (h.apply(0.0), h.apply(1.0));
    if (h0 - endpoints.a).abs() > BOUNDARY_TOL || (h1 - endpoints.b).abs() > BOUNDARY_TOL {
        return Err(Error::InvalidFunction(format!(
            "h(0) = {h0}, h(1) = {h1} do not match the endpoints ({}, {})",
            endpoints.a, endpoints.b
        )));
    }
    Ok(())
}

/// Solves `φ = Tφ + g` with `φ(0) = a`, `φ(1) = b` as `φ = B_h + B_*`.
///
/// `h` parameterises the solution set; it must satisfy the boundary
/// conditions. Returns [`Error::NotSolvableGUnbounded`] when the partial
/// sums of `g` grow without bound, in which case no bounded solution exists.
pub fn solve_e(
    sys: &WeightedSystem,
    g: &FunctionRep,
    h: &FunctionRep,
    endpoints: EndpointPair,
    grid: &SampleGrid,
    class: &ClassSelector,
    params: &SolverParams,
) -> Result<SolveReport> {
    check_endpoints(h, &endpoints)?;
    check_boundary_zero(g)?;
    let particular = solve_particular(sys, g, grid, params)?;
    let e0 = solve_e0(sys, h, grid, params)?;
    combine(sys, g, grid, e0.phi, &e0.points, particular, class, params)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn combine(
    sys: &WeightedSystem,
    g: &FunctionRep,
    grid: &SampleGrid,
    e0_part: FunctionRep,
    e0_points: &[PointSolution],
    particular: ParticularSolutionReport,
    class: &ClassSelector,
    params: &SolverParams,
) -> Result<SolveReport> {
    let points: Vec<PointSolution> = e0_points
        .iter()
        .zip(&particular.points)
        .map(|(a, b)| {
            debug_assert_eq!(a.x, b.x);
            let value = a.value.plus(&b.value);
            let images: Vec<PointValue> = a.images.iter().zip(&b.images).map(|(u, v)| u.plus(v)).collect();
            let residual = residual_of(sys, &value, &images, g.apply(a.x));
            PointSolution { x: a.x, value, residual, images }
        })
        .collect();
    let at_zero = e0_part.apply(0.0) + particular.b_star.apply(0.0);
    let at_one = e0_part.apply(1.0) + particular.b_star.apply(1.0);
    let phi = function_from_points(grid, &points, at_zero, at_one)?;
    let admissibility = admissibility::verdict_from(&particular, grid, class, params);
    let warnings = points
        .iter()
        .filter(|p| p.value.method == Some(IterateMethod::MonteCarlo))
        .map(|p| p.x)
        .next()
        .map(|_| vec!["some points were solved by Monte Carlo; their residuals carry sampling error".to_string()])
        .unwrap_or_default();
    Ok(SolveReport {
        boundary: EndpointPair { a: phi.apply(0.0), b: phi.apply(1.0) },
        residual_sup: residual_sup(&points),
        undecided_points: undecided_points(&points),
        phi,
        e0_part,
        particular,
        points,
        admissibility,
        warnings,
    })
}
