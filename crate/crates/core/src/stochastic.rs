//! Random iteration `x ← f_n(x)` with i.i.d. letters, and the absorption
//! probability `P(f^n(x, ·) → 1)`, which solves the homogeneous equation with
//! boundary values 0 and 1.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::almostlim::LimitStatus;
use crate::error::{Error, Result};
use crate::funcspace::{FunctionRep, SampleGrid};
use crate::rng;
use crate::solver::{
    check_boundary_zero, combine, function_from_points, solve_on_points, solve_particular, ClassSelector, PointValue,
    SolveReport, SolverParams,
};
use crate::transfer::{IterateMethod, WeightedSystem};

/// Largest unresolved fraction `absorption_probability` accepts.
pub const MAX_UNRESOLVED_FRACTION: f64 = 0.05;

const WILSON_Z: f64 = 1.96;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrajectoryConfig {
    pub max_steps: usize,
    /// A state within this distance of an endpoint counts as near it.
    pub absorb_eps: f64,
    /// Consecutive near-endpoint steps needed to declare absorption.
    pub confirm_steps: usize,
    pub seed: u64,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        TrajectoryConfig { max_steps: 10_000, absorb_eps: 1e-9, confirm_steps: 20, seed: 0 }
    }
}

impl TrajectoryConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_steps == 0 || self.confirm_steps == 0 {
            return Err(Error::InvalidParams("max_steps and confirm_steps must be positive".into()));
        }
        if !(self.absorb_eps > 0.0 && self.absorb_eps < 0.5) {
            return Err(Error::InvalidParams(format!("absorb_eps must lie in (0, 1/2), got {}", self.absorb_eps)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryOutcome {
    AbsorbedAtZero,
    AbsorbedAtOne,
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsorptionEstimate {
    pub x: f64,
    /// Fraction absorbed at 1 among resolved trajectories.
    pub p_hat: f64,
    /// Wilson 95% interval.
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_samples: usize,
    pub n_unresolved: usize,
}

impl AbsorptionEstimate {
    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }

    pub fn covers(&self, p: f64) -> bool {
        self.ci_low <= p && p <= self.ci_high
    }
}

fn run_trajectory<R: Rng>(sys: &WeightedSystem, x: f64, cfg: &TrajectoryConfig, rng: &mut R) -> TrajectoryOutcome {
    let mut y = x;
    let mut near: Option<bool> = None;
    let mut streak = 0;
    for _ in 0..=cfg.max_steps {
        // endpoints are fixed by every map
        if y == 0.0 {
            return TrajectoryOutcome::AbsorbedAtZero;
        }
        if y == 1.0 {
            return TrajectoryOutcome::AbsorbedAtOne;
        }
        let side = if y <= cfg.absorb_eps {
            Some(false)
        } else if y >= 1.0 - cfg.absorb_eps {
            Some(true)
        } else {
            None
        };
        if side.is_some() && side == near {
            streak += 1;
        } else {
            streak = usize::from(side.is_some());
        }
        near = side;
        if streak >= cfg.confirm_steps {
            return if side == Some(true) {
                TrajectoryOutcome::AbsorbedAtOne
            } else {
                TrajectoryOutcome::AbsorbedAtZero
            };
        }
        y = sys.maps()[sys.sample_letter(rng)].apply(y);
    }
    TrajectoryOutcome::Unresolved
}

/// One trajectory from `x`, drawn from stream 0 of `(cfg.seed, x)`.
pub fn sample_trajectory(sys: &WeightedSystem, x: f64, cfg: &TrajectoryConfig) -> Result<TrajectoryOutcome> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(x));
    }
    cfg.validate()?;
    Ok(run_trajectory(sys, x, cfg, &mut rng::stream(cfg.seed, rng::point_key(x), 0)))
}

/// Wilson score interval for `successes` out of `n`.
pub fn wilson_interval(successes: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = WILSON_Z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0).min(p), (center + half).min(1.0).max(p))
}

/// Estimates `P(f^n(x, ·) → 1)` from `n_samples` trajectories.
///
/// Trajectory `i` uses stream `i` of `(cfg.seed, x)`, so the estimate does
/// not depend on the number of worker threads.
pub fn absorption_probability(
    sys: &WeightedSystem,
    x: f64,
    n_samples: usize,
    cfg: &TrajectoryConfig,
) -> Result<AbsorptionEstimate> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(x));
    }
    cfg.validate()?;
    if n_samples < 100 {
        return Err(Error::InvalidParams(format!("n_samples must be at least 100, got {n_samples}")));
    }
    if x == 0.0 || x == 1.0 {
        return Ok(AbsorptionEstimate { x, p_hat: x, ci_low: x, ci_high: x, n_samples, n_unresolved: 0 });
    }
    let key = rng::point_key(x);
    let (ones, unresolved) = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| match run_trajectory(sys, x, cfg, &mut rng::stream(cfg.seed, key, i)) {
            TrajectoryOutcome::AbsorbedAtOne => (1usize, 0usize),
            TrajectoryOutcome::AbsorbedAtZero => (0, 0),
            TrajectoryOutcome::Unresolved => (0, 1),
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    if unresolved as f64 > MAX_UNRESOLVED_FRACTION * n_samples as f64 {
        return Err(Error::TooManyUnresolved { unresolved, samples: n_samples });
    }
    let resolved = n_samples - unresolved;
    let p_hat = ones as f64 / resolved as f64;
    let (ci_low, ci_high) = wilson_interval(ones, resolved);
    Ok(AbsorptionEstimate { x, p_hat, ci_low, ci_high, n_samples, n_unresolved: unresolved })
}

fn absorption_value(sys: &WeightedSystem, y: f64, n_samples: usize, cfg: &TrajectoryConfig) -> Result<PointValue> {
    match absorption_probability(sys, y, n_samples, cfg) {
        Ok(e) => Ok(PointValue {
            value: e.p_hat,
            status: LimitStatus::Convergent,
            tol: e.half_width(),
            method: Some(IterateMethod::MonteCarlo),
        }),
        Err(Error::TooManyUnresolved { .. }) => Ok(PointValue {
            value: f64::NAN,
            status: LimitStatus::Undecided,
            tol: 0.0,
            method: Some(IterateMethod::MonteCarlo),
        }),
        Err(e) => Err(e),
    }
}

/// Warnings about the mean map `m(x) = Σ p_n f_n(x)` on the grid: fixed
/// points in `(0, 1)` (uniqueness of the absorption solution is then not
/// guaranteed) and isolated jumps.
pub fn mean_map_warnings(sys: &WeightedSystem, grid: &SampleGrid) -> Vec<String> {
    let xs = grid.points();
    let ms: Vec<f64> = xs.iter().map(|&x| sys.mean_map(x)).collect();
    let mut warnings = Vec::new();
    if let Some(x) = xs.iter().zip(&ms).find(|(&x, &m)| x > 0.0 && x < 1.0 && (m - x).abs() <= 1e-12).map(|p| *p.0) {
        warnings.push(format!("mean map satisfies m(x) = x at x = {x}; the solution may not be unique"));
    }
    let inc: Vec<f64> = ms.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    for i in 0..inc.len() {
        let left = if i > 0 { inc[i - 1] } else { 0.0 };
        let right = inc.get(i + 1).copied().unwrap_or(0.0);
        if inc[i] > 1e-6 && inc[i] > 8.0 * left.max(right) {
            warnings.push(format!("mean map looks discontinuous between {} and {}", xs[i], xs[i + 1]));
            break;
        }
    }
    warnings
}

/// Solves the equation with `φ(0) = 0`, `φ(1) = 1` as the absorption
/// probability plus `B_*`. The number of trajectories per point is
/// `params.sequence.mc_samples`.
pub fn solve_e_probabilistic(
    sys: &WeightedSystem,
    g: &FunctionRep,
    grid: &SampleGrid,
    cfg: &TrajectoryConfig,
    params: &SolverParams,
) -> Result<SolveReport> {
    cfg.validate()?;
    check_boundary_zero(g)?;
    let particular = solve_particular(sys, g, grid, params)?;
    let n = params.sequence.mc_samples;
    let points = solve_on_points(sys, &grid.points(), None, |y| absorption_value(sys, y, n, cfg))?;
    let e0_part = function_from_points(grid, &points, 0.0, 1.0)?;
    let mut report = combine(sys, g, grid, e0_part, &points, particular, &ClassSelector::Bounded, params)?;
    let mut warnings = mean_map_warnings(sys, grid);
    warnings.append(&mut report.warnings);
    report.warnings = warnings;
    Ok(report)
}
