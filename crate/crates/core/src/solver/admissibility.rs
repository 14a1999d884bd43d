use serde::{Deserialize, Serialize};

use super::{solve_particular, ParticularSolutionReport, SolverParams};
use crate::error::{Error, Result};
use crate::funcspace::{FunctionRep, SampleGrid};
use crate::transfer::WeightedSystem;

/// Function class the particular solution is required to lie in.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum ClassSelector {
    #[default]
    Bounded,
    ContinuousAt {
        x0: f64,
    },
    Lipschitz {
        constant: f64,
    },
    BoundedVariation {
        max_variation: f64,
    },
    Monotone,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum AdmissibilityVerdict {
    Admissible,
    NotAdmissible { reason: String },
    Undecided { reason: String },
}

impl AdmissibilityVerdict {
    pub fn is_admissible(&self) -> bool {
        matches!(self, AdmissibilityVerdict::Admissible)
    }
}

/// `max |v(x) − v0|` over samples with `|x − x0| ≤ eta`, or `None` if there
/// are no such samples besides `x0` itself.
pub(crate) fn modulus_near(xs: &[f64], vs: &[f64], x0: f64, v0: f64, eta: f64) -> Option<f64> {
    let mut found = false;
    let mut m = 0.0_f64;
    for (&x, &v) in xs.iter().zip(vs) {
        if x != x0 && (x - x0).abs() <= eta {
            found = true;
            m = m.max((v - v0).abs());
        }
    }
    found.then_some(m)
}

/// Continuity verdict from the oscillation on a small and a 16× larger
/// window: `Some(false)` when the small-window oscillation is large and does
/// not shrink with the window.
pub(crate) fn continuity_verdict(xs: &[f64], vs: &[f64], x0: f64, v0: f64, eta_small: f64, tol: f64) -> Option<bool> {
    let small = modulus_near(xs, vs, x0, v0, eta_small)?;
    let big = modulus_near(xs, vs, x0, v0, 16.0 * eta_small)?;
    Some(small <= 10.0 * tol || small < 0.5 * big)
}

pub(crate) fn class_verdict(
    xs: &[f64],
    vs: &[f64],
    f: &FunctionRep,
    step: f64,
    class: &ClassSelector,
    tol: f64,
) -> AdmissibilityVerdict {
    let fail = |reason: String| AdmissibilityVerdict::NotAdmissible { reason };
    match *class {
        ClassSelector::Bounded => AdmissibilityVerdict::Admissible,
        ClassSelector::ContinuousAt { x0 } => {
            let eta = (2.0 * step).max(2f64.powi(-10));
            match continuity_verdict(xs, vs, x0, f.apply(x0), eta, tol) {
                Some(true) => AdmissibilityVerdict::Admissible,
                Some(false) => fail(format!("particular solution jumps at x = {x0}")),
                None => AdmissibilityVerdict::Undecided { reason: format!("no samples near x = {x0}") },
            }
        }
        ClassSelector::Lipschitz { constant } => {
            let worst = xs
                .windows(2)
                .zip(vs.windows(2))
                .map(|(x, v)| (v[1] - v[0]).abs() - constant * (x[1] - x[0]))
                .fold(f64::NEG_INFINITY, f64::max);
            if worst <= 2.0 * tol {
                AdmissibilityVerdict::Admissible
            } else {
                fail(format!("increment exceeds the Lipschitz bound {constant} by {worst}"))
            }
        }
        ClassSelector::BoundedVariation { max_variation } => {
            let var: f64 = vs.windows(2).map(|v| (v[1] - v[0]).abs()).sum();
            if var <= max_variation + tol * xs.len() as f64 {
                AdmissibilityVerdict::Admissible
            } else {
                fail(format!("sampled variation {var} exceeds {max_variation}"))
            }
        }
        ClassSelector::Monotone => {
            let up = vs.windows(2).all(|v| v[1] >= v[0] - 2.0 * tol);
            let down = vs.windows(2).all(|v| v[1] <= v[0] + 2.0 * tol);
            if up || down {
                AdmissibilityVerdict::Admissible
            } else {
                fail("particular solution is not monotone".into())
            }
        }
    }
}

pub(crate) fn verdict_from(
    rep: &ParticularSolutionReport,
    grid: &SampleGrid,
    class: &ClassSelector,
    params: &SolverParams,
) -> AdmissibilityVerdict {
    let tol = params.tol();
    let bg_tol = tol + rep.bg.points.iter().map(|p| p.1.tol).fold(0.0, f64::max);
    if rep.bg.sup > bg_tol {
        return AdmissibilityVerdict::NotAdmissible { reason: format!("B_g does not vanish (sup {})", rep.bg.sup) };
    }
    if !rep.undecided_points.is_empty() {
        return AdmissibilityVerdict::Undecided {
            reason: format!("{} grid points are undecided", rep.undecided_points.len()),
        };
    }
    let mut xs: Vec<f64> = rep.points.iter().map(|p| p.x).collect();
    let mut vs: Vec<f64> = rep.points.iter().map(|p| p.value.value).collect();
    // the pinned boundary values belong to the solution too
    if xs.first() != Some(&0.0) {
        xs.insert(0, 0.0);
        vs.insert(0, rep.b_star.apply(0.0));
    }
    if xs.last() != Some(&1.0) {
        xs.push(1.0);
        vs.push(rep.b_star.apply(1.0));
    }
    class_verdict(&xs, &vs, &rep.b_star, grid.step(), class, tol)
}

/// Decides whether `g` admits a solution whose particular part lies in `class`.
pub fn admissibility_report(
    sys: &WeightedSystem,
    g: &FunctionRep,
    class: &ClassSelector,
    grid: &SampleGrid,
    params: &SolverParams,
) -> Result<AdmissibilityVerdict> {
    match solve_particular(sys, g, grid, params) {
        Ok(rep) => Ok(verdict_from(&rep, grid, class, params)),
        Err(Error::NotSolvableGUnbounded { x, slope }) => Ok(AdmissibilityVerdict::NotAdmissible {
            reason: format!("partial sums of g grow without bound (slope {slope} at x = {x})"),
        }),
        Err(e) => Err(e),
    }
}
